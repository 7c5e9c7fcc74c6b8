#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "material.hpp"
#include "mesh.hpp"
#include "spaces.hpp"

namespace dpg {

enum class Formulation { Strong, Ultraweak, DualMixed, Mixed, Primal, Galerkin };
enum class TestNorm { BrokenH1, BrokenHdiv, L2 };

inline const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::Strong: return "strong";
    case Formulation::Ultraweak: return "ultraweak";
    case Formulation::DualMixed: return "dualmixed";
    case Formulation::Mixed: return "mixed";
    case Formulation::Primal: return "primal";
    case Formulation::Galerkin: return "galerkin";
  }
  return "?";
}

inline Formulation formulation_from_string(const std::string& s) {
  for (auto f : {Formulation::Strong, Formulation::Ultraweak, Formulation::DualMixed, Formulation::Mixed,
                 Formulation::Primal, Formulation::Galerkin})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown formulation '" + s + "'");
}

struct TrialSlot {
  std::string name;
  SpaceKind kind;
};

struct TestSlot {
  std::string name;
  SpaceKind kind;
  TestNorm norm;
};

struct FormulationSpec {
  Formulation id;
  std::vector<TrialSlot> trial;  // field slots first, then trace slots
  std::vector<TestSlot> test;    // empty for Galerkin (test = trial)

  int slot(const std::string& name) const {
    for (std::size_t i = 0; i < trial.size(); ++i)
      if (trial[i].name == name) return int(i);
    return -1;
  }
};

inline FormulationSpec make_spec(Formulation id) {
  using K = SpaceKind;
  const TestSlot tau_l2{"tau", K::L2Sym, TestNorm::L2}, v_l2{"v", K::L2Vec, TestNorm::L2},
      w_l2{"w", K::L2Skew, TestNorm::L2}, tau_br{"tau", K::BrokenHdiv, TestNorm::BrokenHdiv},
      v_br{"v", K::BrokenH1, TestNorm::BrokenH1};
  switch (id) {
    case Formulation::Strong: return {id, {{"sigma", K::Hdiv}, {"u", K::H1}}, {tau_l2, v_l2, w_l2}};
    case Formulation::Ultraweak:
      return {id,
              {{"sigma", K::L2Sym}, {"u", K::L2Vec}, {"omega", K::L2Skew}, {"u_hat", K::TraceH12}, {"sigma_n", K::TraceHm12}},
              {tau_br, v_br}};
    case Formulation::DualMixed:
      return {id, {{"sigma", K::L2Sym}, {"u", K::H1}, {"sigma_n", K::TraceHm12}}, {tau_l2, v_br}};
    case Formulation::Mixed:
      return {id, {{"sigma", K::Hdiv}, {"u", K::L2Vec}, {"omega", K::L2Skew}, {"u_hat", K::TraceH12}}, {tau_br, v_l2, w_l2}};
    case Formulation::Primal: return {id, {{"u", K::H1}, {"sigma_n", K::TraceHm12}}, {v_br}};
    case Formulation::Galerkin: return {id, {{"u", K::H1}}, {}};
  }
  throw std::invalid_argument("make_spec: unknown formulation id");
}

/// Loads and boundary data. Empty functions mean zero.
struct BoundaryData {
  std::function<Vec2(const Vec2&)> f;                 // body force
  std::function<Vec2(const Vec2&)> u0;                // displacement on Gamma0
  std::function<Vec2(const Vec2&, const Vec2&)> g;    // traction on Gamma1 at (x, outward normal)

  Vec2 force(const Vec2& x) const { return f ? f(x) : Vec2::Zero(); }
  Vec2 displacement(const Vec2& x) const { return u0 ? u0(x) : Vec2::Zero(); }
  Vec2 traction(const Vec2& x, const Vec2& n) const { return g ? g(x, n) : Vec2::Zero(); }
};

/**
 * Trial spaces of a formulation on one mesh. Constrained field dofs hold
 * lifting values; constrained trace dofs hold the boundary data projection
 * but enter assembly as zero columns (their data sits in the load).
 */
struct Discretization {
  FormulationSpec spec;
  int p = 1;
  std::vector<DofSpace> spaces;
  std::vector<Index> offsets;
  Index total = 0;

  bool eliminated(int slot, Index dof) const {
    return is_trace(spaces[slot].kind) && spaces[slot].constrained[std::size_t(dof)];
  }
};

inline DofSpace make_trial_space(SpaceKind kind, const Mesh& mesh, int p) {
  switch (kind) {
    case SpaceKind::H1: return h1_space(mesh, p, true);
    case SpaceKind::Hdiv: return hdiv_space(mesh, p, true);
    case SpaceKind::L2Vec:
    case SpaceKind::L2Sym:
    case SpaceKind::L2Skew: return l2_space(mesh, p - 1, kind);
    case SpaceKind::TraceH12: return trace_spaces(mesh, p).first;
    case SpaceKind::TraceHm12: return trace_spaces(mesh, p).second;
    default: throw std::invalid_argument("make_trial_space: not a trial kind");
  }
}

/// Fill constrained values of every slot from the boundary data.
inline void apply_boundary_values(Discretization& d, const Mesh& mesh, const BoundaryData& bc) {
  for (auto& s : d.spaces) {
    if (s.num_constrained() == 0) continue;
    VectorXd full;
    switch (s.kind) {
      case SpaceKind::H1: full = interpolate_h1(s, mesh, [&](const Vec2& x) { return bc.displacement(x); }); break;
      case SpaceKind::TraceH12: full = interpolate_trace_h12(s, mesh, [&](const Vec2& x) { return bc.displacement(x); }); break;
      case SpaceKind::Hdiv:
      case SpaceKind::TraceHm12: {
        // Only boundary edges matter; g is evaluated with the outward (= fixed) normal there.
        const int p = s.order;
        full = VectorXd::Zero(s.size());
        const Rule1D g = gauss_legendre(p + 6);
        for (Index e = 0; e < mesh.num_edges(); ++e) {
          const auto& ed = mesh.edges()[e];
          if (ed.tag != BoundaryTag::Gamma1) continue;
          const EdgeQuadrature q = map_edge_rule(mesh.vertices()[ed.v[0]], mesh.vertices()[ed.v[1]], g);
          for (Index k = 0; k < q.w.size(); ++k) {
            const Vec2 gv = bc.traction(q.x[k], ed.normal);
            const VectorXd L = shifted_legendre(p, q.t(k));
            for (int j = 0; j < p; ++j) {
              const double scale = s.kind == SpaceKind::TraceHm12 ? (2 * j + 1) : 1.0;
              for (int c = 0; c < 2; ++c) full(c * s.scalar_size + e * p + j) += scale * q.w(k) / ed.length * gv(c) * L(j);
            }
          }
        }
        break;
      }
      default: continue;
    }
    for (Index i = 0; i < s.size(); ++i)
      if (s.constrained[std::size_t(i)]) s.values(i) = full(i);
  }
}

inline Discretization make_discretization(const FormulationSpec& spec, const Mesh& mesh, int p, const BoundaryData& bc) {
  if (p < 1) throw std::invalid_argument("make_discretization: p must be >= 1");
  Discretization d{spec, p, {}, {}, 0};
  for (const auto& s : spec.trial) {
    d.offsets.push_back(d.total);
    d.spaces.push_back(make_trial_space(s.kind, mesh, p));
    d.total += d.spaces.back().size();
  }
  apply_boundary_values(d, mesh, bc);
  return d;
}

/// Test orders and treatment of L2 test slots.
struct LocalOptions {
  int test_order = 2;   // broken H1 / H(div) test slots
  int l2_order = 1;     // degree of L2 test slots when Gram-treated
  bool l2_exact = false;  // L2 slots by pointwise least squares instead of a Gram

  static LocalOptions enriched(int p, int dp) { return {p + dp, p - 1 + dp, false}; }
};

/**
 * Element contributions. Rows of B, Bhat, G, l run over Gram-treated test
 * slots (spec order, component-major). Exact-L2 slots go into A, a: rows are
 * sqrt(weight)-scaled pointwise images so that A^T A is their normal matrix.
 */
struct LocalSystem {
  Index element = -1;
  MatrixXd B, Bhat, G;
  VectorXd l;
  MatrixXd A;
  VectorXd a;
  std::vector<Index> trial_cols;  // global trial index for each column of [B | Bhat]
};

namespace detail {

// A^T diag(w repeated k times) B
inline MatrixXd wdot(const MatrixXd& A, const MatrixXd& B, const VectorXd& w, int k) {
  VectorXd wk(w.size() * k);
  for (Index q = 0; q < w.size(); ++q) wk.segment(q * k, k).setConstant(w(q));
  return A.transpose() * wk.asDiagonal() * B;
}

inline MatrixXd apply4(const Eigen::Matrix4d& K, const MatrixXd& M) {
  MatrixXd R(M.rows(), M.cols());
  for (Index q = 0; q < M.rows() / 4; ++q) R.middleRows(4 * q, 4) = K * M.middleRows(4 * q, 4);
  return R;
}

// Contract tensor rows (4 per point) with a fixed normal: rows 2q+r.
inline MatrixXd contract_normal(const MatrixXd& ten, const Vec2& n) {
  const Index nq = ten.rows() / 4;
  MatrixXd R(2 * nq, ten.cols());
  for (Index q = 0; q < nq; ++q)
    for (int r = 0; r < 2; ++r) R.row(2 * q + r) = n.x() * ten.row(4 * q + 2 * r) + n.y() * ten.row(4 * q + 2 * r + 1);
  return R;
}

// Orthonormal coordinates of a tensor-row block: sym -> (xx, yy, sqrt2*xy), skew -> sqrt2*w.
inline MatrixXd tensor_coords(const MatrixXd& T, SpaceKind kind) {
  const Index nq = T.rows() / 4;
  const double r2 = std::numbers::sqrt2;
  if (kind == SpaceKind::L2Sym) {
    MatrixXd R(3 * nq, T.cols());
    for (Index q = 0; q < nq; ++q) {
      R.row(3 * q) = T.row(4 * q);
      R.row(3 * q + 1) = T.row(4 * q + 3);
      R.row(3 * q + 2) = (T.row(4 * q + 1) + T.row(4 * q + 2)) / r2;
    }
    return R;
  }
  MatrixXd R(nq, T.cols());
  for (Index q = 0; q < nq; ++q) R.row(q) = (T.row(4 * q + 1) - T.row(4 * q + 2)) / r2;
  return R;
}

inline int l2_coords(SpaceKind k) { return component_count(k); }

}  // namespace detail

/// Quadrature degree used for element integrals at the given orders.
inline int assembly_degree(int p, const LocalOptions& o) { return 2 * std::max({p, o.test_order, o.l2_order + 1}) + 2; }

/**
 * Everything one element contributes. Trial bases come from `disc`; test
 * bases are element-local orthonormal bases of the requested orders.
 */
inline LocalSystem build_local_system(const Discretization& disc, const Mesh& mesh, Index t, const MaterialParams& mat,
                                      const BoundaryData& bc, const LocalOptions& opt) {
  const FormulationSpec& spec = disc.spec;
  if (spec.id == Formulation::Galerkin) throw std::invalid_argument("build_local_system: Galerkin has no broken test space");
  const auto corners = mesh.corners(t);
  const int deg = assembly_degree(disc.p, opt);
  const ElementQuadrature vq = map_rule(corners, triangle_rule(deg));
  const Rule1D eg = gauss_legendre_for_degree(deg);
  const Index nq = vq.w.size();
  const Eigen::Matrix4d Cm = stiffness_matrix(mat), Sm = compliance_matrix(mat);

  // trial columns
  LocalSystem ls;
  ls.element = t;
  std::vector<Index> col0;  // first local column of each slot
  Index nfield = 0, ntrace = 0;
  std::vector<FieldEval> tr(spec.trial.size());
  for (std::size_t s = 0; s < spec.trial.size(); ++s) {
    const DofSpace& sp = disc.spaces[s];
    const auto g = sp.global_dofs(t);
    if (is_trace(sp.kind)) {
      col0.push_back(nfield + ntrace);
      ntrace += Index(g.size());
    } else {
      col0.push_back(nfield);
      nfield += Index(g.size());
      tr[s] = tabulate(local_basis(sp, mesh, t), vq.x);
    }
    for (Index gi : g) ls.trial_cols.push_back(disc.offsets[s] + gi);
  }
  const Index ncol = nfield + ntrace;
  auto slot = [&](const char* n) { return spec.slot(n); };

  // test bases
  struct TestData {
    const TestSlot* slot = nullptr;
    bool gram = true;
    Index row0 = 0, n = 0;
    FieldEval f;      // broken H1 / Hdiv
    MatrixXd phi;     // L2: scalar orthonormal values (nq x nphi)
    std::unique_ptr<LocalBasis> basis;
  };
  std::vector<TestData> tests;
  Index nrow = 0;
  for (const auto& ts : spec.test) {
    TestData td;
    td.slot = &ts;
    td.gram = ts.norm != TestNorm::L2 || !opt.l2_exact;
    if (ts.norm == TestNorm::L2) {
      if (td.gram) {
        td.phi = orthonormal_basis(corners, opt.l2_order).eval(vq.x).val;
        td.n = td.phi.cols() * component_count(ts.kind);
      }
    } else {
      LocalBasis b{ts.kind, {}, {}, false};
      if (ts.kind == SpaceKind::BrokenH1) {
        b.scalar = orthonormal_basis(corners, opt.test_order);
      } else {
        b.vector = rt_orthonormal_basis(corners, opt.test_order);
        b.is_vector = true;
      }
      td.f = tabulate(b, vq.x);
      td.n = td.f.n;
      td.basis = std::make_unique<LocalBasis>(std::move(b));
    }
    if (td.gram) {
      td.row0 = nrow;
      nrow += td.n;
    }
    tests.push_back(std::move(td));
  }

  ls.B = MatrixXd::Zero(nrow, nfield);
  ls.Bhat = MatrixXd::Zero(nrow, ntrace);
  ls.G = MatrixXd::Zero(nrow, nrow);
  ls.l = VectorXd::Zero(nrow);
  std::vector<MatrixXd> Ablocks;
  std::vector<VectorXd> ablocks;

  // f at volume points, rows 2q+c
  VectorXd fq(2 * nq);
  for (Index q = 0; q < nq; ++q) fq.segment<2>(2 * q) = bc.force(vq.x[q]);

  auto put = [&](MatrixXd& M, const TestData& td, int s, const MatrixXd& blk) {
    M.block(td.row0, col0[s], td.n, blk.cols()) += blk;
  };

  for (auto& td : tests) {
    const TestSlot& ts = *td.slot;
    if (ts.norm == TestNorm::L2) {
      // pointwise image of the trial functions in orthonormal component coordinates
      const int k = detail::l2_coords(ts.kind);
      MatrixXd img = MatrixXd::Zero(k * nq, nfield);
      VectorXd load = VectorXd::Zero(k * nq);
      const int is = slot("sigma"), iu = slot("u");
      if (ts.name == "tau") {
        // sigma - C grad u
        img.middleCols(col0[is], tr[is].n) += detail::tensor_coords(tr[is].ten, SpaceKind::L2Sym);
        img.middleCols(col0[iu], tr[iu].n) -= detail::tensor_coords(detail::apply4(Cm, tr[iu].grad), SpaceKind::L2Sym);
      } else if (ts.name == "v") {
        img.middleCols(col0[is], tr[is].n) = -tr[is].div;
        load = fq;
      } else {
        img.middleCols(col0[is], tr[is].n) = detail::tensor_coords(tr[is].ten, SpaceKind::L2Skew);
      }
      if (td.gram) {
        const Index nphi = td.phi.cols();
        for (int c = 0; c < k; ++c) {
          MatrixXd rows(nq, nfield);
          VectorXd lrow(nq);
          for (Index q = 0; q < nq; ++q) {
            rows.row(q) = img.row(k * q + c);
            lrow(q) = load(k * q + c);
          }
          ls.B.middleRows(td.row0 + c * nphi, nphi) += td.phi.transpose() * vq.w.asDiagonal() * rows;
          ls.l.segment(td.row0 + c * nphi, nphi) += td.phi.transpose() * vq.w.asDiagonal() * lrow;
          ls.G.block(td.row0 + c * nphi, td.row0 + c * nphi, nphi, nphi) = td.phi.transpose() * vq.w.asDiagonal() * td.phi;
        }
      } else {
        MatrixXd A = MatrixXd::Zero(k * nq, ncol);
        VectorXd a(k * nq);
        for (Index q = 0; q < nq; ++q) {
          const double sw = std::sqrt(vq.w(q));
          A.block(k * q, 0, k, nfield) = sw * img.middleRows(k * q, k);
          a.segment(k * q, k) = sw * load.segment(k * q, k);
        }
        Ablocks.push_back(std::move(A));
        ablocks.push_back(std::move(a));
      }
      continue;
    }

    const FieldEval& T = td.f;
    if (ts.kind == SpaceKind::BrokenH1) {
      ls.G.block(td.row0, td.row0, td.n, td.n) = detail::wdot(T.vec, T.vec, vq.w, 2) + detail::wdot(T.grad, T.grad, vq.w, 4);
      ls.l.segment(td.row0, td.n) += detail::wdot(T.vec, fq, vq.w, 2);
      if (spec.id == Formulation::Primal) {
        const int iu = slot("u");
        put(ls.B, td, iu, detail::wdot(T.grad, detail::apply4(Cm, tr[iu].grad), vq.w, 4));
      } else {
        const int is = slot("sigma");
        put(ls.B, td, is, detail::wdot(T.grad, tr[is].ten, vq.w, 4));
      }
    } else {
      ls.G.block(td.row0, td.row0, td.n, td.n) = detail::wdot(T.ten, T.ten, vq.w, 4) + detail::wdot(T.div, T.div, vq.w, 2);
      const int is = slot("sigma"), iu = slot("u"), iw = slot("omega");
      put(ls.B, td, is, detail::wdot(T.ten, detail::apply4(Sm, tr[is].ten), vq.w, 4));
      put(ls.B, td, iw, detail::wdot(T.ten, tr[iw].ten, vq.w, 4));
      put(ls.B, td, iu, detail::wdot(T.div, tr[iu].vec, vq.w, 2));
    }

    // skeleton terms
    for (int i = 0; i < 3; ++i) {
      const auto& e = mesh.edges()[mesh.triangle_edges(t)[i]];
      const EdgeQuadrature q = map_edge_rule(mesh.vertices()[e.v[0]], mesh.vertices()[e.v[1]], eg);
      const double sgn = mesh.normal_sign(t, i);
      const Vec2 nK = sgn * e.normal;
      const FieldEval Te = tabulate(*td.basis, q.x);
      const Index nqe = q.w.size();
      if (ts.kind == SpaceKind::BrokenH1) {
        const int isn = slot("sigma_n");
        const MatrixXd Tt = trace_edge_table(disc.spaces[isn], mesh, t, i, q.t);
        ls.Bhat.block(td.row0, col0[isn] - nfield, td.n, Tt.cols()) -= sgn * detail::wdot(Te.vec, Tt, q.w, 2);
        if (e.tag == BoundaryTag::Gamma1) {
          VectorXd gq(2 * nqe);
          for (Index k = 0; k < nqe; ++k) gq.segment<2>(2 * k) = bc.traction(q.x[k], nK);
          ls.l.segment(td.row0, td.n) += detail::wdot(Te.vec, gq, q.w, 2);
        }
      } else {
        const int iuh = slot("u_hat");
        const MatrixXd Tt = trace_edge_table(disc.spaces[iuh], mesh, t, i, q.t);
        const MatrixXd tn = detail::contract_normal(Te.ten, nK);
        const MatrixXd blk = detail::wdot(tn, Tt, q.w, 2);
        ls.Bhat.block(td.row0, col0[iuh] - nfield, td.n, Tt.cols()) -= blk;
        if (e.tag == BoundaryTag::Gamma0) {
          VectorXd uq(2 * nqe);
          for (Index k = 0; k < nqe; ++k) uq.segment<2>(2 * k) = bc.displacement(q.x[k]);
          ls.l.segment(td.row0, td.n) += detail::wdot(tn, uq, q.w, 2);
        } else {
          // end nodes shared with a Gamma0 edge carry known values
          const DofSpace& us = disc.spaces[iuh];
          const auto g = us.global_dofs(t);
          for (std::size_t j = 0; j < g.size(); ++j)
            if (disc.eliminated(iuh, g[j])) ls.l.segment(td.row0, td.n) += blk.col(Index(j)) * us.values(g[j]);
        }
      }
    }
  }

  Index arows = 0;
  for (const auto& A : Ablocks) arows += A.rows();
  ls.A = MatrixXd::Zero(arows, ncol);
  ls.a = VectorXd::Zero(arows);
  for (std::size_t b = 0, r = 0; b < Ablocks.size(); r += Ablocks[b].rows(), ++b) {
    ls.A.middleRows(Index(r), Ablocks[b].rows()) = Ablocks[b];
    ls.a.segment(Index(r), Ablocks[b].rows()) = ablocks[b];
  }
  return ls;
}

// Thin views used by tests and by the public API.
inline MatrixXd local_field_block(const Discretization& d, const Mesh& m, Index t, const MaterialParams& mat, int dp) {
  return build_local_system(d, m, t, mat, {}, LocalOptions::enriched(d.p, dp)).B;
}
inline MatrixXd local_trace_block(const Discretization& d, const Mesh& m, Index t, int dp) {
  return build_local_system(d, m, t, MaterialParams{}, {}, LocalOptions::enriched(d.p, dp)).Bhat;
}
inline VectorXd local_load(const Discretization& d, const Mesh& m, Index t, const BoundaryData& bc, int dp) {
  return build_local_system(d, m, t, MaterialParams{}, bc, LocalOptions::enriched(d.p, dp)).l;
}
inline MatrixXd local_gram(const Discretization& d, const Mesh& m, Index t, int dp) {
  return build_local_system(d, m, t, MaterialParams{}, {}, LocalOptions::enriched(d.p, dp)).G;
}

/// Local trial coefficients of triangle t in [B | Bhat] column order, with
/// eliminated trace dofs set to zero.
inline VectorXd gather_trial(const Discretization& d, Index t, const std::vector<VectorXd>& slots) {
  std::vector<double> out;
  for (std::size_t s = 0; s < d.spaces.size(); ++s) {
    const auto g = d.spaces[s].global_dofs(t);
    for (Index gi : g) out.push_back(d.eliminated(int(s), gi) ? 0.0 : slots[s](gi));
  }
  return Eigen::Map<VectorXd>(out.data(), Index(out.size()));
}

}  // namespace dpg
