#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "forms.hpp"
#include "solver.hpp"

namespace dpg {

/// Copy of `mesh` with every boundary edge carrying `tag`.
inline Mesh with_boundary(const Mesh& mesh, BoundaryTag tag) {
  auto tags = mesh.boundary_tags();
  for (auto& kv : tags) kv.second = tag;
  return Mesh(mesh.vertices(), mesh.triangles(), std::move(tags), mesh.generation());
}

/// Dense unbroken discretization: B is test x trial over free dofs, GX / GY the
/// trial / test Riesz Grams.
struct UnbrokenSystem {
  MatrixXd B, GX, GY;
};

namespace detail {

inline DofSpace conforming_test_space(const TestSlot& ts, const Mesh& mesh, int q) {
  switch (ts.kind) {
    case SpaceKind::BrokenH1: return h1_space(mesh, q, true);
    case SpaceKind::BrokenHdiv: return hdiv_space(mesh, q, true);
    default: return l2_space(mesh, q - 1, ts.kind);
  }
}

// Free-index map of a space (constrained -> -1).
inline std::vector<Index> free_map(const DofSpace& s, Index& count) {
  std::vector<Index> m(std::size_t(s.size()), -1);
  for (Index i = 0; i < s.size(); ++i)
    if (!s.constrained[std::size_t(i)]) m[std::size_t(i)] = count++;
  return m;
}

// Coefficients of the conforming local basis in the element's orthonormal broken basis.
inline MatrixXd broken_embedding(const TestSlot& ts, const DofSpace& conf, const Mesh& mesh, Index t, int q) {
  const auto c = mesh.corners(t);
  const ElementQuadrature quad = map_rule(c, triangle_rule(2 * q + 2));
  MatrixXd P;
  if (ts.kind == SpaceKind::BrokenH1) {
    const MatrixXd phi = orthonormal_basis(c, q).eval(quad.x).val;
    const MatrixXd psi = lagrange_basis(mesh, t, q).eval(quad.x).val;
    P = phi.transpose() * quad.w.asDiagonal() * psi;
  } else {
    const VectorTable phi = rt_orthonormal_basis(c, q).eval(quad.x);
    const VectorTable psi = rt_conforming_basis(mesh, t, q).eval(quad.x);
    P = phi.vx.transpose() * quad.w.asDiagonal() * psi.vx + phi.vy.transpose() * quad.w.asDiagonal() * psi.vy;
  }
  (void)conf;
  MatrixXd P2 = MatrixXd::Zero(2 * P.rows(), 2 * P.cols());
  P2.topLeftCorner(P.rows(), P.cols()) = P;
  P2.bottomRightCorner(P.rows(), P.cols()) = P;
  return P2;
}

inline MatrixXd trial_gram(const FieldEval& f, SpaceKind kind, const VectorXd& w) {
  switch (kind) {
    case SpaceKind::H1: return wdot(f.vec, f.vec, w, 2) + wdot(f.grad, f.grad, w, 4);
    case SpaceKind::Hdiv: return wdot(f.ten, f.ten, w, 4) + wdot(f.div, f.div, w, 2);
    case SpaceKind::L2Vec: return wdot(f.vec, f.vec, w, 2);
    default: return wdot(f.ten, f.ten, w, 4);
  }
}

}  // namespace detail

/**
 * Conforming trial (field slots of `f`, homogeneous BCs) against conforming
 * test spaces of order q (L2 test slots: degree q-1). `trial_slots` and
 * `test_slots` select subsets; empty means all.
 */
inline UnbrokenSystem assemble_unbroken(Formulation f, const Mesh& mesh, const MaterialParams& mat, int p, int q,
                                        std::vector<int> trial_slots = {}, std::vector<int> test_slots = {}) {
  const FormulationSpec spec = make_spec(f);
  const Discretization d = make_discretization(spec, mesh, p, {});
  if (trial_slots.empty())
    for (std::size_t s = 0; s < spec.trial.size(); ++s)
      if (!is_trace(spec.trial[s].kind)) trial_slots.push_back(int(s));
  if (test_slots.empty())
    for (std::size_t s = 0; s < spec.test.size(); ++s) test_slots.push_back(int(s));

  // trial numbering
  Index nx = 0;
  std::vector<std::vector<Index>> xmap(spec.trial.size());
  for (int s : trial_slots) xmap[std::size_t(s)] = detail::free_map(d.spaces[std::size_t(s)], nx);
  // test numbering
  Index ny = 0;
  std::vector<DofSpace> yspace;
  std::vector<std::vector<Index>> ymap;
  for (const auto& ts : spec.test) {
    yspace.push_back(detail::conforming_test_space(ts, mesh, q));
    ymap.emplace_back();
  }
  for (int s : test_slots) ymap[std::size_t(s)] = detail::free_map(yspace[std::size_t(s)], ny);

  UnbrokenSystem u{MatrixXd::Zero(ny, nx), MatrixXd::Zero(nx, nx), MatrixXd::Zero(ny, ny)};
  const LocalOptions opt{q, q - 1, false};
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const LocalSystem ls = build_local_system(d, mesh, t, mat, {}, opt);
    // column ranges of field slots within B
    std::vector<Index> col0(spec.trial.size(), 0);
    for (std::size_t s = 0, c = 0; s < spec.trial.size(); ++s)
      if (!is_trace(spec.trial[s].kind)) {
        col0[s] = Index(c);
        c += std::size_t(d.spaces[s].local_size(t));
      }
    // test rows
    Index row = 0;
    for (std::size_t ts = 0; ts < spec.test.size(); ++ts) {
      const TestSlot& slot = spec.test[ts];
      const DofSpace& ys = yspace[ts];
      const Index nb = slot.norm == TestNorm::L2 ? ys.local_size(t)
                                                  : (slot.kind == SpaceKind::BrokenH1 ? 2 * monomial_count(q) : 2 * rt_dimension(q));
      const bool used = std::find(test_slots.begin(), test_slots.end(), int(ts)) != test_slots.end();
      if (used) {
        MatrixXd P = slot.norm == TestNorm::L2 ? MatrixXd::Identity(nb, nb) : detail::broken_embedding(slot, ys, mesh, t, q);
        const MatrixXd Bt = P.transpose() * ls.B.middleRows(row, nb);
        const MatrixXd Gt = P.transpose() * ls.G.block(row, row, nb, nb) * P;
        const auto yg = ys.global_dofs(t);
        for (std::size_t i = 0; i < yg.size(); ++i) {
          const Index yi = ymap[ts][std::size_t(yg[i])];
          if (yi < 0) continue;
          for (std::size_t j = 0; j < yg.size(); ++j) {
            const Index yj = ymap[ts][std::size_t(yg[j])];
            if (yj >= 0) u.GY(yi, yj) += Gt(Index(i), Index(j));
          }
          for (int s : trial_slots) {
            const auto xg = d.spaces[std::size_t(s)].global_dofs(t);
            for (std::size_t j = 0; j < xg.size(); ++j) {
              const Index xj = xmap[std::size_t(s)][std::size_t(xg[j])];
              if (xj >= 0) u.B(yi, xj) += Bt(Index(i), col0[std::size_t(s)] + Index(j));
            }
          }
        }
      }
      row += nb;
    }
    // trial Gram
    const ElementQuadrature quad = map_rule(mesh.corners(t), triangle_rule(2 * q + 2));
    for (int s : trial_slots) {
      const DofSpace& xs = d.spaces[std::size_t(s)];
      const MatrixXd Gx = detail::trial_gram(tabulate(local_basis(xs, mesh, t), quad.x), xs.kind, quad.w);
      const auto xg = xs.global_dofs(t);
      for (std::size_t i = 0; i < xg.size(); ++i) {
        const Index xi = xmap[std::size_t(s)][std::size_t(xg[i])];
        if (xi < 0) continue;
        for (std::size_t j = 0; j < xg.size(); ++j) {
          const Index xj = xmap[std::size_t(s)][std::size_t(xg[j])];
          if (xj >= 0) u.GX(xi, xj) += Gx(Index(i), Index(j));
        }
      }
    }
  }
  return u;
}

struct InfSupReport {
  Formulation formulation = Formulation::Primal;
  int generation = 0;
  int p = 1;
  int test_order = 1;
  double gamma_h = 0.0;     // smallest singular value of L_Y^{-1} B L_X^{-T}
  double lambda_min = 0.0;  // smallest generalized eigenvalue of (B^T GY^{-1} B, GX)
  double lambda_max = 0.0;
  Index trial_dofs = 0, test_dofs = 0;
};

/// gamma_h and the eigenvalue cross-check for a dense unbroken system.
inline void infsup_from_system(const UnbrokenSystem& u, InfSupReport& r) {
  r.trial_dofs = u.B.cols();
  r.test_dofs = u.B.rows();
  Eigen::LLT<MatrixXd> lx(u.GX), ly(u.GY);
  if (lx.info() != Eigen::Success || ly.info() != Eigen::Success)
    throw Error("gram_not_spd", "discrete_infsup: Riesz Gram is not positive definite");
  // M = L_Y^{-1} B L_X^{-T}
  const MatrixXd YB = ly.matrixL().solve(u.B);
  const MatrixXd M = lx.matrixL().solve(YB.transpose()).transpose();
  if (M.rows() < M.cols()) {
    r.gamma_h = 0.0;
  } else {
    Eigen::BDCSVD<MatrixXd> svd(M);
    r.gamma_h = svd.singularValues().minCoeff();
  }
  const MatrixXd A = YB.transpose() * YB;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(A, u.GX, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw Error("eigensolver_failed", "discrete_infsup: generalized eigensolver failed");
  r.lambda_min = ges.eigenvalues().minCoeff();
  r.lambda_max = ges.eigenvalues().maxCoeff();
}

/// Test order used by the lab: p for the dual-mixed and primal pairings, p+1 otherwise.
inline int infsup_test_order(Formulation f, int p) {
  return f == Formulation::DualMixed || f == Formulation::Primal ? p : p + 1;
}

inline InfSupReport discrete_infsup(Formulation f, const Mesh& mesh, const MaterialParams& mat, int p) {
  if (f == Formulation::Galerkin) throw std::invalid_argument("discrete_infsup: use Primal for the Galerkin pairing");
  InfSupReport r;
  r.formulation = f;
  r.generation = mesh.generation();
  r.p = p;
  r.test_order = infsup_test_order(f, p);
  infsup_from_system(assemble_unbroken(f, mesh, mat, p, r.test_order), r);
  return r;
}

struct AuxiliaryConstants {
  double lambda_p = 0.0;         // min ||-grad u + omega||^2 / (||u||^2 + ||omega||^2)
  double lambda_p_omega0 = 0.0;  // same with omega = 0 (Poincare-Friedrichs)
  double c_p = 0.0;              // 1 / sqrt(lambda_p)
  double c_b = 0.0;              // inf-sup of (u, div tau) + (omega, tau) over H_Gamma1(div)
};

inline AuxiliaryConstants auxiliary_constants(const Mesh& mesh, const MaterialParams& mat, int p) {
  AuxiliaryConstants out;
  // u in H1_Gamma0 (order p), omega in L2 skew (degree p-1)
  const DofSpace us = h1_space(mesh, p, true), ws = l2_space(mesh, p - 1, SpaceKind::L2Skew);
  Index n = 0;
  const auto umap = detail::free_map(us, n);
  const Index nu = n;
  const auto wmap = detail::free_map(ws, n);
  MatrixXd A = MatrixXd::Zero(n, n), M = MatrixXd::Zero(n, n);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const ElementQuadrature q = map_rule(mesh.corners(t), triangle_rule(2 * p + 2));
    const FieldEval U = tabulate(local_basis(us, mesh, t), q.x), W = tabulate(local_basis(ws, mesh, t), q.x);
    MatrixXd Z(U.grad.rows(), U.n + W.n), V = MatrixXd::Zero(2 * q.w.size() + 4 * q.w.size(), U.n + W.n);
    Z << -U.grad, W.ten;
    V.topLeftCorner(U.vec.rows(), U.n) = U.vec;
    const MatrixXd Al = detail::wdot(Z, Z, q.w, 4);
    const MatrixXd Ml = detail::wdot(V.topRows(U.vec.rows()), V.topRows(U.vec.rows()), q.w, 2);
    MatrixXd Mw = detail::wdot(W.ten, W.ten, q.w, 4);
    std::vector<Index> g;
    for (Index x : us.global_dofs(t)) g.push_back(umap[std::size_t(x)]);
    for (Index x : ws.global_dofs(t)) g.push_back(wmap[std::size_t(x)]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] < 0) continue;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] < 0) continue;
        A(g[i], g[j]) += Al(Index(i), Index(j));
        if (Index(i) < U.n && Index(j) < U.n) M(g[i], g[j]) += Ml(Index(i), Index(j));
        if (Index(i) >= U.n && Index(j) >= U.n) M(g[i], g[j]) += Mw(Index(i) - U.n, Index(j) - U.n);
      }
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> full(A, M, Eigen::EigenvaluesOnly);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> pf(A.topLeftCorner(nu, nu), M.topLeftCorner(nu, nu), Eigen::EigenvaluesOnly);
  if (full.info() != Eigen::Success || pf.info() != Eigen::Success)
    throw Error("eigensolver_failed", "auxiliary_constants: generalized eigensolver failed");
  out.lambda_p = full.eigenvalues().minCoeff();
  out.lambda_p_omega0 = pf.eigenvalues().minCoeff();
  out.c_p = 1.0 / std::sqrt(std::max(out.lambda_p, 0.0));

  // (u, div tau) + (omega, tau): ultraweak tau-row restricted to the u and omega columns
  const FormulationSpec uw = make_spec(Formulation::Ultraweak);
  InfSupReport r;
  infsup_from_system(assemble_unbroken(Formulation::Ultraweak, mesh, mat, p, p + 1, {uw.slot("u"), uw.slot("omega")}, {0}), r);
  out.c_b = r.gamma_h;
  return out;
}

struct JumpReport {
  double forward_h1 = 0.0;     // max |<tau_n, v>| over random conforming pairs
  double forward_hdiv = 0.0;   // max |<u_hat, tau n>|
  double converse_h1 = 0.0;    // min |pairing| / ||jump|| over both sides of the edge
  double converse_hdiv = 0.0;
  int pairs = 0;
  bool pass = false;
};

namespace detail {

// Sum over elements and edges of <s * trace, w> where w is tabulated per element edge.
template <class EdgeValues>
double skeleton_pairing(const Mesh& mesh, const DofSpace& trace, const VectorXd& tcoef, EdgeValues&& values, bool signed_trace) {
  double sum = 0.0;
  const Rule1D g = gauss_legendre(trace.order + 4);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const VectorXd tl = gather(trace, t, tcoef);
    for (int i = 0; i < 3; ++i) {
      const auto& e = mesh.edges()[mesh.triangle_edges(t)[i]];
      const EdgeQuadrature q = map_edge_rule(mesh.vertices()[e.v[0]], mesh.vertices()[e.v[1]], g);
      const VectorXd tv = trace_edge_table(trace, mesh, t, i, q.t) * tl;
      const double sgn = mesh.normal_sign(t, i);
      const VectorXd wv = values(t, i, q, sgn * e.normal);
      double s = 0.0;
      for (Index k = 0; k < q.w.size(); ++k) s += q.w(k) * tv.segment<2>(2 * k).dot(wv.segment<2>(2 * k));
      sum += signed_trace ? sgn * s : s;
    }
  }
  return sum;
}

inline VectorXd random_free(const DofSpace& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  VectorXd x(s.size());
  for (Index i = 0; i < s.size(); ++i) x(i) = s.constrained[std::size_t(i)] ? 0.0 : U(rng);
  return x;
}

}  // namespace detail

/**
 * Zero-jump checks on the skeleton pairings. Broken H1 side: sigma_n traces vanish
 * on Gamma1, v conforming in H1_Gamma0. H(div) side: u_hat vanishes on
 * Gamma0, tau conforming in H_Gamma1(div). p >= 2 (edge bubbles).
 */
inline JumpReport zero_jump_tests(const Mesh& mesh, int p, int pairs = 50, unsigned seed = 7) {
  if (p < 2) throw std::invalid_argument("zero_jump_tests: p must be >= 2");
  std::mt19937_64 rng(seed);
  JumpReport rep;
  rep.pairs = pairs;
  const DofSpace vs = h1_space(mesh, p, true), ts = hdiv_space(mesh, p, true);
  const auto [uh, sn] = trace_spaces(mesh, p);

  auto h1_values = [&](const VectorXd& v) {
    return [&, v](Index t, int, const EdgeQuadrature& q, const Vec2&) -> VectorXd {
      return tabulate(local_basis(vs, mesh, t), q.x).vec * gather(vs, t, v);
    };
  };
  auto hdiv_values = [&](const VectorXd& tau) {
    return [&, tau](Index t, int, const EdgeQuadrature& q, const Vec2& nK) -> VectorXd {
      return detail::contract_normal(tabulate(local_basis(ts, mesh, t), q.x).ten * gather(ts, t, tau), nK);
    };
  };
  for (int k = 0; k < pairs; ++k) {
    const VectorXd v = detail::random_free(vs, rng), s = detail::random_free(sn, rng);
    rep.forward_h1 = std::max(rep.forward_h1, std::abs(detail::skeleton_pairing(mesh, sn, s, h1_values(v), true)));
    const VectorXd tau = detail::random_free(ts, rng), u = detail::random_free(uh, rng);
    rep.forward_hdiv = std::max(rep.forward_hdiv, std::abs(detail::skeleton_pairing(mesh, uh, u, hdiv_values(tau), false)));
  }

  // an interior edge and a fixed direction for the jump
  Index edge = -1;
  for (Index e = 0; e < mesh.num_edges() && edge < 0; ++e)
    if (!mesh.edges()[e].on_boundary()) edge = e;
  if (edge < 0) throw std::invalid_argument("zero_jump_tests: mesh has no interior edge");
  const Edge& E = mesh.edges()[edge];
  const Vec2 dir(1.0, 0.5);
  rep.converse_h1 = rep.converse_hdiv = std::numeric_limits<double>::infinity();

  for (Index side : {E.left, E.right}) {
    int li = 0;
    while (mesh.triangle_edges(side)[li] != edge) ++li;
    // Broken v: conforming + edge bubble of `side` (vanishes on its other edges).
    const VectorXd v = detail::random_free(vs, rng);
    const auto tri = mesh.triangles()[side];
    const auto c = mesh.corners(side);
    const int ia = (li + 1) % 3, ib = (li + 2) % 3;
    auto bary = [&](const Vec2& x, int k) {
      const Vec2 a = c[(k + 1) % 3], b = c[(k + 2) % 3];
      const Vec2 d1 = b - a, d2 = x - a;
      return (d1.x() * d2.y() - d1.y() * d2.x()) / (2.0 * mesh.area(side));
    };
    (void)tri;
    auto broken_v = [&](Index t, int, const EdgeQuadrature& q, const Vec2&) -> VectorXd {
      VectorXd w = tabulate(local_basis(vs, mesh, t), q.x).vec * gather(vs, t, v);
      if (t == side)
        for (Index k = 0; k < q.w.size(); ++k) w.segment<2>(2 * k) += 4.0 * bary(q.x[k], ia) * bary(q.x[k], ib) * dir;
      return w;
    };
    // detecting trace: constant sigma_n = dir on the edge
    VectorXd s = VectorXd::Zero(sn.size());
    for (int cc = 0; cc < 2; ++cc) s(cc * sn.scalar_size + sn.edge_dofs[edge][0]) = dir(cc);
    const double pair_h1 = std::abs(detail::skeleton_pairing(mesh, sn, s, broken_v, true));
    const double jump_h1 = dir.norm() * std::sqrt(16.0 / 30.0 * E.length);
    rep.converse_h1 = std::min(rep.converse_h1, pair_h1 / jump_h1);

    // Broken tau: conforming + local RT function of `side` with unit normal flux on the edge only.
    const VectorXd tau = detail::random_free(ts, rng);
    const VectorBasis rb = rt_conforming_basis(mesh, side, p);
    const Index bump = Index(li) * p;  // moment j = 0 on local edge li
    auto broken_tau = [&](Index t, int, const EdgeQuadrature& q, const Vec2& nK) -> VectorXd {
      VectorXd w = detail::contract_normal(tabulate(local_basis(ts, mesh, t), q.x).ten * gather(ts, t, tau), nK);
      if (t == side) {
        const VectorTable b = rb.eval(q.x);
        for (Index k = 0; k < q.w.size(); ++k) {
          const double fn = b.vx(k, bump) * nK.x() + b.vy(k, bump) * nK.y();
          w.segment<2>(2 * k) += fn * dir;
        }
      }
      return w;
    };
    VectorXd u = VectorXd::Zero(uh.size());
    for (Index node : uh.edge_dofs[edge])
      for (int cc = 0; cc < 2; ++cc)
        if (!uh.constrained[std::size_t(cc * uh.scalar_size + node)]) u(cc * uh.scalar_size + node) = dir(cc);
    const double pair_hdiv = std::abs(detail::skeleton_pairing(mesh, uh, u, broken_tau, false));
    const double jump_hdiv = dir.norm() * std::sqrt(E.length);
    rep.converse_hdiv = std::min(rep.converse_hdiv, pair_hdiv / jump_hdiv);
  }
  rep.pass = rep.forward_h1 <= 1e-10 && rep.forward_hdiv <= 1e-10 && rep.converse_h1 >= 1e-3 && rep.converse_hdiv >= 1e-3;
  return rep;
}

}  // namespace dpg
