#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesh.hpp"
#include "polynomial.hpp"

namespace dpg {

enum class SpaceKind { H1, Hdiv, L2Vec, L2Sym, L2Skew, TraceH12, TraceHm12, BrokenH1, BrokenHdiv };

inline const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::H1: return "H1";
    case SpaceKind::Hdiv: return "Hdiv";
    case SpaceKind::L2Vec: return "L2vec";
    case SpaceKind::L2Sym: return "L2sym";
    case SpaceKind::L2Skew: return "L2skew";
    case SpaceKind::TraceH12: return "TraceH12";
    case SpaceKind::TraceHm12: return "TraceHm12";
    case SpaceKind::BrokenH1: return "BrokenH1";
    case SpaceKind::BrokenHdiv: return "BrokenHdiv";
  }
  return "?";
}

inline bool is_trace(SpaceKind k) { return k == SpaceKind::TraceH12 || k == SpaceKind::TraceHm12; }
inline bool is_l2(SpaceKind k) { return k == SpaceKind::L2Vec || k == SpaceKind::L2Sym || k == SpaceKind::L2Skew; }

inline int component_count(SpaceKind k) {
  switch (k) {
    case SpaceKind::L2Sym: return 3;
    case SpaceKind::L2Skew: return 1;
    default: return 2;
  }
}

/**
 * A discrete space over a mesh. Global index of (component c, scalar dof g)
 * is c * scalar_size + g. `element_dofs[t]` lists the scalar dofs touching
 * triangle t in local order; trace kinds also fill `edge_dofs`.
 *
 * `order` is the formulation order p for H1, Hdiv and the traces, and the
 * polynomial degree for L2 kinds.
 */
struct DofSpace {
  SpaceKind kind = SpaceKind::H1;
  int order = 1;
  int components = 2;
  Index scalar_size = 0;
  std::vector<std::vector<Index>> element_dofs;
  std::vector<std::vector<Index>> edge_dofs;
  std::vector<char> constrained;
  VectorXd values;

  Index size() const { return scalar_size * components; }
  Index local_size(Index t) const { return Index(element_dofs[t].size()) * components; }

  // Global indices of all local dofs of triangle t (component-major).
  std::vector<Index> global_dofs(Index t) const {
    std::vector<Index> g;
    const auto& m = element_dofs[t];
    g.reserve(m.size() * components);
    for (int c = 0; c < components; ++c)
      for (Index s : m) g.push_back(c * scalar_size + s);
    return g;
  }
  Index num_constrained() const { return Index(std::count(constrained.begin(), constrained.end(), char(1))); }
};

namespace detail {

inline void init_storage(DofSpace& s) {
  s.constrained.assign(std::size_t(s.size()), 0);
  s.values = VectorXd::Zero(s.size());
}

inline Index h1_edge_node(const Mesh& m, int p, Index edge, int k) {
  if (k == 0) return m.edges()[edge].v[0];
  if (k == p) return m.edges()[edge].v[1];
  return m.num_vertices() + edge * (p - 1) + (k - 1);
}

inline std::vector<std::array<int, 3>> interior_lattice(int p) {
  std::vector<std::array<int, 3>> out;
  for (int a = 1; a < p; ++a)
    for (int b = 1; a + b < p; ++b) out.push_back({p - a - b, a, b});
  return out;
}

}  // namespace detail

/// Local node positions of the order-p Lagrange element, matching element_dofs order.
inline std::vector<Vec2> lagrange_nodes(const Mesh& mesh, Index t, int p) {
  const auto c = mesh.corners(t);
  std::vector<Vec2> x(c.begin(), c.end());
  for (int i = 0; i < 3; ++i) {
    const auto& e = mesh.edges()[mesh.triangle_edges(t)[i]];
    const Vec2 a = mesh.vertices()[e.v[0]], b = mesh.vertices()[e.v[1]];
    for (int k = 1; k < p; ++k) x.push_back(a + (double(k) / p) * (b - a));
  }
  for (const auto& l : detail::interior_lattice(p)) x.push_back((l[0] * c[0] + l[1] * c[1] + l[2] * c[2]) / double(p));
  return x;
}

inline DofSpace h1_space(const Mesh& mesh, int p, bool gamma0_constrained) {
  if (p < 1) throw std::invalid_argument("h1_space: p must be >= 1");
  DofSpace s;
  s.kind = SpaceKind::H1;
  s.order = p;
  s.components = 2;
  const Index nint = Index(detail::interior_lattice(p).size());
  s.scalar_size = mesh.num_vertices() + mesh.num_edges() * (p - 1) + mesh.num_triangles() * nint;
  s.element_dofs.resize(mesh.num_triangles());
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    auto& d = s.element_dofs[t];
    for (Index v : mesh.triangles()[t]) d.push_back(v);
    for (int i = 0; i < 3; ++i)
      for (int k = 1; k < p; ++k) d.push_back(detail::h1_edge_node(mesh, p, mesh.triangle_edges(t)[i], k));
    for (Index j = 0; j < nint; ++j) d.push_back(mesh.num_vertices() + mesh.num_edges() * (p - 1) + t * nint + j);
  }
  detail::init_storage(s);
  if (gamma0_constrained)
    for (Index e = 0; e < mesh.num_edges(); ++e) {
      if (mesh.edges()[e].tag != BoundaryTag::Gamma0) continue;
      for (int k = 0; k <= p; ++k)
        for (int c = 0; c < 2; ++c) s.constrained[std::size_t(c * s.scalar_size + detail::h1_edge_node(mesh, p, e, k))] = 1;
    }
  return s;
}

/// RT family: degree <= p, normal traces of degree p-1, dimension p(p+2) per row.
inline DofSpace hdiv_space(const Mesh& mesh, int p, bool gamma1_constrained) {
  if (p < 1) throw std::invalid_argument("hdiv_space: p must be >= 1");
  DofSpace s;
  s.kind = SpaceKind::Hdiv;
  s.order = p;
  s.components = 2;
  const Index nint = 2 * monomial_count(p - 2);
  s.scalar_size = mesh.num_edges() * p + mesh.num_triangles() * nint;
  s.element_dofs.resize(mesh.num_triangles());
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    auto& d = s.element_dofs[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < p; ++j) d.push_back(mesh.triangle_edges(t)[i] * p + j);
    for (Index j = 0; j < nint; ++j) d.push_back(mesh.num_edges() * p + t * nint + j);
  }
  detail::init_storage(s);
  if (gamma1_constrained)
    for (Index e = 0; e < mesh.num_edges(); ++e) {
      if (mesh.edges()[e].tag != BoundaryTag::Gamma1) continue;
      for (int j = 0; j < p; ++j)
        for (int c = 0; c < 2; ++c) s.constrained[std::size_t(c * s.scalar_size + e * p + j)] = 1;
    }
  return s;
}

inline DofSpace l2_space(const Mesh& mesh, int degree, SpaceKind kind) {
  if (degree < 0) throw std::invalid_argument("l2_space: negative degree");
  if (!is_l2(kind)) throw std::invalid_argument("l2_space: not an L2 kind");
  DofSpace s;
  s.kind = kind;
  s.order = degree;
  s.components = component_count(kind);
  const Index n = monomial_count(degree);
  s.scalar_size = mesh.num_triangles() * n;
  s.element_dofs.resize(mesh.num_triangles());
  for (Index t = 0; t < mesh.num_triangles(); ++t)
    for (Index j = 0; j < n; ++j) s.element_dofs[t].push_back(t * n + j);
  detail::init_storage(s);
  return s;
}

inline DofSpace broken_test_space(const Mesh& mesh, SpaceKind kind, int p_enr) {
  if (p_enr < 1) throw std::invalid_argument("broken_test_space: p_enr must be >= 1");
  DofSpace s;
  s.kind = kind;
  s.order = p_enr;
  s.components = 2;
  Index n = 0;
  if (kind == SpaceKind::BrokenH1)
    n = monomial_count(p_enr);
  else if (kind == SpaceKind::BrokenHdiv)
    n = rt_dimension(p_enr);
  else
    throw std::invalid_argument("broken_test_space: kind must be BrokenH1 or BrokenHdiv");
  s.scalar_size = mesh.num_triangles() * n;
  s.element_dofs.resize(mesh.num_triangles());
  for (Index t = 0; t < mesh.num_triangles(); ++t)
    for (Index j = 0; j < n; ++j) s.element_dofs[t].push_back(t * n + j);
  detail::init_storage(s);
  return s;
}

/// Continuous order-p skeleton space (Gamma0 constrained) and per-edge P_{p-1}
/// normal-stress space (Gamma1 constrained). Scalar numbering of the first one
/// coincides with the boundary part of h1_space numbering.
inline std::pair<DofSpace, DofSpace> trace_spaces(const Mesh& mesh, int p) {
  if (p < 1) throw std::invalid_argument("trace_spaces: p must be >= 1");
  DofSpace u;
  u.kind = SpaceKind::TraceH12;
  u.order = p;
  u.components = 2;
  u.scalar_size = mesh.num_vertices() + mesh.num_edges() * (p - 1);
  u.element_dofs.resize(mesh.num_triangles());
  u.edge_dofs.resize(mesh.num_edges());
  for (Index e = 0; e < mesh.num_edges(); ++e)
    for (int k = 0; k <= p; ++k) u.edge_dofs[e].push_back(detail::h1_edge_node(mesh, p, e, k));
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    auto& d = u.element_dofs[t];
    for (Index v : mesh.triangles()[t]) d.push_back(v);
    for (int i = 0; i < 3; ++i)
      for (int k = 1; k < p; ++k) d.push_back(detail::h1_edge_node(mesh, p, mesh.triangle_edges(t)[i], k));
  }
  detail::init_storage(u);

  DofSpace s;
  s.kind = SpaceKind::TraceHm12;
  s.order = p;
  s.components = 2;
  s.scalar_size = mesh.num_edges() * p;
  s.element_dofs.resize(mesh.num_triangles());
  s.edge_dofs.resize(mesh.num_edges());
  for (Index e = 0; e < mesh.num_edges(); ++e)
    for (int j = 0; j < p; ++j) s.edge_dofs[e].push_back(e * p + j);
  for (Index t = 0; t < mesh.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < p; ++j) s.element_dofs[t].push_back(mesh.triangle_edges(t)[i] * p + j);
  detail::init_storage(s);

  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const BoundaryTag tag = mesh.edges()[e].tag;
    for (int c = 0; c < 2; ++c) {
      if (tag == BoundaryTag::Gamma0)
        for (Index g : u.edge_dofs[e]) u.constrained[std::size_t(c * u.scalar_size + g)] = 1;
      if (tag == BoundaryTag::Gamma1)
        for (Index g : s.edge_dofs[e]) s.constrained[std::size_t(c * s.scalar_size + g)] = 1;
    }
  }
  return {u, s};
}

// ---------------------------------------------------------------------------
// Element-local bases

inline ScalarBasis lagrange_basis(const Mesh& mesh, Index t, int p) {
  const auto c = mesh.corners(t);
  ScalarBasis b{make_frame(c), p, {}};
  const ScalarTable V = eval_monomials(b.frame, lagrange_nodes(mesh, t, p), p);
  b.coef = V.val.partialPivLu().inverse();
  return b;
}

/// Conforming RT basis dual to normal moments against shifted Legendre
/// polynomials on each edge (fixed normal, global edge direction) and interior
/// moments against scaled monomials of degree p-2.
inline VectorBasis rt_conforming_basis(const Mesh& mesh, Index t, int p) {
  const auto c = mesh.corners(t);
  VectorBasis raw{make_frame(c), p, rt_raw_coefficients(p)};
  const Index n = rt_dimension(p);
  MatrixXd D(n, n);
  Index row = 0;
  const Rule1D g = gauss_legendre(p + 1);
  for (int i = 0; i < 3; ++i) {
    const auto& e = mesh.edges()[mesh.triangle_edges(t)[i]];
    const EdgeQuadrature q = map_edge_rule(mesh.vertices()[e.v[0]], mesh.vertices()[e.v[1]], g);
    const VectorTable v = raw.eval(q.x);
    const MatrixXd vn = e.normal.x() * v.vx + e.normal.y() * v.vy;
    for (int j = 0; j < p; ++j, ++row) {
      VectorXd wl(q.w.size());
      for (Index k = 0; k < q.w.size(); ++k) wl(k) = q.w(k) * shifted_legendre(p, q.t(k))(j) / e.length;
      D.row(row) = wl.transpose() * vn;
    }
  }
  if (p >= 2) {
    const ElementQuadrature q = map_rule(c, triangle_rule(2 * p));
    const VectorTable v = raw.eval(q.x);
    const ScalarTable m = eval_monomials(raw.frame, q.x, p - 2);
    const double area = mesh.area(t);
    const MatrixXd wm = q.w.asDiagonal() * m.val / area;
    D.middleRows(row, m.val.cols()) = wm.transpose() * v.vx;
    row += m.val.cols();
    D.middleRows(row, m.val.cols()) = wm.transpose() * v.vy;
    row += m.val.cols();
  }
  raw.coef = raw.coef * D.partialPivLu().inverse();
  return raw;
}

/// Local basis of the given space on triangle t (not for trace kinds).
struct LocalBasis {
  SpaceKind kind;
  ScalarBasis scalar;
  VectorBasis vector;
  bool is_vector = false;
};

inline LocalBasis local_basis(const DofSpace& s, const Mesh& mesh, Index t) {
  LocalBasis b{s.kind, {}, {}, false};
  switch (s.kind) {
    case SpaceKind::H1: b.scalar = lagrange_basis(mesh, t, s.order); break;
    case SpaceKind::Hdiv:
      b.vector = rt_conforming_basis(mesh, t, s.order);
      b.is_vector = true;
      break;
    case SpaceKind::BrokenHdiv:
      b.vector = rt_orthonormal_basis(mesh.corners(t), s.order);
      b.is_vector = true;
      break;
    case SpaceKind::BrokenH1:
    case SpaceKind::L2Vec:
    case SpaceKind::L2Sym:
    case SpaceKind::L2Skew: b.scalar = orthonormal_basis(mesh.corners(t), s.order); break;
    default: throw std::invalid_argument(std::string("local_basis: no volume basis for ") + to_string(s.kind));
  }
  return b;
}

/**
 * Tabulated slot functions at points. Per point q:
 *   vec  rows 2q+c          vector value
 *   grad rows 4q+2c+d       d(comp c)/dx_d
 *   ten  rows 4q+2r+d       tensor entry (r, d)
 *   div  rows 2q+r          row divergence
 * Columns follow the space's local (component-major) dof order.
 */
struct FieldEval {
  Index n = 0;
  MatrixXd vec, grad, ten, div;
};

inline FieldEval tabulate(const LocalBasis& b, const std::vector<Vec2>& pts) {
  const Index np = Index(pts.size());
  FieldEval f;
  if (b.is_vector) {
    const VectorTable v = b.vector.eval(pts);
    const Index nv = v.vx.cols();
    f.n = 2 * nv;
    f.ten = MatrixXd::Zero(4 * np, f.n);
    f.div = MatrixXd::Zero(2 * np, f.n);
    for (Index q = 0; q < np; ++q)
      for (int r = 0; r < 2; ++r) {
        f.ten.row(4 * q + 2 * r).segment(r * nv, nv) = v.vx.row(q);
        f.ten.row(4 * q + 2 * r + 1).segment(r * nv, nv) = v.vy.row(q);
        f.div.row(2 * q + r).segment(r * nv, nv) = v.div.row(q);
      }
    return f;
  }
  const ScalarTable s = b.scalar.eval(pts);
  const Index ns = s.val.cols();
  switch (b.kind) {
    case SpaceKind::L2Sym:
      f.n = 3 * ns;
      f.ten = MatrixXd::Zero(4 * np, f.n);
      for (Index q = 0; q < np; ++q) {
        f.ten.row(4 * q + 0).segment(0, ns) = s.val.row(q);
        f.ten.row(4 * q + 3).segment(ns, ns) = s.val.row(q);
        f.ten.row(4 * q + 1).segment(2 * ns, ns) = s.val.row(q);
        f.ten.row(4 * q + 2).segment(2 * ns, ns) = s.val.row(q);
      }
      return f;
    case SpaceKind::L2Skew:
      f.n = ns;
      f.ten = MatrixXd::Zero(4 * np, f.n);
      for (Index q = 0; q < np; ++q) {
        f.ten.row(4 * q + 1) = s.val.row(q);
        f.ten.row(4 * q + 2) = -s.val.row(q);
      }
      return f;
    default:
      f.n = 2 * ns;
      f.vec = MatrixXd::Zero(2 * np, f.n);
      f.grad = MatrixXd::Zero(4 * np, f.n);
      for (Index q = 0; q < np; ++q)
        for (int c = 0; c < 2; ++c) {
          f.vec.row(2 * q + c).segment(c * ns, ns) = s.val.row(q);
          f.grad.row(4 * q + 2 * c).segment(c * ns, ns) = s.dx.row(q);
          f.grad.row(4 * q + 2 * c + 1).segment(c * ns, ns) = s.dy.row(q);
        }
      return f;
  }
}

/// Local indices (into the element's scalar TraceH12 list) of the p+1 nodes on
/// local edge i, in edge-parameter order.
inline std::vector<Index> trace_h12_edge_locals(const Mesh& mesh, Index t, int i, int p) {
  const auto& tri = mesh.triangles()[t];
  const auto& e = mesh.edges()[mesh.triangle_edges(t)[i]];
  auto vlocal = [&](Index v) {
    for (int k = 0; k < 3; ++k)
      if (tri[k] == v) return Index(k);
    throw std::logic_error("trace_h12_edge_locals: vertex not in triangle");
  };
  std::vector<Index> out{vlocal(e.v[0])};
  for (int k = 1; k < p; ++k) out.push_back(3 + i * (p - 1) + (k - 1));
  out.push_back(vlocal(e.v[1]));
  return out;
}

/**
 * Values of the element's local trace functions on local edge i at edge
 * parameters `t` (global edge direction). Rows 2q+c, columns = local trace
 * dofs (component-major), as in DofSpace::global_dofs.
 */
inline MatrixXd trace_edge_table(const DofSpace& s, const Mesh& mesh, Index tri, int i, const VectorXd& t) {
  const Index nq = t.size();
  const Index ns = Index(s.element_dofs[tri].size());
  MatrixXd T = MatrixXd::Zero(2 * nq, 2 * ns);
  const int p = s.order;
  if (s.kind == SpaceKind::TraceH12) {
    const auto loc = trace_h12_edge_locals(mesh, tri, i, p);
    for (Index q = 0; q < nq; ++q) {
      const VectorXd L = lagrange_1d(p, t(q));
      for (int k = 0; k <= p; ++k)
        for (int c = 0; c < 2; ++c) T(2 * q + c, c * ns + loc[k]) = L(k);
    }
  } else if (s.kind == SpaceKind::TraceHm12) {
    for (Index q = 0; q < nq; ++q) {
      const VectorXd L = shifted_legendre(p, t(q));
      for (int j = 0; j < p; ++j)
        for (int c = 0; c < 2; ++c) T(2 * q + c, c * ns + i * p + j) = L(j);
    }
  } else {
    throw std::invalid_argument("trace_edge_table: not a trace space");
  }
  return T;
}

// ---------------------------------------------------------------------------
// Interpolation / projection into spaces. Return full global coefficient vectors.

using VectorField = std::function<Vec2(const Vec2&)>;
using TensorField = std::function<Mat2(const Vec2&)>;

inline VectorXd interpolate_h1(const DofSpace& s, const Mesh& mesh, const VectorField& u) {
  VectorXd x = VectorXd::Zero(s.size());
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto nodes = lagrange_nodes(mesh, t, s.order);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const Vec2 v = u(nodes[j]);
      for (int c = 0; c < 2; ++c) x(c * s.scalar_size + s.element_dofs[t][j]) = v(c);
    }
  }
  return x;
}

/// Canonical RT interpolant (edge normal moments + interior moments) of a tensor field, row-wise.
inline VectorXd interpolate_hdiv(const DofSpace& s, const Mesh& mesh, const TensorField& sigma) {
  const int p = s.order;
  VectorXd x = VectorXd::Zero(s.size());
  const Rule1D g = gauss_legendre(p + 4);
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges()[e];
    const EdgeQuadrature q = map_edge_rule(mesh.vertices()[ed.v[0]], mesh.vertices()[ed.v[1]], g);
    for (Index k = 0; k < q.w.size(); ++k) {
      const Vec2 sn = sigma(q.x[k]) * ed.normal;
      const VectorXd L = shifted_legendre(p, q.t(k));
      for (int j = 0; j < p; ++j)
        for (int r = 0; r < 2; ++r) x(r * s.scalar_size + e * p + j) += q.w(k) * sn(r) * L(j) / ed.length;
    }
  }
  if (p >= 2)
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
      const auto c = mesh.corners(t);
      const ElementQuadrature q = map_rule(c, triangle_rule(2 * p + 4));
      const ScalarTable m = eval_monomials(make_frame(c), q.x, p - 2);
      const Index nm = m.val.cols();
      const double area = mesh.area(t);
      for (Index k = 0; k < q.w.size(); ++k) {
        const Mat2 S = sigma(q.x[k]);
        for (Index j = 0; j < nm; ++j)
          for (int r = 0; r < 2; ++r)
            for (int d = 0; d < 2; ++d)
              x(r * s.scalar_size + s.element_dofs[t][3 * p + d * nm + j]) += q.w(k) * S(r, d) * m.val(k, j) / area;
      }
    }
  return x;
}

/// L2 projection for L2 kinds. Values are given as the 2x2 tensor (sym/skew)
/// or vector (vec) field; coefficients are with respect to orthonormal bases.
inline VectorXd project_l2(const DofSpace& s, const Mesh& mesh, const VectorField& vec, const TensorField& ten) {
  VectorXd x = VectorXd::Zero(s.size());
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto c = mesh.corners(t);
    const ScalarBasis b = orthonormal_basis(c, s.order);
    const ElementQuadrature q = map_rule(c, triangle_rule(2 * s.order + 6));
    const MatrixXd phi = b.eval(q.x).val;
    const Index n = phi.cols();
    for (Index k = 0; k < q.w.size(); ++k) {
      VectorXd comp(s.components);
      if (s.kind == SpaceKind::L2Vec) {
        comp = vec(q.x[k]);
      } else {
        const Mat2 T = ten(q.x[k]);
        if (s.kind == SpaceKind::L2Sym)
          comp << T(0, 0), T(1, 1), 0.5 * (T(0, 1) + T(1, 0));
        else
          comp << 0.5 * (T(0, 1) - T(1, 0));
      }
      for (int cc = 0; cc < s.components; ++cc)
        for (Index j = 0; j < n; ++j) x(cc * s.scalar_size + s.element_dofs[t][j]) += q.w(k) * comp(cc) * phi(k, j);
    }
  }
  return x;
}

/// Nodal interpolant of a displacement in TraceH12.
inline VectorXd interpolate_trace_h12(const DofSpace& s, const Mesh& mesh, const VectorField& u) {
  VectorXd x = VectorXd::Zero(s.size());
  const int p = s.order;
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges()[e];
    const Vec2 a = mesh.vertices()[ed.v[0]], b = mesh.vertices()[ed.v[1]];
    for (int k = 0; k <= p; ++k) {
      const Vec2 v = u(a + (double(k) / p) * (b - a));
      for (int c = 0; c < 2; ++c) x(c * s.scalar_size + s.edge_dofs[e][k]) = v(c);
    }
  }
  return x;
}

/// Edgewise Legendre projection of sigma * n_F into TraceHm12.
inline VectorXd project_trace_hm12(const DofSpace& s, const Mesh& mesh, const TensorField& sigma) {
  VectorXd x = VectorXd::Zero(s.size());
  const int p = s.order;
  const Rule1D g = gauss_legendre(p + 6);
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges()[e];
    const EdgeQuadrature q = map_edge_rule(mesh.vertices()[ed.v[0]], mesh.vertices()[ed.v[1]], g);
    for (Index k = 0; k < q.w.size(); ++k) {
      const Vec2 sn = sigma(q.x[k]) * ed.normal;
      const VectorXd L = shifted_legendre(p, q.t(k));
      for (int j = 0; j < p; ++j)
        for (int c = 0; c < 2; ++c) x(c * s.scalar_size + s.edge_dofs[e][j]) += (2 * j + 1) * q.w(k) / ed.length * sn(c) * L(j);
    }
  }
  return x;
}

/// Gather the local coefficient vector of triangle t.
inline VectorXd gather(const DofSpace& s, Index t, const VectorXd& global) {
  const auto g = s.global_dofs(t);
  VectorXd x(Index(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) x(Index(i)) = global(g[i]);
  return x;
}

}  // namespace dpg
