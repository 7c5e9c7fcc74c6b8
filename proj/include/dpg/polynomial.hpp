#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesh.hpp"
#include "quadrature.hpp"

namespace dpg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline int monomial_count(int degree) { return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2; }

// Element-local scaled coordinates s = (x - center) / h.
struct Frame {
  Vec2 center = Vec2::Zero();
  double h = 1.0;

  Vec2 local(const Vec2& x) const { return (x - center) / h; }
};

inline Frame make_frame(const std::array<Vec2, 3>& x) {
  return {(x[0] + x[1] + x[2]) / 3.0,
          std::max({(x[1] - x[0]).norm(), (x[2] - x[1]).norm(), (x[0] - x[2]).norm()})};
}

/// Values and physical derivatives of a set of functions at a set of points
/// (rows = points, cols = functions).
struct ScalarTable {
  MatrixXd val, dx, dy;
};

/// Vector-valued version: x/y components and divergence.
struct VectorTable {
  MatrixXd vx, vy, div;
};

// Monomials ordered by total degree d, then s_x^{d-i} s_y^i for i = 0..d.
inline ScalarTable eval_monomials(const Frame& f, const std::vector<Vec2>& pts, int degree) {
  const int nm = monomial_count(degree);
  const Index np = Index(pts.size());
  ScalarTable m{MatrixXd::Zero(np, nm), MatrixXd::Zero(np, nm), MatrixXd::Zero(np, nm)};
  std::vector<double> px(degree + 1), py(degree + 1);
  for (Index q = 0; q < np; ++q) {
    const Vec2 s = f.local(pts[q]);
    px[0] = py[0] = 1.0;
    for (int k = 1; k <= degree; ++k) {
      px[k] = px[k - 1] * s.x();
      py[k] = py[k - 1] * s.y();
    }
    int col = 0;
    for (int d = 0; d <= degree; ++d)
      for (int i = 0; i <= d; ++i, ++col) {
        const int a = d - i, b = i;
        m.val(q, col) = px[a] * py[b];
        if (a > 0) m.dx(q, col) = a * px[a - 1] * py[b] / f.h;
        if (b > 0) m.dy(q, col) = b * px[a] * py[b - 1] / f.h;
      }
  }
  return m;
}

/// Shifted Legendre polynomials L_0..L_{n-1} on [0,1] at t.
inline VectorXd shifted_legendre(int n, double t) {
  VectorXd L(std::max(n, 0));
  if (n <= 0) return L;
  const double z = 2.0 * t - 1.0;
  L(0) = 1.0;
  if (n > 1) L(1) = z;
  for (int k = 2; k < n; ++k) L(k) = ((2.0 * k - 1.0) * z * L(k - 1) - (k - 1.0) * L(k - 2)) / k;
  return L;
}

/// Degree-p Lagrange basis on [0,1] with equispaced nodes k/p, at t.
inline VectorXd lagrange_1d(int p, double t) {
  VectorXd L(p + 1);
  for (int k = 0; k <= p; ++k) {
    double v = 1.0;
    for (int j = 0; j <= p; ++j)
      if (j != k) v *= (t - double(j) / p) / (double(k - j) / p);
    L(k) = v;
  }
  return L;
}

/// Physical points and weights of a triangle rule on one element.
struct ElementQuadrature {
  std::vector<Vec2> x;
  VectorXd w;
};

inline ElementQuadrature map_rule(const std::array<Vec2, 3>& c, const QuadratureRule& r) {
  const Vec2 a = c[1] - c[0], b = c[2] - c[0];
  const double jac = std::abs(a.x() * b.y() - a.y() * b.x());
  ElementQuadrature q;
  q.w.resize(Index(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& l = r.points[i];
    q.x.push_back(l[0] * c[0] + l[1] * c[1] + l[2] * c[2]);
    q.w(Index(i)) = r.weights[i] * jac;
  }
  return q;
}

/// Points along the segment a -> b with weights including the length.
struct EdgeQuadrature {
  std::vector<Vec2> x;
  VectorXd w;
  VectorXd t;  // parameter in [0,1] from a to b
};

inline EdgeQuadrature map_edge_rule(const Vec2& a, const Vec2& b, const Rule1D& g) {
  EdgeQuadrature q;
  const double len = (b - a).norm();
  const Index n = Index(g.x.size());
  q.w.resize(n);
  q.t.resize(n);
  for (Index i = 0; i < n; ++i) {
    q.t(i) = g.x[i];
    q.x.push_back(a + g.x[i] * (b - a));
    q.w(i) = g.w[i] * len;
  }
  return q;
}

/// Functions expressed in scaled monomials of fixed degree: phi = m(s) * coef.
struct ScalarBasis {
  Frame frame;
  int degree = 0;
  MatrixXd coef;  // monomial_count(degree) x n

  Index size() const { return coef.cols(); }
  ScalarTable eval(const std::vector<Vec2>& pts) const {
    const ScalarTable m = eval_monomials(frame, pts, degree);
    return {m.val * coef, m.dx * coef, m.dy * coef};
  }
};

/// Vector functions with x and y parts stacked in the coefficient rows.
struct VectorBasis {
  Frame frame;
  int degree = 0;
  MatrixXd coef;  // 2 * monomial_count(degree) x n

  Index size() const { return coef.cols(); }
  VectorTable eval(const std::vector<Vec2>& pts) const {
    const ScalarTable m = eval_monomials(frame, pts, degree);
    const Index nm = m.val.cols();
    const auto cx = coef.topRows(nm), cy = coef.bottomRows(nm);
    return {m.val * cx, m.val * cy, m.dx * cx + m.dy * cy};
  }
};

/// L2-orthonormal basis of P_q on one element.
inline ScalarBasis orthonormal_basis(const std::array<Vec2, 3>& c, int q) {
  if (q < 0) throw std::invalid_argument("orthonormal_basis: negative degree");
  ScalarBasis b{make_frame(c), q, {}};
  const ElementQuadrature quad = map_rule(c, triangle_rule(2 * q));
  const ScalarTable m = eval_monomials(b.frame, quad.x, q);
  const MatrixXd M = m.val.transpose() * quad.w.asDiagonal() * m.val;
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw std::runtime_error("orthonormal_basis: singular monomial mass");
  // phi = m L^{-T}
  b.coef = llt.matrixU().solve(MatrixXd::Identity(M.rows(), M.cols()));
  return b;
}

/// Raw Raviart-Thomas spanning set of RT_{k-1} (degree k) in P_k^2 coefficients.
inline MatrixXd rt_raw_coefficients(int k) {
  const int nm = monomial_count(k), nl = monomial_count(k - 1);
  MatrixXd R = MatrixXd::Zero(2 * nm, 2 * nl + k);
  for (int i = 0; i < nl; ++i) {
    R(i, i) = 1.0;
    R(nm + i, nl + i) = 1.0;
  }
  // s * m for homogeneous m of degree k-1: s_x m -> index nl + i, s_y m -> index nl + i + 1
  for (int i = 0; i < k; ++i) {
    R(nl + i, 2 * nl + i) = 1.0;
    R(nm + nl + i + 1, 2 * nl + i) = 1.0;
  }
  return R;
}

inline int rt_dimension(int k) { return k * (k + 2); }

/// RT_{k-1} orthonormalized in the vector L2 inner product. Used for broken test spaces.
inline VectorBasis rt_orthonormal_basis(const std::array<Vec2, 3>& c, int k) {
  if (k < 1) throw std::invalid_argument("rt_orthonormal_basis: order must be >= 1");
  VectorBasis b{make_frame(c), k, rt_raw_coefficients(k)};
  const ElementQuadrature quad = map_rule(c, triangle_rule(2 * k));
  const VectorTable v = b.eval(quad.x);
  const MatrixXd M = v.vx.transpose() * quad.w.asDiagonal() * v.vx + v.vy.transpose() * quad.w.asDiagonal() * v.vy;
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw std::runtime_error("rt_orthonormal_basis: singular mass");
  b.coef = b.coef * MatrixXd(llt.matrixU().solve(MatrixXd::Identity(M.rows(), M.cols())));
  return b;
}

}  // namespace dpg
