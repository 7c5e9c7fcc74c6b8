#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace dpg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Isotropic plane-strain material. Build through from_lame().
struct MaterialParams {
  double lambda = 1.0;
  double mu = 1.0;
  double nu = 0.25;

  static MaterialParams from_lame(double lambda, double mu) {
    if (!(mu > 0.0) || !(lambda >= 0.0))
      throw std::invalid_argument("material: need mu > 0 and lambda >= 0");
    MaterialParams m;
    m.lambda = lambda;
    m.mu = mu;
    m.nu = lambda / (2.0 * (lambda + mu));
    return m;
  }
};

struct SymTensor2 {
  double xx = 0.0, yy = 0.0, xy = 0.0;

  double trace() const { return xx + yy; }
  Mat2 matrix() const {
    Mat2 m;
    m << xx, xy, xy, yy;
    return m;
  }
  static SymTensor2 sym_part(const Mat2& a) {
    return {a(0, 0), a(1, 1), 0.5 * (a(0, 1) + a(1, 0))};
  }
};

// omega = [[0, w], [-w, 0]]
struct SkewScalar {
  double w = 0.0;

  Mat2 matrix() const {
    Mat2 m;
    m << 0.0, w, -w, 0.0;
    return m;
  }
  static SkewScalar skew_part(const Mat2& a) { return {0.5 * (a(0, 1) - a(1, 0))}; }
};

inline double poisson_ratio(const MaterialParams& m) {
  if (!(m.lambda + m.mu > 0.0)) throw std::invalid_argument("poisson_ratio: lambda + mu must be positive");
  return m.lambda / (2.0 * (m.lambda + m.mu));
}

inline SymTensor2 stiffness_apply(const SymTensor2& e, const MaterialParams& m) {
  const double lt = m.lambda * e.trace();
  return {lt + 2.0 * m.mu * e.xx, lt + 2.0 * m.mu * e.yy, 2.0 * m.mu * e.xy};
}

inline SymTensor2 compliance_apply(const SymTensor2& s, const MaterialParams& m) {
  const double c = m.lambda / (2.0 * (m.lambda + m.mu)) * s.trace();
  const double k = 1.0 / (2.0 * m.mu);
  return {k * (s.xx - c), k * (s.yy - c), k * s.xy};
}

// Full-tensor versions. Both kill the skew part.
inline Mat2 stiffness_apply(const Mat2& a, const MaterialParams& m) {
  return stiffness_apply(SymTensor2::sym_part(a), m).matrix();
}
inline Mat2 compliance_apply(const Mat2& a, const MaterialParams& m) {
  return compliance_apply(SymTensor2::sym_part(a), m).matrix();
}

/// Out-of-plane stress for plane strain.
inline double sigma_zz(const SymTensor2& eps, const MaterialParams& m) { return m.lambda * eps.trace(); }

/// 4x4 matrices acting on row-major flattened 2x2 tensors [a00, a01, a10, a11].
inline Eigen::Matrix4d stiffness_matrix(const MaterialParams& m) {
  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  const double l = m.lambda, mu = m.mu;
  C(0, 0) = l + 2 * mu;
  C(0, 3) = l;
  C(3, 0) = l;
  C(3, 3) = l + 2 * mu;
  C(1, 1) = C(1, 2) = C(2, 1) = C(2, 2) = mu;
  return C;
}

inline Eigen::Matrix4d compliance_matrix(const MaterialParams& m) {
  Eigen::Matrix4d S = Eigen::Matrix4d::Zero();
  const double k = 1.0 / (2.0 * m.mu);
  const double c = m.lambda / (2.0 * (m.lambda + m.mu));
  S(0, 0) = k * (1 - c);
  S(0, 3) = -k * c;
  S(3, 0) = -k * c;
  S(3, 3) = k * (1 - c);
  S(1, 1) = S(1, 2) = S(2, 1) = S(2, 2) = 0.5 * k;
  return S;
}

}  // namespace dpg
