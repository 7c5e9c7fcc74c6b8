#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "forms.hpp"
#include "solver.hpp"

namespace dpg {

/// Closed-form benchmark. grad(x)(i, j) = d u_i / d x_j.
struct ExactSolution {
  std::function<Vec2(const Vec2&)> u;
  std::function<Mat2(const Vec2&)> grad;
  std::function<Mat2(const Vec2&)> stress;
  std::function<Vec2(const Vec2&)> f;
  std::optional<Vec2> singular_point;  // stress unbounded here

  BoundaryData boundary_data() const {
    BoundaryData bc;
    bc.f = f;
    bc.u0 = u;
    auto s = stress;
    bc.g = [s](const Vec2& x, const Vec2& n) -> Vec2 { return s(x) * n; };
    return bc;
  }
};

/// u_1 = u_2 = sin(pi x) sin(pi y) on the unit square.
inline ExactSolution smooth_solution_2d(const MaterialParams& m) {
  using std::cos, std::sin;
  constexpr double pi = std::numbers::pi;
  ExactSolution e;
  e.u = [](const Vec2& x) {
    const double s = sin(pi * x.x()) * sin(pi * x.y());
    return Vec2(s, s);
  };
  e.grad = [](const Vec2& x) {
    const double sx = pi * cos(pi * x.x()) * sin(pi * x.y());
    const double sy = pi * sin(pi * x.x()) * cos(pi * x.y());
    Mat2 g;
    g << sx, sy, sx, sy;
    return g;
  };
  auto grad = e.grad;
  e.stress = [m, grad](const Vec2& x) { return stiffness_apply(grad(x), m); };
  e.f = [m](const Vec2& x) {
    const double s = sin(pi * x.x()) * sin(pi * x.y());
    const double c = cos(pi * x.x()) * cos(pi * x.y());
    const double v = pi * pi * ((m.lambda + 3 * m.mu) * s - (m.lambda + m.mu) * c);
    return Vec2(v, v);
  };
  return e;
}

struct SingularParams {
  double a = 0.0;
  double C1 = 0.0;
  double C2 = 0.0, C3 = 1.0, C4 = 0.0;
  double nu = 0.0;
  double residual = 0.0;  // left side of the u_theta condition at (a, C1)
};

namespace detail {
constexpr double three_quarter_pi = 0.75 * std::numbers::pi;

inline double singular_c1(double a, double nu) {
  return (4 * (1 - nu) - (a + 1)) * std::sin((a - 1) * three_quarter_pi) / ((a + 1) * std::sin((a + 1) * three_quarter_pi));
}
inline double singular_equation(double a, double nu) {
  return singular_c1(a, nu) * (a + 1) * std::cos((a + 1) * three_quarter_pi) +
         (4 * (1 - nu) + (a - 1)) * std::cos((a - 1) * three_quarter_pi);
}
// Multiplied through by the C1 denominator; removes the pole at a = 1/3.
inline double singular_equation_cleared(double a, double nu) {
  return (4 * (1 - nu) - (a + 1)) * std::sin((a - 1) * three_quarter_pi) * (a + 1) * std::cos((a + 1) * three_quarter_pi) +
         (4 * (1 - nu) + (a - 1)) * std::cos((a - 1) * three_quarter_pi) * (a + 1) * std::sin((a + 1) * three_quarter_pi);
}
}  // namespace detail

/// Exponent a in (0,1) of the corner solution on the 3pi/2 wedge, by bisection.
inline SingularParams solve_singularity_exponent(double nu) {
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("solve_singularity_exponent: need 0 <= nu < 0.5");
  const double eps = 1e-6;
  double lo = eps, hi = 1.0 - eps;
  double flo = detail::singular_equation_cleared(lo, nu), fhi = detail::singular_equation_cleared(hi, nu);
  if (flo * fhi > 0.0) {
    std::ostringstream os;
    os.precision(17);
    os << "solve_singularity_exponent: no sign change on [" << lo << ", " << hi << "], residuals " << flo << ", " << fhi;
    throw Error("no_bracket", os.str());
  }
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo < 1e-15) break;
    const double fm = detail::singular_equation_cleared(mid, nu);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  SingularParams sp;
  sp.nu = nu;
  sp.a = 0.5 * (lo + hi);
  sp.C1 = detail::singular_c1(sp.a, nu);
  sp.residual = detail::singular_equation(sp.a, nu);
  return sp;
}

/// Corner solution on the L-shape (re-entrant edges on theta = +-3pi/4), f = 0.
inline ExactSolution singular_solution(const MaterialParams& m, const SingularParams& sp) {
  using std::cos, std::sin, std::pow;
  struct Angular {
    double F, F1, F2, G, G1, G2;
  };
  const double a = sp.a, C1 = sp.C1, C2 = sp.C2, C3 = sp.C3, C4 = sp.C4, nu = sp.nu, mu = m.mu;
  auto ang = [=](double t) {
    const double sp1 = sin((a + 1) * t), cp1 = cos((a + 1) * t), sm1 = sin((a - 1) * t), cm1 = cos((a - 1) * t);
    Angular A;
    A.F = C1 * sp1 + C2 * cp1 + C3 * sm1 + C4 * cm1;
    A.F1 = (a + 1) * (C1 * cp1 - C2 * sp1) + (a - 1) * (C3 * cm1 - C4 * sm1);
    A.F2 = -(a + 1) * (a + 1) * (C1 * sp1 + C2 * cp1) - (a - 1) * (a - 1) * (C3 * sm1 + C4 * cm1);
    A.G = -4 / (a - 1) * (C3 * cm1 - C4 * sm1);
    A.G1 = 4 * (C3 * sm1 + C4 * cm1);
    A.G2 = 4 * (a - 1) * (C3 * cm1 - C4 * sm1);
    return A;
  };
  ExactSolution e;
  e.singular_point = Vec2::Zero();
  e.u = [=](const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) return Vec2(0.0, 0.0);
    const double t = std::atan2(x.y(), x.x());
    const Angular A = ang(t);
    const double ra = pow(r, a) / (2 * mu);
    const double ur = ra * (-(a + 1) * A.F + (1 - nu) * A.G1);
    const double ut = ra * (-A.F1 + (1 - nu) * (a - 1) * A.G);
    return Vec2(ur * cos(t) - ut * sin(t), ur * sin(t) + ut * cos(t));
  };
  e.grad = [=](const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) throw std::domain_error("singular_solution: gradient undefined at the corner");
    const double t = std::atan2(x.y(), x.x()), c = cos(t), s = sin(t);
    const Angular A = ang(t);
    const double k = pow(r, a) / (2 * mu);
    const double Ar = -(a + 1) * A.F + (1 - nu) * A.G1, Br = -A.F1 + (1 - nu) * (a - 1) * A.G;
    const double dAr = -(a + 1) * A.F1 + (1 - nu) * A.G2, dBr = -A.F2 + (1 - nu) * (a - 1) * A.G1;
    const double ux = k * (Ar * c - Br * s), uy = k * (Ar * s + Br * c);
    const double ux_t = k * (dAr * c - Ar * s - dBr * s - Br * c);
    const double uy_t = k * (dAr * s + Ar * c + dBr * c - Br * s);
    const double ux_r = a / r * ux, uy_r = a / r * uy;
    Mat2 g;
    g << c * ux_r - s / r * ux_t, s * ux_r + c / r * ux_t, c * uy_r - s / r * uy_t, s * uy_r + c / r * uy_t;
    return g;
  };
  e.stress = [=](const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) throw std::domain_error("singular_solution: stress undefined at the corner");
    const double t = std::atan2(x.y(), x.x()), c = cos(t), s = sin(t);
    const Angular A = ang(t);
    const double k = pow(r, a - 1);
    const double srr = k * (A.F2 + (a + 1) * A.F), stt = k * a * (a + 1) * A.F, srt = -k * a * A.F1;
    Mat2 R, P;
    R << c, -s, s, c;
    P << srr, srt, srt, stt;
    return Mat2(R * P * R.transpose());
  };
  e.f = [](const Vec2&) { return Vec2(0.0, 0.0); };
  return e;
}

inline ExactSolution singular_solution(const MaterialParams& m) {
  return singular_solution(m, solve_singularity_exponent(poisson_ratio(m)));
}

struct ErrorReport {
  double relative = 0.0;   // in the formulation's displacement norm
  double u_l2 = 0.0;       // absolute
  double grad_l2 = 0.0;    // absolute, H1 displacement slots only
  double sigma_l2 = 0.0;   // absolute, when a stress slot exists
  double exact_norm = 0.0; // displacement norm of the exact solution
};

/// Element quadrature that resolves a point singularity at one of the vertices.
inline ElementQuadrature error_quadrature(const Mesh& mesh, Index t, int degree, const std::optional<Vec2>& singular) {
  const auto c = mesh.corners(t);
  if (singular)
    for (int v = 0; v < 3; ++v)
      if ((c[v] - *singular).norm() < 1e-14) return map_rule(c, graded_triangle_rule(degree, v, 30));
  return map_rule(c, triangle_rule(degree));
}

inline bool uses_h1_norm(Formulation f) {
  return f == Formulation::Primal || f == Formulation::Strong || f == Formulation::Galerkin || f == Formulation::DualMixed;
}

inline ErrorReport error_norms(const SolutionFields& fields, const ExactSolution& ex, const Mesh& mesh) {
  const FormulationSpec spec = make_spec(fields.formulation);
  const int iu = fields.index("u"), is = fields.index("sigma");
  const DofSpace us = make_trial_space(spec.trial[std::size_t(iu)].kind, mesh, fields.p);
  std::optional<DofSpace> ss;
  if (is >= 0) ss = make_trial_space(spec.trial[std::size_t(is)].kind, mesh, fields.p);
  const bool h1 = uses_h1_norm(fields.formulation);
  const int degree = 2 * fields.p + 8;
  double eu = 0, eg = 0, es = 0, nu2 = 0, ng2 = 0;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const ElementQuadrature q = error_quadrature(mesh, t, degree, ex.singular_point);
    const FieldEval U = tabulate(local_basis(us, mesh, t), q.x);
    const VectorXd xu = gather(us, t, fields.slots[std::size_t(iu)]);
    const VectorXd uh = U.vec * xu;
    VectorXd gh;
    if (h1) gh = U.grad * xu;
    VectorXd sh;
    if (ss) sh = tabulate(local_basis(*ss, mesh, t), q.x).ten * gather(*ss, t, fields.slots[std::size_t(is)]);
    for (Index k = 0; k < q.w.size(); ++k) {
      const Vec2 ue = ex.u(q.x[k]);
      eu += q.w(k) * (ue - uh.segment<2>(2 * k)).squaredNorm();
      nu2 += q.w(k) * ue.squaredNorm();
      if (h1 || ss) {
        const Mat2 ge = ex.grad(q.x[k]);
        if (h1) {
          const Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>> G(gh.data() + 4 * k);
          eg += q.w(k) * (ge - Mat2(G)).squaredNorm();
          ng2 += q.w(k) * ge.squaredNorm();
        }
        if (ss) {
          const Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>> S(sh.data() + 4 * k);
          es += q.w(k) * (ex.stress(q.x[k]) - Mat2(S)).squaredNorm();
        }
      }
    }
  }
  ErrorReport r;
  r.u_l2 = std::sqrt(eu);
  r.grad_l2 = std::sqrt(eg);
  r.sigma_l2 = std::sqrt(es);
  r.exact_norm = h1 ? std::sqrt(nu2 + ng2) : std::sqrt(nu2);
  r.relative = (h1 ? std::sqrt(eu + eg) : std::sqrt(eu)) / r.exact_norm;
  return r;
}

}  // namespace dpg
