#pragma once

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <dpg/forms.hpp>

namespace dpg::testing {

inline const MaterialParams quad_material = MaterialParams::from_lame(2.0, 0.7);

/// Quadratic displacement; sigma = C eps(u) is affine and f = -div sigma constant,
/// so every trial space of order >= 3 represents the solution exactly.
struct Quadratic {
  static Vec2 u(const Vec2& x) {
    return Vec2(0.3 * x.x() * x.x() - 0.5 * x.x() * x.y() + 0.2 * x.y(), 0.1 * x.y() * x.y() + 0.4 * x.x() * x.y() - 0.3 * x.x());
  }
  static Mat2 grad(const Vec2& x) {
    Mat2 g;
    g << 0.6 * x.x() - 0.5 * x.y(), -0.5 * x.x() + 0.2, 0.4 * x.y() - 0.3, 0.2 * x.y() + 0.4 * x.x();
    return g;
  }
  static Mat2 sigma(const Vec2& x) { return stiffness_apply(grad(x), quad_material); }
  static Vec2 f(const Vec2&) {
    // sigma is affine, so one-sided differences are exact
    const double h = 0.5;
    const Vec2 o(0.0, 0.0);
    const Mat2 sx = (sigma(o + Vec2(h, 0)) - sigma(o)) / h, sy = (sigma(o + Vec2(0, h)) - sigma(o)) / h;
    return -Vec2(sx(0, 0) + sy(0, 1), sx(1, 0) + sy(1, 1));
  }
  static BoundaryData bc() {
    BoundaryData b;
    b.f = f;
    b.u0 = u;
    b.g = [](const Vec2& x, const Vec2& n) { return Vec2(sigma(x) * n); };
    return b;
  }
};

/// Every trial slot of `d` filled with the interpolant / projection of Quadratic.
inline std::vector<VectorXd> interpolate_quadratic(const Discretization& d, const Mesh& mesh) {
  std::vector<VectorXd> out;
  for (std::size_t s = 0; s < d.spaces.size(); ++s) {
    const DofSpace& sp = d.spaces[s];
    switch (sp.kind) {
      case SpaceKind::H1: out.push_back(interpolate_h1(sp, mesh, Quadratic::u)); break;
      case SpaceKind::Hdiv: out.push_back(interpolate_hdiv(sp, mesh, Quadratic::sigma)); break;
      case SpaceKind::L2Vec: out.push_back(project_l2(sp, mesh, Quadratic::u, {})); break;
      case SpaceKind::L2Sym: out.push_back(project_l2(sp, mesh, {}, Quadratic::sigma)); break;
      case SpaceKind::L2Skew: out.push_back(project_l2(sp, mesh, {}, Quadratic::grad)); break;
      case SpaceKind::TraceH12: out.push_back(interpolate_trace_h12(sp, mesh, Quadratic::u)); break;
      case SpaceKind::TraceHm12: out.push_back(project_trace_hm12(sp, mesh, Quadratic::sigma)); break;
      default: ADD_FAILURE() << "unexpected slot " << d.spec.trial[s].name;
    }
  }
  return out;
}

/// Mesh with both boundary tags and one level of local refinement.
inline Mesh mixed_boundary_mesh() { return refine(build_lshape_mesh(1), {0, 2}); }

inline const std::vector<Formulation>& dpg_formulations() {
  static const std::vector<Formulation> f{Formulation::Strong, Formulation::Ultraweak, Formulation::DualMixed,
                                          Formulation::Mixed, Formulation::Primal};
  return f;
}

}  // namespace dpg::testing
