#include <cmath>

#include <gtest/gtest.h>

#include <dpg/exact.hpp>
#include <dpg/residual.hpp>
#include <dpg/solver.hpp>

#include "support.hpp"

using namespace dpg;
using namespace dpg::testing;

TEST(Residual, VanishesForExactlyRepresentedSolution) {
  const Mesh mesh = mixed_boundary_mesh();
  const BoundaryData bc = Quadratic::bc();
  for (Formulation f : dpg_formulations()) {
    const SolutionFields sol = assemble_and_solve(make_spec(f), mesh, quad_material, 3, 1, bc);
    const ResidualReport r = element_residuals(sol, mesh, quad_material, bc, 5);
    EXPECT_LT(r.total, 1e-9) << to_string(f);
    EXPECT_EQ(r.eta.size(), std::size_t(mesh.num_triangles()));
    EXPECT_EQ(r.generation, mesh.generation());
  }
}

TEST(Residual, RejectsBadInput) {
  const auto m = MaterialParams::from_lame(1.0, 1.0);
  const ExactSolution ex = smooth_solution_2d(m);
  const Mesh mesh = build_square_mesh(2);
  const SolutionFields g = solve_galerkin_primal(mesh, m, 1, ex.boundary_data());
  EXPECT_THROW(element_residuals(g, mesh, m, ex.boundary_data(), 4), std::invalid_argument);
  const SolutionFields s = solve_default(Formulation::Primal, mesh, m, 2, 1, ex.boundary_data());
  EXPECT_THROW(element_residuals(s, mesh, m, ex.boundary_data(), 2), std::invalid_argument);
  EXPECT_NO_THROW(element_residuals(s, mesh, m, ex.boundary_data(), 3));
}

// The strong form has L2 tests only, so eta_K is the L2 norm of the pointwise residual
// (up to quadrature of f).
TEST(Residual, StrongFormMatchesPointwiseResidual) {
  const auto m = MaterialParams::from_lame(1.0, 1.0);
  const ExactSolution ex = smooth_solution_2d(m);
  const Mesh mesh = build_square_mesh(4);
  const int p = 2;
  const SolutionFields sol = solve_default(Formulation::Strong, mesh, m, p, 1, ex.boundary_data());
  const ResidualReport r = element_residuals(sol, mesh, m, ex.boundary_data(), 4);
  const DofSpace ss = hdiv_space(mesh, p, true), us = h1_space(mesh, p, true);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const ElementQuadrature q = map_rule(mesh.corners(t), triangle_rule(12));
    const FieldEval S = tabulate(local_basis(ss, mesh, t), q.x), U = tabulate(local_basis(us, mesh, t), q.x);
    const VectorXd sh = S.ten * gather(ss, t, sol["sigma"]), dh = S.div * gather(ss, t, sol["sigma"]);
    const VectorXd gh = U.grad * gather(us, t, sol["u"]);
    double e2 = 0;
    for (Index k = 0; k < q.w.size(); ++k) {
      Mat2 s, g;
      s << sh(4 * k), sh(4 * k + 1), sh(4 * k + 2), sh(4 * k + 3);
      g << gh(4 * k), gh(4 * k + 1), gh(4 * k + 2), gh(4 * k + 3);
      const Mat2 sym = 0.5 * (s + s.transpose()), skew = 0.5 * (s - s.transpose());
      const Mat2 ce = m.lambda * g.trace() * Mat2::Identity() + m.mu * (g + g.transpose());
      const Vec2 dv(dh(2 * k), dh(2 * k + 1));
      e2 += q.w(k) * ((sym - ce).squaredNorm() + (dv + ex.f(q.x[k])).squaredNorm() + skew.squaredNorm());
    }
    EXPECT_NEAR(r.eta[std::size_t(t)], std::sqrt(e2), 1e-6 * std::sqrt(e2));
  }
}

TEST(Residual, DecreasesUnderUniformRefinement) {
  const auto m = MaterialParams::from_lame(1.0, 1.0);
  const ExactSolution ex = smooth_solution_2d(m);
  for (Formulation f : dpg_formulations()) {
    double prev = 1e300;
    Mesh mesh = build_square_mesh(2);
    for (int k = 0; k < 3; ++k) {
      const SolutionFields s = solve_default(f, mesh, m, 1, 1, ex.boundary_data());
      const double eta = element_residuals(s, mesh, m, ex.boundary_data(), 4).total;
      EXPECT_LT(eta, prev) << to_string(f) << " level " << k;
      prev = eta;
      mesh = refine_uniform(mesh);
    }
  }
}

TEST(Residual, MarkingRule) {
  ResidualReport r;
  r.eta = {0.1, 1.0, 0.5, 0.51, 0.0};
  EXPECT_EQ(mark(r), (std::set<Index>{1, 3}));
  r.eta = {0.2, 0.2, 0.2};
  EXPECT_EQ(mark(r), (std::set<Index>{0, 1, 2}));
  r.eta = {0, 0};
  EXPECT_EQ(mark(r).size(), 1u);
  r.eta.clear();
  EXPECT_TRUE(mark(r).empty());
}

TEST(Residual, AdaptiveLoopConcentratesAtCorner) {
  const auto m = MaterialParams::from_lame(123.0, 79.3);
  const ExactSolution ex = singular_solution(m);
  const Problem prob{build_lshape_mesh(1), m, ex.boundary_data(), ex};
  const auto steps = adaptive_loop(Formulation::Primal, prob, 1, 1, 4, 6);
  ASSERT_EQ(steps.size(), 6u);
  EXPECT_TRUE(steps.back().marked.empty());
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    EXPECT_FALSE(steps[k].marked.empty());
    EXPECT_EQ(steps[k + 1].mesh.generation(), steps[k].mesh.generation() + 1);
  }
  // smallest element sits at the re-entrant corner
  const Mesh& last = steps.back().mesh;
  Index tmin = 0;
  for (Index t = 1; t < last.num_triangles(); ++t)
    if (last.area(t) < last.area(tmin)) tmin = t;
  double dmin = 1e300;
  for (const Vec2& c : last.corners(tmin)) dmin = std::min(dmin, c.norm());
  EXPECT_LT(dmin, 1e-12);
  EXPECT_LT(steps.back().error->relative, steps.front().error->relative);
}
