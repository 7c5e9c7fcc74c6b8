#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <dpg/infsup.hpp>

#include "support.hpp"

using namespace dpg;
using namespace dpg::testing;

namespace {

const MaterialParams unit = MaterialParams::from_lame(1.0, 1.0);

}  // namespace

TEST(InfSup, StableWithDisplacementBoundary) {
  for (Formulation f : dpg_formulations()) {
    std::vector<double> g;
    Mesh mesh = build_square_mesh(2);
    for (int k = 0; k < 3; ++k) {
      const InfSupReport r = discrete_infsup(f, mesh, unit, 1);
      EXPECT_EQ(r.generation, mesh.generation());
      EXPECT_EQ(r.test_order, infsup_test_order(f, 1));
      EXPECT_GE(r.test_dofs, r.trial_dofs);
      g.push_back(r.gamma_h);
      mesh = refine_uniform(mesh);
    }
    const double lo = *std::min_element(g.begin(), g.end()), hi = *std::max_element(g.begin(), g.end());
    EXPECT_GT(lo, 0.1) << to_string(f);
    EXPECT_LT(hi / lo, 2.0) << to_string(f);
  }
}

TEST(InfSup, RigidMotionsDestroyStability) {
  const Mesh mesh = with_boundary(build_square_mesh(4), BoundaryTag::Gamma1);
  const Mesh good = build_square_mesh(4);
  for (Formulation f : dpg_formulations()) {
    const double g0 = discrete_infsup(f, mesh, unit, 1).gamma_h;
    EXPECT_LT(g0, 1e-8) << to_string(f);
    EXPECT_GT(discrete_infsup(f, good, unit, 1).gamma_h, 1e6 * g0) << to_string(f);
  }
}

// Independent check of the singular-value route: gamma^2 is the smallest
// eigenvalue of GX^{-1} B^T GY^{-1} B, computed here with a different factorization.
TEST(InfSup, SingularValueMatchesEigenvalue) {
  const Mesh mesh = mixed_boundary_mesh();
  for (Formulation f : dpg_formulations()) {
    const UnbrokenSystem s = assemble_unbroken(f, mesh, quad_material, 1, infsup_test_order(f, 1));
    const MatrixXd S = s.B.transpose() * s.GY.ldlt().solve(s.B);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> gx(s.GX);
    const MatrixXd Xi = gx.eigenvectors() * gx.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * gx.eigenvectors().transpose();
    const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(Xi * S * Xi).eigenvalues().minCoeff();
    InfSupReport r;
    infsup_from_system(s, r);
    EXPECT_NEAR(r.gamma_h * r.gamma_h, lmin, 1e-9 * (1 + lmin)) << to_string(f);
    EXPECT_NEAR(r.lambda_min, lmin, 1e-9 * (1 + lmin)) << to_string(f);
    EXPECT_GE(r.lambda_max, r.lambda_min);
  }
  EXPECT_THROW(discrete_infsup(Formulation::Galerkin, mesh, unit, 1), std::invalid_argument);
}

TEST(InfSup, AuxiliaryConstants) {
  // clamped unit square: min ||grad u||^2 / ||u||^2 is 2 pi^2, approached from above
  const double exact = 2 * std::numbers::pi * std::numbers::pi;
  double prev = 1e300;
  Mesh mesh = build_square_mesh(2);
  for (int k = 0; k < 3; ++k) {
    const AuxiliaryConstants a = auxiliary_constants(mesh, unit, 1);
    EXPECT_GT(a.lambda_p_omega0, exact);
    EXPECT_LT(a.lambda_p_omega0, prev);
    prev = a.lambda_p_omega0;
    EXPECT_LE(a.lambda_p, a.lambda_p_omega0 * (1 + 1e-12));
    EXPECT_NEAR(a.c_p, 1 / std::sqrt(a.lambda_p), 1e-12);
    EXPECT_LT(a.c_p, 2.0);
    EXPECT_GT(a.c_b, 0.3);
    mesh = refine_uniform(mesh);
  }
  EXPECT_LT(prev, 1.1 * exact);
}

TEST(InfSup, ZeroJumpCharacterization) {
  const JumpReport j = zero_jump_tests(mixed_boundary_mesh(), 2, 20);
  EXPECT_TRUE(j.pass);
  EXPECT_EQ(j.pairs, 20);
  EXPECT_LT(j.forward_h1, 1e-12);
  EXPECT_LT(j.forward_hdiv, 1e-12);
  EXPECT_GT(j.converse_h1, 1e-3);
  EXPECT_GT(j.converse_hdiv, 1e-3);
  EXPECT_THROW(zero_jump_tests(mixed_boundary_mesh(), 1), std::invalid_argument);
}
