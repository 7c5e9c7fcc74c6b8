#include <cmath>

#include <gtest/gtest.h>

#include <dpg/forms.hpp>

#include "support.hpp"

using namespace dpg;

using namespace dpg::testing;

namespace {
const MaterialParams& mat = quad_material;
}  // namespace

TEST(Forms, SpecsHaveExpectedSlots) {
  const auto uw = make_spec(Formulation::Ultraweak);
  EXPECT_EQ(uw.trial.size(), 5u);
  EXPECT_EQ(uw.slot("u_hat"), 3);
  EXPECT_EQ(uw.slot("nope"), -1);
  const auto pr = make_spec(Formulation::Primal);
  ASSERT_EQ(pr.test.size(), 1u);
  EXPECT_EQ(pr.test[0].kind, SpaceKind::BrokenH1);
  const auto st = make_spec(Formulation::Strong);
  for (const auto& t : st.test) EXPECT_EQ(t.norm, TestNorm::L2);
  EXPECT_TRUE(make_spec(Formulation::Galerkin).test.empty());
  for (auto f : {Formulation::Strong, Formulation::Ultraweak, Formulation::DualMixed, Formulation::Mixed, Formulation::Primal,
                 Formulation::Galerkin})
    EXPECT_EQ(formulation_from_string(to_string(f)), f);
  EXPECT_THROW(formulation_from_string("weak"), std::invalid_argument);
}

TEST(Forms, DiscretizationOffsets) {
  const Mesh m = build_square_mesh(2);
  const Discretization d = make_discretization(make_spec(Formulation::Ultraweak), m, 2, {});
  Index total = 0;
  for (std::size_t s = 0; s < d.spaces.size(); ++s) {
    EXPECT_EQ(d.offsets[s], total);
    total += d.spaces[s].size();
  }
  EXPECT_EQ(d.total, total);
  EXPECT_THROW(make_discretization(make_spec(Formulation::Primal), m, 0, {}), std::invalid_argument);
}

TEST(Forms, AssemblyDegree) {
  EXPECT_EQ(assembly_degree(2, LocalOptions::enriched(2, 1)), 8);
  EXPECT_EQ(assembly_degree(1, LocalOptions{2, 1, true}), 6);
}

// Interpolating an exactly representable solution leaves no residual on any element.
TEST(Forms, ExactPolynomialSolutionHasZeroLocalResidual) {
  const Mesh mesh = mixed_boundary_mesh();
  const BoundaryData bc = Quadratic::bc();
  const int p = 3;
  for (auto f : {Formulation::Strong, Formulation::Ultraweak, Formulation::DualMixed, Formulation::Mixed, Formulation::Primal})
    for (bool exact_l2 : {false, true}) {
      const Discretization d = make_discretization(make_spec(f), mesh, p, bc);
      const auto slots = interpolate_quadratic(d, mesh);
      const LocalOptions opt{p + 1, p, exact_l2};
      for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const LocalSystem ls = build_local_system(d, mesh, t, mat, bc, opt);
        const VectorXd x = gather_trial(d, t, slots);
        ASSERT_EQ(x.size(), ls.B.cols() + ls.Bhat.cols());
        if (ls.G.rows()) {
          MatrixXd BB(ls.G.rows(), x.size());
          BB << ls.B, ls.Bhat;
          EXPECT_LT((BB * x - ls.l).norm(), 1e-11 * (1.0 + ls.l.norm())) << to_string(f) << " element " << t;
        }
        if (ls.A.rows()) {
          EXPECT_LT((ls.A * x - ls.a).norm(), 1e-11) << to_string(f) << " element " << t;
        }
      }
    }
}

TEST(Forms, BoundaryValuesMatchExactData) {
  const Mesh mesh = mixed_boundary_mesh();
  const BoundaryData bc = Quadratic::bc();
  for (auto f : {Formulation::Strong, Formulation::Ultraweak, Formulation::Mixed, Formulation::Primal}) {
    const Discretization d = make_discretization(make_spec(f), mesh, 3, bc);
    const auto slots = interpolate_quadratic(d, mesh);
    for (std::size_t s = 0; s < d.spaces.size(); ++s)
      for (Index i = 0; i < d.spaces[s].size(); ++i)
        if (d.spaces[s].constrained[std::size_t(i)]) {
          EXPECT_NEAR(d.spaces[s].values(i), slots[s](i), 1e-12) << to_string(f) << " slot " << s;
        }
  }
}

TEST(Forms, GramsAreSymmetricPositiveDefinite) {
  const Mesh mesh = mixed_boundary_mesh();
  for (auto f : {Formulation::Strong, Formulation::Ultraweak, Formulation::DualMixed, Formulation::Mixed, Formulation::Primal}) {
    const Discretization d = make_discretization(make_spec(f), mesh, 2, {});
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
      const MatrixXd G = local_gram(d, mesh, t, 1);
      EXPECT_LT((G - G.transpose()).norm(), 1e-12 * G.norm());
      Eigen::LLT<MatrixXd> llt(G);
      EXPECT_EQ(llt.info(), Eigen::Success);
    }
  }
}

TEST(Forms, L2GramIsIdentityInOrthonormalCoordinates) {
  const Mesh mesh = build_square_mesh(1);
  const Discretization d = make_discretization(make_spec(Formulation::Strong), mesh, 2, {});
  const MatrixXd G = local_gram(d, mesh, 0, 1);
  EXPECT_LT((G - MatrixXd::Identity(G.rows(), G.cols())).norm(), 1e-11);
}

TEST(Forms, TraceBlockIsOppositeAcrossSharedEdges) {
  // A single sigma_n dof on an interior edge acts with opposite signs on the two sides:
  // pairing it with a globally constant v gives zero.
  const Mesh mesh = build_square_mesh(2);
  const Discretization d = make_discretization(make_spec(Formulation::Primal), mesh, 2, {});
  const int isn = 1;
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges()[e];
    if (ed.on_boundary()) continue;
    double sum = 0;
    for (Index t : {ed.left, ed.right}) {
      const LocalSystem ls = build_local_system(d, mesh, t, mat, {}, LocalOptions::enriched(2, 1));
      // constant v = (1, 0) in the orthonormal broken basis: coefficient sqrt|K| on the first function
      VectorXd v = VectorXd::Zero(ls.G.rows());
      v(0) = std::sqrt(mesh.area(t));
      const auto g = d.spaces[isn].global_dofs(t);
      for (std::size_t j = 0; j < g.size(); ++j)
        if (g[j] == d.spaces[isn].edge_dofs[e][0]) sum += v.dot(ls.Bhat.col(Index(j)));
    }
    EXPECT_NEAR(sum, 0.0, 1e-13);
  }
}
