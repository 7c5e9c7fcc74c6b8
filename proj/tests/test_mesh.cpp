#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <dpg/mesh.hpp>
#include <dpg/quadrature.hpp>

using namespace dpg;

namespace {

double total_area(const Mesh& m) {
  double a = 0;
  for (Index t = 0; t < m.num_triangles(); ++t) a += m.area(t);
  return a;
}

double tagged_length(const Mesh& m, BoundaryTag tag) {
  double l = 0;
  for (const auto& e : m.edges())
    if (e.tag == tag) l += e.length;
  return l;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST(Quadrature, GaussLegendreExactness) {
  for (int n = 1; n <= 8; ++n) {
    const Rule1D g = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, TriangleRuleMonomialExactness) {
  for (int d = 0; d <= 12; ++d) {
    const QuadratureRule r = triangle_rule(d);
    double wsum = 0;
    for (double w : r.weights) wsum += w;
    EXPECT_NEAR(wsum, 0.5, 1e-15);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        double s = 0;
        for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.points[i][1], a) * std::pow(r.points[i][2], b);
        EXPECT_NEAR(s, factorial(a) * factorial(b) / factorial(a + b + 2), 1e-15) << d << ' ' << a << ' ' << b;
      }
  }
}

TEST(Quadrature, GradedRuleResolvesVertexSingularity) {
  // integral over the reference triangle of (x + y)^(-1/2) is 2/3
  for (int v = 0; v < 3; ++v) {
    const QuadratureRule r = graded_triangle_rule(6, v, 30);
    double s = 0, plain = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(1.0 - r.points[i][v], -0.5);
    const QuadratureRule p = triangle_rule(6);
    for (std::size_t i = 0; i < p.size(); ++i) plain += p.weights[i] * std::pow(1.0 - p.points[i][v], -0.5);
    EXPECT_NEAR(s, 2.0 / 3.0, 1e-9);
    EXPECT_GT(std::abs(plain - 2.0 / 3.0), 1e-4);
  }
}

TEST(Mesh, SquareCounts) {
  for (int n : {1, 2, 5}) {
    const Mesh m = build_square_mesh(n);
    EXPECT_EQ(m.num_triangles(), 2 * n * n);
    EXPECT_EQ(m.num_vertices(), (n + 1) * (n + 1));
    EXPECT_EQ(m.num_vertices() - m.num_edges() + m.num_triangles(), 1);
    EXPECT_NEAR(total_area(m), 1.0, 1e-14);
    EXPECT_NEAR(tagged_length(m, BoundaryTag::Gamma0), 4.0, 1e-14);
    EXPECT_FALSE(m.has_tag(BoundaryTag::Gamma1));
    EXPECT_EQ(m.generation(), 0);
  }
}

TEST(Mesh, LShapeGeometryAndTags) {
  const Mesh m = build_lshape_mesh(2);
  EXPECT_EQ(m.num_triangles(), 24);
  EXPECT_NEAR(total_area(m), 3.0, 1e-13);
  EXPECT_EQ(m.num_vertices() - m.num_edges() + m.num_triangles(), 1);
  // re-entrant corner at the origin, two Gamma0 edges of unit length meeting there
  EXPECT_NEAR(tagged_length(m, BoundaryTag::Gamma0), 2.0, 1e-13);
  EXPECT_NEAR(tagged_length(m, BoundaryTag::Gamma1), 6.0, 1e-13);
  for (const auto& e : m.edges()) {
    if (e.tag != BoundaryTag::Gamma0) continue;
    // every Gamma0 edge lies on a ray from the origin
    const Vec2 a = m.vertices()[e.v[0]], b = m.vertices()[e.v[1]];
    EXPECT_LT(std::abs(a.x() * b.y() - a.y() * b.x()), 1e-13);
  }
  // the rotated domain (and its vertex lattice) is symmetric about the x axis
  for (const Vec2& x : m.vertices()) {
    bool mirrored = false;
    for (const Vec2& y : m.vertices()) mirrored = mirrored || (y - Vec2(x.x(), -x.y())).norm() < 1e-12;
    EXPECT_TRUE(mirrored);
  }
}

TEST(Mesh, RejectsClockwiseTriangle) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(Mesh(v, {{0, 2, 1}}, {}), std::invalid_argument);
}

TEST(Mesh, NormalsAndSigns) {
  const Mesh m = build_lshape_mesh(2);
  for (Index t = 0; t < m.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      const auto& e = m.edges()[m.triangle_edges(t)[i]];
      EXPECT_LT((m.outward_normal(t, i) - m.normal_sign(t, i) * e.normal).norm(), 1e-14);
      // outward: points away from the centroid
      EXPECT_GT(m.outward_normal(t, i).dot(m.vertices()[e.v[0]] - m.centroid(t)), 0.0);
    }
  for (const auto& e : m.edges()) {
    EXPECT_LT(e.v[0], e.v[1]);
    if (!e.on_boundary()) {
      EXPECT_LT(e.left, e.right);
    }
  }
  const Skeleton sk = skeleton(m);
  Index interior = 0;
  for (const auto& e : m.edges()) interior += e.on_boundary() ? 0 : 1;
  EXPECT_EQ(Index(sk.num_interior()), interior);
}

TEST(Mesh, SingleRefinementIsConforming) {
  const Mesh m = build_square_mesh(2);
  const Mesh r = refine(m, {3});
  EXPECT_EQ(r.generation(), 1);
  EXPECT_TRUE(hanging_vertices(r).empty());
  EXPECT_NEAR(total_area(r), 1.0, 1e-14);
  EXPECT_GT(r.num_triangles(), m.num_triangles());
  EXPECT_NEAR(tagged_length(r, BoundaryTag::Gamma0), 4.0, 1e-14);
  EXPECT_THROW(refine(m, {99}), std::out_of_range);
}

TEST(Mesh, RandomRefinementKeepsQuality) {
  Mesh m = build_lshape_mesh(1);
  const double a0 = min_angle(m);
  std::mt19937_64 rng(5);
  for (int round = 0; round < 8; ++round) {
    std::set<Index> marked;
    std::uniform_int_distribution<Index> pick(0, m.num_triangles() - 1);
    for (int k = 0; k < 3; ++k) marked.insert(pick(rng));
    m = refine(m, marked);
    ASSERT_TRUE(hanging_vertices(m).empty()) << "round " << round;
    EXPECT_NEAR(total_area(m), 3.0, 1e-12);
    EXPECT_NEAR(tagged_length(m, BoundaryTag::Gamma0) + tagged_length(m, BoundaryTag::Gamma1), 8.0, 1e-12);
    EXPECT_GE(min_angle(m), 0.5 * a0 - 1e-12);
  }
  EXPECT_EQ(m.generation(), 8);
}

TEST(Mesh, UniformRefinementHalvesH) {
  const Mesh m = build_square_mesh(2);
  const Mesh r = refine_uniform(m);
  EXPECT_EQ(r.num_triangles(), 4 * m.num_triangles());
  EXPECT_TRUE(hanging_vertices(r).empty());
  double hmax0 = 0, hmax1 = 0;
  for (Index t = 0; t < m.num_triangles(); ++t) hmax0 = std::max(hmax0, diameter(m, t));
  for (Index t = 0; t < r.num_triangles(); ++t) hmax1 = std::max(hmax1, diameter(r, t));
  EXPECT_NEAR(hmax1, 0.5 * hmax0, 1e-14);
  // same vertex set as the structured n = 4 mesh
  EXPECT_EQ(r.num_vertices(), build_square_mesh(4).num_vertices());
}

TEST(Mesh, RefineEmptySetIsIdentity) {
  const Mesh m = build_square_mesh(2);
  const Mesh r = refine(m, {});
  EXPECT_EQ(r.num_triangles(), m.num_triangles());
  EXPECT_EQ(r.generation(), m.generation());
}

TEST(Mesh, VtkOutput) {
  const Mesh m = build_square_mesh(1);
  std::ostringstream os;
  write_vtk(os, m, {{"eta", {0.5, 0.25}}});
  const std::string s = os.str();
  EXPECT_NE(s.find("POINTS 4 double"), std::string::npos);
  EXPECT_NE(s.find("CELLS 2 8"), std::string::npos);
  EXPECT_NE(s.find("SCALARS eta double 1"), std::string::npos);
  std::ostringstream bad;
  EXPECT_THROW(write_vtk(bad, m, {{"eta", {1.0}}}), std::invalid_argument);
}
