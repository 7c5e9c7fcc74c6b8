#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "material.hpp"

namespace dpg {

using Index = std::ptrdiff_t;

enum class BoundaryTag : std::uint8_t { Interior = 0, Gamma0 = 1, Gamma1 = 2 };

inline const char* to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Gamma0: return "gamma0";
    case BoundaryTag::Gamma1: return "gamma1";
    default: return "interior";
  }
}

using VertexPair = std::pair<Index, Index>;

inline VertexPair sorted_pair(Index a, Index b) { return a < b ? VertexPair{a, b} : VertexPair{b, a}; }

struct Edge {
  std::array<Index, 2> v{};  // ascending vertex ids; edge parameter runs v[0] -> v[1]
  Index left = -1;           // lower-indexed incident triangle
  Index right = -1;          // -1 on the boundary
  Vec2 normal = Vec2::Zero();  // unit, points out of `left`
  double length = 0.0;
  BoundaryTag tag = BoundaryTag::Interior;

  bool on_boundary() const { return right < 0; }
};

/**
 * Conforming triangulation. Triangles are counterclockwise [v0, v1, v2] with
 * v0 the newest vertex; the refinement edge is (v1, v2). Local edge i is the
 * edge opposite vertex i.
 */
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<Index, 3>> triangles,
       std::map<VertexPair, BoundaryTag> boundary_tags, int generation = 0)
      : vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        tags_(std::move(boundary_tags)),
        generation_(generation) {
    build_topology();
  }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<VertexPair, BoundaryTag>& boundary_tags() const { return tags_; }
  const std::array<Index, 3>& triangle_edges(Index t) const { return tri_edges_[t]; }
  int generation() const { return generation_; }

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  std::array<Vec2, 3> corners(Index t) const {
    const auto& c = triangles_[t];
    return {vertices_[c[0]], vertices_[c[1]], vertices_[c[2]]};
  }
  double area(Index t) const {
    const auto x = corners(t);
    const Vec2 a = x[1] - x[0], b = x[2] - x[0];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }
  Vec2 centroid(Index t) const {
    const auto x = corners(t);
    return (x[0] + x[1] + x[2]) / 3.0;
  }
  // Local edge i of triangle t as ordered in the triangle (counterclockwise).
  std::pair<Index, Index> local_edge_vertices(Index t, int i) const {
    const auto& c = triangles_[t];
    return {c[(i + 1) % 3], c[(i + 2) % 3]};
  }
  Vec2 outward_normal(Index t, int i) const {
    const auto [a, b] = local_edge_vertices(t, i);
    const Vec2 d = vertices_[b] - vertices_[a];
    return Vec2(d.y(), -d.x()) / d.norm();
  }
  // +1 if the element's outward normal agrees with the edge's fixed normal.
  double normal_sign(Index t, int i) const { return edges_[tri_edges_[t][i]].left == t ? 1.0 : -1.0; }

  bool has_tag(BoundaryTag tag) const {
    return std::any_of(edges_.begin(), edges_.end(), [tag](const Edge& e) { return e.tag == tag; });
  }

 private:
  void build_topology() {
    edges_.clear();
    tri_edges_.assign(triangles_.size(), {-1, -1, -1});
    std::map<VertexPair, Index> lookup;
    for (Index t = 0; t < num_triangles(); ++t) {
      if (!(area(t) > 0.0)) throw std::invalid_argument("mesh: triangle " + std::to_string(t) + " is not counterclockwise");
      for (int i = 0; i < 3; ++i) {
        const auto [a, b] = local_edge_vertices(t, i);
        const VertexPair key = sorted_pair(a, b);
        auto it = lookup.find(key);
        if (it == lookup.end()) {
          Edge e;
          e.v = {key.first, key.second};
          e.left = t;
          e.length = (vertices_[b] - vertices_[a]).norm();
          e.normal = outward_normal(t, i);
          lookup.emplace(key, num_edges());
          tri_edges_[t][i] = num_edges();
          edges_.push_back(e);
        } else {
          Edge& e = edges_[it->second];
          if (e.right >= 0) throw std::invalid_argument("mesh: edge shared by more than two triangles");
          e.right = t;
          tri_edges_[t][i] = it->second;
        }
      }
    }
    for (auto& e : edges_) {
      if (!e.on_boundary()) continue;
      auto it = tags_.find({e.v[0], e.v[1]});
      if (it == tags_.end() || it->second == BoundaryTag::Interior)
        throw std::invalid_argument("mesh: boundary edge (" + std::to_string(e.v[0]) + "," + std::to_string(e.v[1]) + ") has no tag");
      e.tag = it->second;
    }
  }

  std::vector<Vec2> vertices_;
  std::vector<std::array<Index, 3>> triangles_;
  std::map<VertexPair, BoundaryTag> tags_;
  std::vector<Edge> edges_;
  std::vector<std::array<Index, 3>> tri_edges_;
  int generation_ = 0;
};

struct SkeletonEdge {
  Index id;
  std::array<Index, 2> vertices;
  Index left, right;
  Vec2 normal;
  double length;
  BoundaryTag tag;
};

struct Skeleton {
  std::vector<SkeletonEdge> edges;

  std::size_t num_interior() const {
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const SkeletonEdge& e) { return e.right >= 0; }));
  }
};

inline Skeleton skeleton(const Mesh& mesh) {
  Skeleton s;
  for (Index i = 0; i < mesh.num_edges(); ++i) {
    const Edge& e = mesh.edges()[i];
    s.edges.push_back({i, e.v, e.left, e.right, e.normal, e.length, e.tag});
  }
  return s;
}

namespace detail {

// Collect boundary edges of a triangle list and tag them with `tagger(midpoint)`.
template <class Tagger>
std::map<VertexPair, BoundaryTag> tag_boundary(const std::vector<Vec2>& verts,
                                               const std::vector<std::array<Index, 3>>& tris, Tagger tagger) {
  std::map<VertexPair, int> count;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) ++count[sorted_pair(t[(i + 1) % 3], t[(i + 2) % 3])];
  std::map<VertexPair, BoundaryTag> tags;
  for (const auto& [key, c] : count)
    if (c == 1) tags[key] = tagger(0.5 * (verts[key.first] + verts[key.second]));
  return tags;
}

// Split each lattice cell [i,i+1]x[j,j+1] along its (i,j)-(i+1,j+1) diagonal.
// The right angle is the newest vertex so the diagonal is the refinement edge.
inline void cell_triangles(Index a00, Index a10, Index a11, Index a01, std::vector<std::array<Index, 3>>& out) {
  out.push_back({a10, a11, a00});
  out.push_back({a01, a00, a11});
}

}  // namespace detail

inline Mesh build_square_mesh(int n) {
  if (n < 1) throw std::invalid_argument("build_square_mesh: n must be >= 1");
  std::vector<Vec2> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(double(i) / n, double(j) / n);
  auto id = [n](int i, int j) { return Index(j) * (n + 1) + i; };
  std::vector<std::array<Index, 3>> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) detail::cell_triangles(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), t);
  auto tags = detail::tag_boundary(v, t, [](const Vec2&) { return BoundaryTag::Gamma0; });
  return Mesh(std::move(v), std::move(t), std::move(tags));
}

/// Rotation taking the textbook L (-1,1)^2 minus [0,1)x(-1,0] to the
/// orientation whose re-entrant edges lie on theta = +-3pi/4.
inline constexpr double lshape_rotation = -0.75 * std::numbers::pi;

/**
 * Three unit squares around the origin, each split n x n. Re-entrant edges are
 * Gamma0, the rest Gamma1.
 */
inline Mesh build_lshape_mesh(int n = 1) {
  if (n < 1) throw std::invalid_argument("build_lshape_mesh: n must be >= 1");
  std::map<std::pair<int, int>, Index> lattice;
  std::vector<Vec2> ref;
  auto id = [&](int i, int j) {
    auto [it, fresh] = lattice.try_emplace({i, j}, Index(ref.size()));
    if (fresh) ref.emplace_back(double(i) / n, double(j) / n);
    return it->second;
  };
  std::vector<std::array<Index, 3>> t;
  const std::array<std::pair<int, int>, 3> squares{{{-1, -1}, {-1, 0}, {0, 0}}};
  for (auto [sx, sy] : squares)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int i0 = sx * n + i, j0 = sy * n + j;
        const Index a00 = id(i0, j0), a10 = id(i0 + 1, j0), a11 = id(i0 + 1, j0 + 1), a01 = id(i0, j0 + 1);
        detail::cell_triangles(a00, a10, a11, a01, t);
      }
  auto tags = detail::tag_boundary(ref, t, [](const Vec2& m) {
    const double eps = 1e-12;
    const bool on_bottom = std::abs(m.y()) < eps && m.x() > 0.0;  // y = 0, 0 < x < 1
    const bool on_side = std::abs(m.x()) < eps && m.y() < 0.0;    // x = 0, -1 < y < 0
    return on_bottom || on_side ? BoundaryTag::Gamma0 : BoundaryTag::Gamma1;
  });
  const double c = std::cos(lshape_rotation), s = std::sin(lshape_rotation);
  std::vector<Vec2> v;
  v.reserve(ref.size());
  for (const auto& p : ref) v.emplace_back(c * p.x() - s * p.y(), s * p.x() + c * p.y());
  return Mesh(std::move(v), std::move(t), std::move(tags));
}

/**
 * Newest-vertex bisection of the marked triangles plus closure. Children of
 * [v0, v1, v2] are [m, v0, v1] and [m, v2, v0] with m the midpoint of (v1, v2).
 */
inline Mesh refine(const Mesh& mesh, const std::set<Index>& marked) {
  const Index nt = mesh.num_triangles();
  for (Index t : marked)
    if (t < 0 || t >= nt) throw std::out_of_range("refine: triangle id " + std::to_string(t) + " out of range");
  if (marked.empty()) return Mesh(mesh.vertices(), mesh.triangles(), mesh.boundary_tags(), mesh.generation());

  std::vector<char> cut(mesh.num_edges(), 0);
  for (Index t : marked) cut[mesh.triangle_edges(t)[0]] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (Index t = 0; t < nt; ++t) {
      const auto& te = mesh.triangle_edges(t);
      if (!cut[te[0]] && (cut[te[1]] || cut[te[2]])) {
        cut[te[0]] = 1;
        changed = true;
      }
    }
  }

  std::vector<Vec2> verts = mesh.vertices();
  std::map<VertexPair, Index> midpoint;
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    if (!cut[e]) continue;
    const auto& ed = mesh.edges()[e];
    midpoint[{ed.v[0], ed.v[1]}] = Index(verts.size());
    verts.push_back(0.5 * (verts[ed.v[0]] + verts[ed.v[1]]));
  }

  std::vector<std::array<Index, 3>> tris;
  tris.reserve(nt * 2);
  auto split = [&](auto&& self, const std::array<Index, 3>& t) -> void {
    auto it = midpoint.find(sorted_pair(t[1], t[2]));
    if (it == midpoint.end()) {
      tris.push_back(t);
      return;
    }
    const Index m = it->second;
    self(self, {m, t[0], t[1]});
    self(self, {m, t[2], t[0]});
  };
  for (const auto& t : mesh.triangles()) split(split, t);

  std::map<VertexPair, BoundaryTag> tags;
  for (const auto& [key, tag] : mesh.boundary_tags()) {
    auto it = midpoint.find(key);
    if (it == midpoint.end()) {
      tags[key] = tag;
    } else {
      tags[sorted_pair(key.first, it->second)] = tag;
      tags[sorted_pair(it->second, key.second)] = tag;
    }
  }
  return Mesh(std::move(verts), std::move(tris), std::move(tags), mesh.generation() + 1);
}

inline Mesh refine_all(const Mesh& mesh) {
  std::set<Index> all;
  for (Index t = 0; t < mesh.num_triangles(); ++t) all.insert(t);
  return refine(mesh, all);
}

/// Two bisection sweeps: every edge halved, h -> h/2.
inline Mesh refine_uniform(const Mesh& mesh) { return refine_all(refine_all(mesh)); }

/// Vertices lying strictly inside some edge. Brute force; meant for tests.
inline std::vector<Index> hanging_vertices(const Mesh& mesh, double tol = 1e-12) {
  std::vector<Index> out;
  for (const auto& e : mesh.edges()) {
    const Vec2 a = mesh.vertices()[e.v[0]], b = mesh.vertices()[e.v[1]];
    const Vec2 d = b - a;
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
      if (v == e.v[0] || v == e.v[1]) continue;
      const Vec2 r = mesh.vertices()[v] - a;
      const double s = r.dot(d) / d.squaredNorm();
      const double off = std::abs(r.x() * d.y() - r.y() * d.x()) / d.norm();
      if (s > tol && s < 1.0 - tol && off < tol * d.norm()) out.push_back(v);
    }
  }
  return out;
}

inline double min_angle(const Mesh& mesh) {
  double best = std::numbers::pi;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto x = mesh.corners(t);
    for (int i = 0; i < 3; ++i) {
      const Vec2 a = x[(i + 1) % 3] - x[i], b = x[(i + 2) % 3] - x[i];
      best = std::min(best, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
    }
  }
  return best;
}

inline double diameter(const Mesh& mesh, Index t) {
  const auto x = mesh.corners(t);
  return std::max({(x[1] - x[0]).norm(), (x[2] - x[1]).norm(), (x[0] - x[2]).norm()});
}

/**
 * Legacy VTK unstructured grid, ASCII. Cell scalars are written in the order
 * given; every array must have one value per triangle.
 */
inline void write_vtk(std::ostream& os, const Mesh& mesh,
                      const std::vector<std::pair<std::string, std::vector<double>>>& cell_data = {}) {
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\n";
  os << "dpg mesh generation " << mesh.generation() << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices()) os << v.x() << ' ' << v.y() << " 0\n";
  os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
  os << "CELL_TYPES " << mesh.num_triangles() << "\n";
  for (Index t = 0; t < mesh.num_triangles(); ++t) os << "5\n";
  os << "CELL_DATA " << mesh.num_triangles() << "\n";
  os << "SCALARS area double 1\nLOOKUP_TABLE default\n";
  for (Index t = 0; t < mesh.num_triangles(); ++t) os << mesh.area(t) << "\n";
  for (const auto& [name, values] : cell_data) {
    if (Index(values.size()) != mesh.num_triangles())
      throw std::invalid_argument("write_vtk: cell array '" + name + "' has wrong length");
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : values) os << x << "\n";
  }
}

}  // namespace dpg
