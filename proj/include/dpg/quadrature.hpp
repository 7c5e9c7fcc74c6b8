#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dpg {

/// Gauss-Legendre nodes and weights on [0,1].
struct Rule1D {
  std::vector<double> x, w;
};

inline Rule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  // P_n(z) and P_n'(z) by the three-term recurrence
  auto legendre = [n](double z) {
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (z * p1 - p0) / (z * z - 1.0)};
  };
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double dp = legendre(z).second;
    const double w = 1.0 / ((1.0 - z * z) * dp * dp);
    r.x[i] = 0.5 * (1.0 - z);
    r.x[n - 1 - i] = 0.5 * (1.0 + z);
    r.w[i] = r.w[n - 1 - i] = w;
  }
  return r;
}

inline Rule1D gauss_legendre_for_degree(int degree) { return gauss_legendre(degree / 2 + 1); }

/// Rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;  // barycentric
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

// Collapsed tensor Gauss rule. Exact for total degree <= degree.
inline QuadratureRule triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: negative degree");
  const int n = (degree + 3) / 2;
  const Rule1D g = gauss_legendre(n);
  QuadratureRule q;
  q.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.x[i], v = g.x[j];
      const double xi = u, eta = v * (1.0 - u);
      q.points.push_back({1.0 - xi - eta, xi, eta});
      q.weights.push_back(g.w[i] * g.w[j] * (1.0 - u));
    }
  return q;
}

/// Same collapse, but the singular vertex is barycentric slot `vertex` and the
/// rule is composite over geometrically graded bands toward it.
inline QuadratureRule graded_triangle_rule(int degree, int vertex, int levels, double ratio = 0.5) {
  const int n = (degree + 2) / 2 + 3;
  const Rule1D g = gauss_legendre(n);
  QuadratureRule q;
  q.degree = degree;
  // radial parameter s in [0,1] measured from the singular vertex; bands [r^{k+1}, r^k]
  std::vector<std::pair<double, double>> bands;
  double hi = 1.0;
  for (int k = 0; k < levels; ++k) {
    bands.emplace_back(hi * ratio, hi);
    hi *= ratio;
  }
  bands.emplace_back(0.0, hi);
  for (auto [a, b] : bands)
    for (int i = 0; i < n; ++i) {
      const double s = a + (b - a) * g.x[i];
      const double ws = (b - a) * g.w[i];
      for (int j = 0; j < n; ++j) {
        const double t = g.x[j];
        // point = vertex + s * ((1-t) * e1 + t * e2), jacobian s
        std::array<double, 3> bary{};
        const int v1 = (vertex + 1) % 3, v2 = (vertex + 2) % 3;
        bary[vertex] = 1.0 - s;
        bary[v1] = s * (1.0 - t);
        bary[v2] = s * t;
        q.points.push_back(bary);
        q.weights.push_back(ws * g.w[j] * s);
      }
    }
  return q;
}

}  // namespace dpg
