#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "exact.hpp"
#include "solver.hpp"

namespace dpg {

struct ResidualReport {
  std::vector<double> eta;  // per element
  double total = 0.0;
  int p_res = 4;
  int generation = 0;
};

/// Element residuals in the dual norm of the order-p_res broken test space;
/// L2 test slots exactly.
inline ResidualReport element_residuals(const SolutionFields& fields, const Mesh& mesh, const MaterialParams& mat,
                                        const BoundaryData& bc, int p_res) {
  if (fields.formulation == Formulation::Galerkin)
    throw std::invalid_argument("element_residuals: the Galerkin baseline has no broken test space");
  if (p_res < fields.p + 1) throw std::invalid_argument("element_residuals: p_res must be >= p + 1");
  const Discretization d = make_discretization(make_spec(fields.formulation), mesh, fields.p, bc);
  const LocalOptions opt{p_res, p_res - 1, true};
  ResidualReport rep;
  rep.p_res = p_res;
  rep.generation = mesh.generation();
  rep.eta.resize(std::size_t(mesh.num_triangles()));
  double sum = 0.0;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const LocalSystem ls = build_local_system(d, mesh, t, mat, bc, opt);
    const VectorXd x = gather_trial(d, t, fields.slots);
    double e2 = 0.0;
    if (ls.G.rows() > 0) {
      MatrixXd BB(ls.G.rows(), x.size());
      BB << ls.B, ls.Bhat;
      const VectorXd r = BB * x - ls.l;
      Eigen::LLT<MatrixXd> llt(ls.G);
      if (llt.info() != Eigen::Success)
        throw Error("gram_not_spd", "element_residuals: Gram of element " + std::to_string(t) + " is not positive definite");
      e2 += llt.matrixL().solve(r).squaredNorm();
    }
    if (ls.A.rows() > 0) e2 += (ls.A * x - ls.a).squaredNorm();
    rep.eta[std::size_t(t)] = std::sqrt(e2);
    sum += e2;
  }
  rep.total = std::sqrt(sum);
  return rep;
}

/// Elements with eta_K > 0.5 max eta (the maximizer always included).
inline std::set<Index> mark(const ResidualReport& rep, double fraction = 0.5) {
  std::set<Index> out;
  if (rep.eta.empty()) return out;
  const auto it = std::max_element(rep.eta.begin(), rep.eta.end());
  const double m = *it;
  for (std::size_t i = 0; i < rep.eta.size(); ++i)
    if (rep.eta[i] > fraction * m) out.insert(Index(i));
  out.insert(Index(it - rep.eta.begin()));
  return out;
}

struct AdaptiveStep {
  Mesh mesh;
  SolutionFields fields;
  ResidualReport residual;
  std::optional<ErrorReport> error;
  std::set<Index> marked;  // empty on the last step
};

struct Problem {
  Mesh mesh;
  MaterialParams material;
  BoundaryData bc;
  std::optional<ExactSolution> exact;
};

/// solve -> residual -> mark -> refine, max_steps solves.
inline std::vector<AdaptiveStep> adaptive_loop(Formulation f, const Problem& prob, int p, int dp, int p_res, int max_steps,
                                               const SolverOptions& so = {}) {
  if (max_steps < 1) throw std::invalid_argument("adaptive_loop: max_steps must be >= 1");
  std::vector<AdaptiveStep> steps;
  Mesh mesh = prob.mesh;
  for (int k = 0; k < max_steps; ++k) {
    AdaptiveStep st{mesh, solve_default(f, mesh, prob.material, p, dp, prob.bc, so), {}, {}, {}};
    st.residual = element_residuals(st.fields, mesh, prob.material, prob.bc, p_res);
    if (prob.exact) st.error = error_norms(st.fields, *prob.exact, mesh);
    if (k + 1 < max_steps) {
      st.marked = mark(st.residual);
      mesh = refine(mesh, st.marked);
    }
    steps.push_back(std::move(st));
  }
  return steps;
}

}  // namespace dpg
