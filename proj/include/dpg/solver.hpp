#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "forms.hpp"

namespace dpg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Runtime error carrying a short machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SolutionFields {
  Formulation formulation = Formulation::Primal;
  int p = 1;
  int generation = 0;
  std::vector<std::string> names;
  std::vector<SpaceKind> kinds;
  std::vector<VectorXd> slots;
  Index free_dofs = 0;

  int index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return int(i);
    return -1;
  }
  const VectorXd& operator[](const std::string& name) const {
    const int i = index(name);
    if (i < 0) throw std::out_of_range("SolutionFields: no slot '" + name + "'");
    return slots[std::size_t(i)];
  }
};

/// Normal-equation block of one element: K = X^T X + A^T A with X = L^{-1}[B|Bhat], G = L L^T.
inline std::pair<MatrixXd, VectorXd> condense_local(const LocalSystem& ls) {
  const Index ncol = ls.B.cols() + ls.Bhat.cols();
  MatrixXd K = MatrixXd::Zero(ncol, ncol);
  VectorXd r = VectorXd::Zero(ncol);
  if (ls.G.rows() > 0) {
    Eigen::LLT<MatrixXd> llt(ls.G);
    if (llt.info() != Eigen::Success)
      throw Error("gram_not_spd", "condense_local: Gram matrix of element " + std::to_string(ls.element) + " is not positive definite");
    MatrixXd BB(ls.G.rows(), ncol);
    BB << ls.B, ls.Bhat;
    const MatrixXd X = llt.matrixL().solve(BB);
    const VectorXd y = llt.matrixL().solve(ls.l);
    K.noalias() += X.transpose() * X;
    r.noalias() += X.transpose() * y;
  }
  if (ls.A.rows() > 0) {
    K.noalias() += ls.A.transpose() * ls.A;
    r.noalias() += ls.A.transpose() * ls.a;
  }
  K = 0.5 * (K + K.transpose()).eval();
  return {K, r};
}

/// Map from global trial index to unknown index (-1 if constrained) and the
/// values constrained columns take in assembly.
struct DofNumbering {
  std::vector<Index> free;
  VectorXd fixed;
  Index nfree = 0;
};

inline DofNumbering number_dofs(const Discretization& d) {
  DofNumbering n;
  n.free.assign(std::size_t(d.total), -1);
  n.fixed = VectorXd::Zero(d.total);
  for (std::size_t s = 0; s < d.spaces.size(); ++s) {
    const DofSpace& sp = d.spaces[s];
    for (Index i = 0; i < sp.size(); ++i) {
      const Index g = d.offsets[s] + i;
      if (sp.constrained[std::size_t(i)])
        n.fixed(g) = d.eliminated(int(s), i) ? 0.0 : sp.values(i);
      else
        n.free[std::size_t(g)] = n.nfree++;
    }
  }
  return n;
}

struct GlobalSystem {
  SparseMatrix stiffness;
  VectorXd rhs;
  DofNumbering numbering;
};

inline void scatter(const MatrixXd& K, const VectorXd& r, const std::vector<Index>& cols, const DofNumbering& n,
                    std::vector<Eigen::Triplet<double>>& trip, VectorXd& rhs) {
  for (Index i = 0; i < K.rows(); ++i) {
    const Index fi = n.free[std::size_t(cols[std::size_t(i)])];
    if (fi < 0) continue;
    rhs(fi) += r(i);
    for (Index j = 0; j < K.cols(); ++j) {
      const Index gj = cols[std::size_t(j)];
      const Index fj = n.free[std::size_t(gj)];
      if (fj >= 0)
        trip.emplace_back(fi, fj, K(i, j));
      else
        rhs(fi) -= K(i, j) * n.fixed(gj);
    }
  }
}

inline GlobalSystem assemble_global(const Discretization& d, const Mesh& mesh, const MaterialParams& mat,
                                    const BoundaryData& bc, const LocalOptions& opt) {
  GlobalSystem gs;
  gs.numbering = number_dofs(d);
  gs.rhs = VectorXd::Zero(gs.numbering.nfree);
  std::vector<Eigen::Triplet<double>> trip;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const LocalSystem ls = build_local_system(d, mesh, t, mat, bc, opt);
    const auto [K, r] = condense_local(ls);
    scatter(K, r, ls.trial_cols, gs.numbering, trip, gs.rhs);
  }
  gs.stiffness.resize(gs.numbering.nfree, gs.numbering.nfree);
  gs.stiffness.setFromTriplets(trip.begin(), trip.end());
  return gs;
}

struct SolverOptions {
  double cg_tolerance = 1e-12;
  double pivot_ratio = 1e-13;  // min/max |D| in LDL^T below this -> singular
};

inline std::string well_posedness_hint(const Mesh& mesh) {
  return mesh.has_tag(BoundaryTag::Gamma0)
             ? "global system is singular"
             : "global system is singular: Gamma0 is empty, so every rigid translation satisfies the boundary conditions and lies in the kernel";
}

inline VectorXd solve_spd(const SparseMatrix& K, const VectorXd& rhs, const Mesh& mesh, const SolverOptions& so = {}) {
  if (K.rows() == 0) return VectorXd();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
  if (ldlt.info() == Eigen::NumericalIssue) throw Error("singular_system", well_posedness_hint(mesh));
  if (ldlt.info() == Eigen::Success) {
    const VectorXd D = ldlt.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff(), dmin = D.minCoeff();
    if (!(dmin > so.pivot_ratio * dmax)) throw Error("singular_system", well_posedness_hint(mesh));
    VectorXd x = ldlt.solve(rhs);
    if (ldlt.info() == Eigen::Success && x.allFinite()) return x;
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(K);
  cg.setTolerance(so.cg_tolerance);
  cg.setMaxIterations(std::max<Index>(1000, 10 * K.rows()));
  VectorXd x = cg.solve(rhs);
  if (cg.info() != Eigen::Success) throw Error("solver_failed", "sparse factorization and conjugate gradients both failed");
  return x;
}

inline SolutionFields collect(const Discretization& d, const Mesh& mesh, const DofNumbering& n, const VectorXd& x) {
  SolutionFields f;
  f.formulation = d.spec.id;
  f.p = d.p;
  f.generation = mesh.generation();
  f.free_dofs = n.nfree;
  for (std::size_t s = 0; s < d.spaces.size(); ++s) {
    const DofSpace& sp = d.spaces[s];
    VectorXd v = sp.values;
    for (Index i = 0; i < sp.size(); ++i) {
      const Index fi = n.free[std::size_t(d.offsets[s] + i)];
      if (fi >= 0) v(i) = x(fi);
    }
    f.names.push_back(d.spec.trial[s].name);
    f.kinds.push_back(sp.kind);
    f.slots.push_back(std::move(v));
  }
  return f;
}

inline void require_gamma0(const Mesh& mesh) {
  if (!mesh.has_tag(BoundaryTag::Gamma0)) throw Error("ill_posed", well_posedness_hint(mesh));
}

/// Condensed normal equations with the given local treatment.
inline SolutionFields solve_with(const FormulationSpec& spec, const Mesh& mesh, const MaterialParams& mat, int p,
                                 const BoundaryData& bc, const LocalOptions& opt, const SolverOptions& so = {}) {
  require_gamma0(mesh);
  const Discretization d = make_discretization(spec, mesh, p, bc);
  const GlobalSystem gs = assemble_global(d, mesh, mat, bc, opt);
  return collect(d, mesh, gs.numbering, solve_spd(gs.stiffness, gs.rhs, mesh, so));
}

/// DPG with every test slot Gram-treated: broken slots at p+dp, L2 slots at p-1+dp.
inline SolutionFields assemble_and_solve(const FormulationSpec& spec, const Mesh& mesh, const MaterialParams& mat, int p,
                                         int dp, const BoundaryData& bc, const SolverOptions& so = {}) {
  return solve_with(spec, mesh, mat, p, bc, LocalOptions::enriched(p, dp), so);
}

/// Strong form with the L2 Riesz map applied exactly.
inline SolutionFields solve_fosls(const Mesh& mesh, const MaterialParams& mat, int p, const BoundaryData& bc,
                                 const SolverOptions& so = {}) {
  return solve_with(make_spec(Formulation::Strong), mesh, mat, p, bc, {p + 1, p, true}, so);
}

/// Mixed form: Gram inverse on the broken H(div) slot, exact least squares on v and w.
inline SolutionFields solve_hybrid_mixed(const Mesh& mesh, const MaterialParams& mat, int p, int dp, const BoundaryData& bc,
                                        const SolverOptions& so = {}) {
  return solve_with(make_spec(Formulation::Mixed), mesh, mat, p, bc, {p + dp, p - 1 + dp, true}, so);
}

struct SaddlePointResult {
  SolutionFields fields;
  std::vector<VectorXd> psi;   // error representation per element (local test coefficients)
  double orthogonality = 0.0;  // max |B^T psi| over free trial dofs
};

/// The indefinite system [-G B; B^T 0] over broken test dofs and free trial dofs.
inline SaddlePointResult solve_saddle_point(const FormulationSpec& spec, const Mesh& mesh, const MaterialParams& mat, int p,
                                            int dp, const BoundaryData& bc) {
  require_gamma0(mesh);
  const Discretization d = make_discretization(spec, mesh, p, bc);
  const DofNumbering n = number_dofs(d);
  const LocalOptions opt = LocalOptions::enriched(p, dp);
  std::vector<LocalSystem> loc;
  std::vector<Index> row0;
  Index ntest = 0;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    loc.push_back(build_local_system(d, mesh, t, mat, bc, opt));
    row0.push_back(ntest);
    ntest += loc.back().G.rows();
  }
  const Index N = ntest + n.nfree;
  std::vector<Eigen::Triplet<double>> trip;
  VectorXd rhs = VectorXd::Zero(N);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const LocalSystem& ls = loc[std::size_t(t)];
    MatrixXd BB(ls.G.rows(), ls.B.cols() + ls.Bhat.cols());
    BB << ls.B, ls.Bhat;
    for (Index i = 0; i < ls.G.rows(); ++i) {
      const Index r = row0[std::size_t(t)] + i;
      rhs(r) += ls.l(i);
      for (Index j = 0; j < ls.G.cols(); ++j) trip.emplace_back(r, row0[std::size_t(t)] + j, -ls.G(i, j));
      for (Index j = 0; j < BB.cols(); ++j) {
        const Index g = ls.trial_cols[std::size_t(j)];
        const Index fj = n.free[std::size_t(g)];
        if (fj >= 0) {
          trip.emplace_back(r, ntest + fj, BB(i, j));
          trip.emplace_back(ntest + fj, r, BB(i, j));
        } else {
          rhs(r) -= BB(i, j) * n.fixed(g);
        }
      }
    }
  }
  SparseMatrix M(N, N);
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw Error("singular_system", "solve_saddle_point: factorization failed; " + well_posedness_hint(mesh));
  const VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw Error("solver_failed", "solve_saddle_point: back substitution failed");

  SaddlePointResult res;
  res.fields = collect(d, mesh, n, x.tail(n.nfree));
  VectorXd Btpsi = VectorXd::Zero(n.nfree);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const LocalSystem& ls = loc[std::size_t(t)];
    const VectorXd psi = x.segment(row0[std::size_t(t)], ls.G.rows());
    MatrixXd BB(ls.G.rows(), ls.B.cols() + ls.Bhat.cols());
    BB << ls.B, ls.Bhat;
    const VectorXd c = BB.transpose() * psi;
    for (Index j = 0; j < c.size(); ++j) {
      const Index fj = n.free[std::size_t(ls.trial_cols[std::size_t(j)])];
      if (fj >= 0) Btpsi(fj) += c(j);
    }
    res.psi.push_back(psi);
  }
  res.orthogonality = Btpsi.size() ? Btpsi.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

/// Bubnov-Galerkin: (C grad u, grad v) = (f, v) + <g, v>_Gamma1 on conforming H1.
inline SolutionFields solve_galerkin_primal(const Mesh& mesh, const MaterialParams& mat, int p, const BoundaryData& bc,
                                            const SolverOptions& so = {}) {
  require_gamma0(mesh);
  const Discretization d = make_discretization(make_spec(Formulation::Galerkin), mesh, p, bc);
  const DofNumbering n = number_dofs(d);
  const DofSpace& sp = d.spaces[0];
  const Eigen::Matrix4d Cm = stiffness_matrix(mat);
  const QuadratureRule rule = triangle_rule(2 * p + 2);
  const Rule1D eg = gauss_legendre_for_degree(2 * p + 2);
  std::vector<Eigen::Triplet<double>> trip;
  VectorXd rhs = VectorXd::Zero(n.nfree);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const ElementQuadrature q = map_rule(mesh.corners(t), rule);
    const LocalBasis b = local_basis(sp, mesh, t);
    const FieldEval u = tabulate(b, q.x);
    const MatrixXd K = detail::wdot(u.grad, detail::apply4(Cm, u.grad), q.w, 4);
    VectorXd fq(2 * q.w.size());
    for (Index k = 0; k < q.w.size(); ++k) fq.segment<2>(2 * k) = bc.force(q.x[k]);
    VectorXd r = detail::wdot(u.vec, fq, q.w, 2);
    for (int i = 0; i < 3; ++i) {
      const auto& e = mesh.edges()[mesh.triangle_edges(t)[i]];
      if (e.tag != BoundaryTag::Gamma1) continue;
      const EdgeQuadrature eq = map_edge_rule(mesh.vertices()[e.v[0]], mesh.vertices()[e.v[1]], eg);
      const FieldEval ue = tabulate(b, eq.x);
      VectorXd gq(2 * eq.w.size());
      for (Index k = 0; k < eq.w.size(); ++k) gq.segment<2>(2 * k) = bc.traction(eq.x[k], e.normal);
      r += detail::wdot(ue.vec, gq, eq.w, 2);
    }
    scatter(0.5 * (K + K.transpose()), r, sp.global_dofs(t), n, trip, rhs);
  }
  SparseMatrix A(n.nfree, n.nfree);
  A.setFromTriplets(trip.begin(), trip.end());
  return collect(d, mesh, n, solve_spd(A, rhs, mesh, so));
}

/// Dispatch used by the drivers: strong -> FOSLS, mixed -> hybrid, galerkin -> Bubnov-Galerkin.
inline SolutionFields solve_default(Formulation f, const Mesh& mesh, const MaterialParams& mat, int p, int dp,
                                    const BoundaryData& bc, const SolverOptions& so = {}) {
  switch (f) {
    case Formulation::Strong: return solve_fosls(mesh, mat, p, bc, so);
    case Formulation::Mixed: return solve_hybrid_mixed(mesh, mat, p, dp, bc, so);
    case Formulation::Galerkin: return solve_galerkin_primal(mesh, mat, p, bc, so);
    default: return assemble_and_solve(make_spec(f), mesh, mat, p, dp, bc, so);
  }
}

}  // namespace dpg
