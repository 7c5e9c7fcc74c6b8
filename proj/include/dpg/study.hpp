#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infsup.hpp"
#include "residual.hpp"

namespace dpg {

enum class Benchmark { SmoothSquare, LShapeSingular };
enum class Refinement { Uniform, Adaptive };

inline const char* to_string(Benchmark b) { return b == Benchmark::SmoothSquare ? "smooth_square" : "lshape_singular"; }
inline const char* to_string(Refinement r) { return r == Refinement::Uniform ? "uniform" : "adaptive"; }

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
  return v;
}

struct RunConfig {
  Benchmark benchmark = Benchmark::SmoothSquare;
  Formulation formulation = Formulation::Primal;
  int p = 1;
  int dp = 1;
  int p_res = 4;
  Refinement refinement = Refinement::Uniform;
  int steps = 4;      // refinements after the initial solve
  int initial_n = 2;  // subdivisions of the initial mesh
  std::optional<double> lambda, mu;  // default: 1, 1 (smooth) or 123, 79.3 (L-shape)
  double solver_tolerance = 1e-12;
  std::string output_dir = "out";
  bool vtk = false;

  double lambda_value() const { return lambda.value_or(benchmark == Benchmark::SmoothSquare ? 1.0 : 123.0); }
  double mu_value() const { return mu.value_or(benchmark == Benchmark::SmoothSquare ? 1.0 : 79.3); }

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{"benchmark", "formulation", "p",      "dp",   "p_res",
                                            "refinement", "steps",      "initial_n", "lambda", "mu",
                                            "solver_tolerance", "output_dir", "vtk"};
    return k;
  }

  /// Throws std::invalid_argument on unknown keys or malformed values.
  void set(const std::string& key, const std::string& value) {
    const auto bad = [&]() { return std::invalid_argument("bad value '" + value + "' for key '" + key + "'"); };
    const auto to_int = [&]() {
      try {
        std::size_t pos = 0;
        const int x = std::stoi(value, &pos);
        if (pos == value.size()) return x;
      } catch (const std::exception&) {
      }
      throw bad();
    };
    const auto to_double = [&]() {
      try {
        return parse_double(value);
      } catch (const std::exception&) {
        throw bad();
      }
    };
    if (key == "benchmark") {
      if (value == "smooth_square") benchmark = Benchmark::SmoothSquare;
      else if (value == "lshape_singular") benchmark = Benchmark::LShapeSingular;
      else throw bad();
    } else if (key == "formulation") {
      try {
        formulation = formulation_from_string(value);
      } catch (const std::invalid_argument&) {
        throw bad();
      }
    } else if (key == "p") p = to_int();
    else if (key == "dp") dp = to_int();
    else if (key == "p_res") p_res = to_int();
    else if (key == "refinement") {
      if (value == "uniform") refinement = Refinement::Uniform;
      else if (value == "adaptive") refinement = Refinement::Adaptive;
      else throw bad();
    } else if (key == "steps") steps = to_int();
    else if (key == "initial_n") initial_n = to_int();
    else if (key == "lambda") lambda = to_double();
    else if (key == "mu") mu = to_double();
    else if (key == "solver_tolerance") solver_tolerance = to_double();
    else if (key == "output_dir") output_dir = value;
    else if (key == "vtk") {
      if (value == "true" || value == "1") vtk = true;
      else if (value == "false" || value == "0") vtk = false;
      else throw bad();
    } else throw std::invalid_argument("unknown key '" + key + "'");
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error("invalid_config", m); };
    if (p < 1) fail("p must be >= 1");
    if (dp < 0) fail("dp must be >= 0");
    if (p_res < p + 1) fail("p_res must be >= p + 1");
    if (steps < 1) fail("steps must be >= 1");
    if (initial_n < 1) fail("initial_n must be >= 1");
    if (!(solver_tolerance > 0)) fail("solver_tolerance must be positive");
    try {
      (void)MaterialParams::from_lame(lambda_value(), mu_value());
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

  std::map<std::string, std::string> snapshot() const {
    return {{"benchmark", to_string(benchmark)},
            {"formulation", to_string(formulation)},
            {"p", std::to_string(p)},
            {"dp", std::to_string(dp)},
            {"p_res", std::to_string(p_res)},
            {"refinement", to_string(refinement)},
            {"steps", std::to_string(steps)},
            {"initial_n", std::to_string(initial_n)},
            {"lambda", format_double(lambda_value())},
            {"mu", format_double(mu_value())},
            {"solver_tolerance", format_double(solver_tolerance)},
            {"output_dir", output_dir},
            {"vtk", vtk ? "true" : "false"}};
  }

  std::string to_text() const {
    const auto s = snapshot();
    std::string out;
    for (const auto& k : keys()) out += k + "=" + s.at(k) + "\n";
    return out;
  }
};

/// key=value lines, '#' comments, blank lines ignored. Errors name the line.
inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("invalid_config", "line " + std::to_string(lineno) + ": expected key=value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw Error("invalid_config", "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, RunConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open config file " + path);
  return parse_config(in, cfg);
}

inline MaterialParams config_material(const RunConfig& c) { return MaterialParams::from_lame(c.lambda_value(), c.mu_value()); }

inline Problem make_problem(const RunConfig& c) {
  const MaterialParams m = config_material(c);
  const ExactSolution ex = c.benchmark == Benchmark::SmoothSquare ? smooth_solution_2d(m) : singular_solution(m);
  const Mesh mesh = c.benchmark == Benchmark::SmoothSquare ? build_square_mesh(c.initial_n) : build_lshape_mesh(c.initial_n);
  return Problem{mesh, m, ex.boundary_data(), ex};
}

struct ConvergenceRow {
  int step = 0;
  Index elements = 0;
  Index dofs = 0;
  double eta = 0.0;  // nan for the Galerkin baseline
  double rel_error = 0.0;
  Index marked = 0;
  double wall_time = 0.0;  // seconds, not written to CSV
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
  int fit_rows = 2;
  double error_slope = std::numeric_limits<double>::quiet_NaN();
  double eta_slope = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr const char* convergence_csv_header = "step,elements,dofs,eta,rel_error,marked";

/// Least-squares slope of log10(value) against log10(dofs) over the last K points.
inline double estimate_rate(const std::vector<double>& dofs, const std::vector<double>& values, int K) {
  if (K < 2 || std::size_t(K) > dofs.size() || dofs.size() != values.size())
    throw Error("invalid_fit", "estimate_rate needs 2 <= K <= rows");
  const std::size_t n0 = dofs.size() - std::size_t(K);
  double sx = 0, sy = 0;
  for (std::size_t i = n0; i < dofs.size(); ++i) {
    sx += std::log10(dofs[i]);
    sy += std::log10(values[i]);
  }
  sx /= K;
  sy /= K;
  double sxx = 0, sxy = 0;
  for (std::size_t i = n0; i < dofs.size(); ++i) {
    const double dx = std::log10(dofs[i]) - sx;
    sxx += dx * dx;
    sxy += dx * (std::log10(values[i]) - sy);
  }
  if (!(sxx > 0)) throw Error("degenerate_fit", "estimate_rate: dofs are constant over the fitted rows");
  return sxy / sxx;
}

enum class RateOf { Error, Eta };

inline double estimate_rate(const ConvergenceRecord& rec, int K, RateOf what = RateOf::Error) {
  std::vector<double> d, v;
  for (const auto& r : rec.rows) {
    d.push_back(double(r.dofs));
    v.push_back(what == RateOf::Error ? r.rel_error : r.eta);
  }
  return estimate_rate(d, v, K);
}

inline void fit_slopes(ConvergenceRecord& rec, int K) {
  rec.fit_rows = K;
  if (rec.rows.size() < 2) return;
  K = std::min<int>(K, int(rec.rows.size()));
  rec.error_slope = estimate_rate(rec, K, RateOf::Error);
  bool has_eta = true;
  for (const auto& r : rec.rows) has_eta = has_eta && std::isfinite(r.eta);
  if (has_eta) rec.eta_slope = estimate_rate(rec, K, RateOf::Eta);
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceRecord& rec) {
  os << convergence_csv_header << '\n';
  for (const auto& r : rec.rows)
    os << r.step << ',' << r.elements << ',' << r.dofs << ',' << format_double(r.eta) << ',' << format_double(r.rel_error)
       << ',' << r.marked << '\n';
}

inline ConvergenceRecord read_convergence_csv(std::istream& is) {
  ConvergenceRecord rec;
  std::string line;
  if (!std::getline(is, line) || line != convergence_csv_header) throw Error("bad_csv", "unexpected CSV header");
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    if (f.size() != 6) throw Error("bad_csv", "line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      ConvergenceRow r;
      r.step = std::stoi(f[0]);
      r.elements = std::stoll(f[1]);
      r.dofs = std::stoll(f[2]);
      r.eta = parse_double(f[3]);
      r.rel_error = parse_double(f[4]);
      r.marked = std::stoll(f[5]);
      rec.rows.push_back(r);
    } catch (const std::exception&) {
      throw Error("bad_csv", "line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rec;
}

/// Per-step callback for artifact output (mesh, fields, residual, step index).
using StepHook = std::function<void(const Mesh&, const SolutionFields&, const std::optional<ResidualReport>&, int)>;

inline ConvergenceRow make_row(int step, const Mesh& mesh, const SolutionFields& f, const std::optional<ResidualReport>& res,
                               const ErrorReport& err, Index marked, double seconds) {
  return {step,   mesh.num_triangles(), f.free_dofs, res ? res->total : std::numeric_limits<double>::quiet_NaN(),
          err.relative, marked, seconds};
}

/// Uniform study: initial solve plus `steps` uniform refinements. Slopes over the last max(2, steps-2) rows.
inline ConvergenceRecord run_convergence(const RunConfig& cfg, const StepHook& hook = {}) {
  cfg.validate();
  const Problem prob = make_problem(cfg);
  const SolverOptions so{cfg.solver_tolerance};
  ConvergenceRecord rec;
  Mesh mesh = prob.mesh;
  for (int k = 0; k <= cfg.steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolutionFields f = solve_default(cfg.formulation, mesh, prob.material, cfg.p, cfg.dp, prob.bc, so);
    std::optional<ResidualReport> res;
    if (cfg.formulation != Formulation::Galerkin) res = element_residuals(f, mesh, prob.material, prob.bc, cfg.p_res);
    const ErrorReport err = error_norms(f, *prob.exact, mesh);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.rows.push_back(make_row(k, mesh, f, res, err, 0, sec));
    if (hook) hook(mesh, f, res, k);
    if (k < cfg.steps) mesh = refine_uniform(mesh);
  }
  fit_slopes(rec, std::max(2, cfg.steps - 2));
  return rec;
}

/// Adaptive study: `steps` refinements driven by the residual marking rule.
inline ConvergenceRecord run_adaptive(const RunConfig& cfg, const StepHook& hook = {}) {
  cfg.validate();
  if (cfg.formulation == Formulation::Galerkin)
    throw Error("unsupported", "adaptive refinement needs a residual; the galerkin baseline has none");
  const Problem prob = make_problem(cfg);
  const SolverOptions so{cfg.solver_tolerance};
  ConvergenceRecord rec;
  Mesh mesh = prob.mesh;
  for (int k = 0; k <= cfg.steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolutionFields f = solve_default(cfg.formulation, mesh, prob.material, cfg.p, cfg.dp, prob.bc, so);
    const ResidualReport res = element_residuals(f, mesh, prob.material, prob.bc, cfg.p_res);
    const ErrorReport err = error_norms(f, *prob.exact, mesh);
    std::set<Index> marked;
    if (k < cfg.steps) marked = mark(res);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.rows.push_back(make_row(k, mesh, f, res, err, Index(marked.size()), sec));
    if (hook) hook(mesh, f, res, k);
    if (k < cfg.steps) mesh = refine(mesh, marked);
  }
  fit_slopes(rec, std::max(2, cfg.steps - 2));
  return rec;
}

struct InfSupRow {
  Formulation formulation;
  bool gamma0;
  int level;
  Index trial_dofs, test_dofs;
  double gamma_h;
  double lambda_min;
};

inline constexpr const char* infsup_csv_header = "formulation,gamma0,level,trial_dofs,test_dofs,gamma_h,lambda_min";

/// Five formulations x 3 levels x {Gamma0 = boundary, Gamma0 empty} on the unit square, initial_n subdivisions.
inline std::vector<InfSupRow> run_infsup(const RunConfig& cfg, int levels = 3) {
  cfg.validate();
  const MaterialParams m = config_material(cfg);
  std::vector<InfSupRow> out;
  for (Formulation f : {Formulation::Strong, Formulation::Ultraweak, Formulation::DualMixed, Formulation::Mixed,
                        Formulation::Primal})
    for (bool g0 : {true, false}) {
      Mesh mesh = with_boundary(build_square_mesh(cfg.initial_n), g0 ? BoundaryTag::Gamma0 : BoundaryTag::Gamma1);
      for (int l = 0; l < levels; ++l) {
        const InfSupReport r = discrete_infsup(f, mesh, m, cfg.p);
        out.push_back({f, g0, l, r.trial_dofs, r.test_dofs, r.gamma_h, r.lambda_min});
        if (l + 1 < levels) mesh = refine_uniform(mesh);
      }
    }
  return out;
}

inline void write_infsup_csv(std::ostream& os, const std::vector<InfSupRow>& rows) {
  os << infsup_csv_header << '\n';
  for (const auto& r : rows)
    os << to_string(r.formulation) << ',' << (r.gamma0 ? "nonempty" : "empty") << ',' << r.level << ',' << r.trial_dofs << ','
       << r.test_dofs << ',' << format_double(r.gamma_h) << ',' << format_double(r.lambda_min) << '\n';
}

}  // namespace dpg
