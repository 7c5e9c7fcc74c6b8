// Command-line front end: converge, adapt, infsup, dump-mesh.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <dpg/dpg.hpp>

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_path, "key=value config file; flags override its entries");
  for (const auto& key : dpg::RunConfig::keys())
    flags.options[key] = app->add_option("--" + key, flags.values[key], "config key '" + key + "'");
}

dpg::RunConfig resolve_config(const ConfigFlags& flags, dpg::RunConfig cfg) {
  if (!flags.config_path.empty()) cfg = dpg::load_config(flags.config_path, cfg);
  for (const auto& key : dpg::RunConfig::keys()) {
    if (flags.options.at(key)->count() == 0) continue;
    try {
      cfg.set(key, flags.values.at(key));
    } catch (const std::invalid_argument& e) {
      throw dpg::Error("invalid_config", std::string("flag --") + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int fail(const std::string& code, const std::string& message, int status = 1) {
  std::cerr << "error code=" << code << " message=\"" << escape(message) << "\"\n";
  return status;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
  os.flush();
  if (!os) throw dpg::Error("io_error", "write failed for " + path.string());
}

std::string step_name(const char* stem, int k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d.%s", stem, k, ext);
  return buf;
}

void print_record(const dpg::ConvergenceRecord& rec) {
  std::printf("%5s %9s %10s %14s %14s %7s %9s\n", "step", "elements", "dofs", "eta", "rel_error", "marked", "seconds");
  for (const auto& r : rec.rows)
    std::printf("%5d %9td %10td %14.6e %14.6e %7td %9.3f\n", r.step, r.elements, r.dofs, r.eta, r.rel_error, r.marked, r.wall_time);
  std::printf("fit over last %d rows: error slope %.4f, eta slope %.4f\n", rec.fit_rows, rec.error_slope, rec.eta_slope);
}

void run_study(const dpg::RunConfig& cfg, bool adaptive) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  dpg::StudyManifest manifest;
  manifest.config = cfg.snapshot();
  std::vector<std::pair<int, std::string>> step_files;
  auto hook = [&](const dpg::Mesh& mesh, const dpg::SolutionFields& f, const std::optional<dpg::ResidualReport>& res, int k) {
    if (!cfg.vtk) return;
    const std::string vtk = step_name("mesh", k, "vtk"), sol = step_name("solution", k, "txt");
    std::ofstream os(dir / vtk);
    std::vector<std::pair<std::string, std::vector<double>>> cells;
    if (res) cells.emplace_back("eta", res->eta);
    dpg::write_vtk(os, mesh, cells);
    os.close();
    dpg::save_solution(f, mesh, (dir / sol).string());
    step_files.emplace_back(k, vtk);
    step_files.emplace_back(k, sol);
  };
  const dpg::ConvergenceRecord rec = adaptive ? dpg::run_adaptive(cfg, hook) : dpg::run_convergence(cfg, hook);
  const std::string csv = adaptive ? "adaptive.csv" : "convergence.csv";
  std::ostringstream ss;
  dpg::write_convergence_csv(ss, rec);
  write_text(dir / csv, ss.str());
  manifest.add(dir, csv);
  for (const auto& [k, file] : step_files) manifest.add(dir, file, k);
  dpg::save_manifest(manifest, (dir / "manifest.json").string());
  print_record(rec);
  std::printf("wrote %s\n", (dir / csv).string().c_str());
}

void run_infsup_cmd(const dpg::RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const auto rows = dpg::run_infsup(cfg);
  std::ostringstream ss;
  dpg::write_infsup_csv(ss, rows);
  write_text(dir / "infsup.csv", ss.str());
  dpg::StudyManifest manifest;
  manifest.config = cfg.snapshot();
  manifest.add(dir, "infsup.csv");
  dpg::save_manifest(manifest, (dir / "manifest.json").string());
  std::printf("%-10s %-9s %5s %8s %8s %14s\n", "form", "gamma0", "level", "trial", "test", "gamma_h");
  for (const auto& r : rows)
    std::printf("%-10s %-9s %5d %8td %8td %14.6e\n", dpg::to_string(r.formulation), r.gamma0 ? "nonempty" : "empty", r.level,
                r.trial_dofs, r.test_dofs, r.gamma_h);
  std::printf("wrote %s\n", (dir / "infsup.csv").string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-residual (DPG) solver for 2D plane-strain elasticity"};
  app.require_subcommand(1);

  ConfigFlags conv_flags, adapt_flags, infsup_flags;
  auto* conv = app.add_subcommand("converge", "uniform refinement study, writes convergence.csv");
  add_config_flags(conv, conv_flags);
  auto* adapt = app.add_subcommand("adapt", "adaptive refinement study, writes adaptive.csv");
  add_config_flags(adapt, adapt_flags);
  auto* infsup = app.add_subcommand("infsup", "discrete inf-sup constants, writes infsup.csv");
  add_config_flags(infsup, infsup_flags);

  auto* dump = app.add_subcommand("dump-mesh", "write a benchmark mesh as legacy VTK");
  std::string benchmark = "smooth_square", output = "mesh.vtk", mesh_out;
  int initial_n = 2, refinements = 0;
  dump->add_option("--benchmark", benchmark, "smooth_square or lshape_singular");
  dump->add_option("--initial_n", initial_n, "subdivisions of the initial mesh");
  dump->add_option("--refinements", refinements, "uniform refinements applied before writing");
  dump->add_option("--output", output, "VTK file path");
  dump->add_option("--mesh-out", mesh_out, "also write the native mesh text format here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (conv->parsed()) {
      const dpg::RunConfig cfg = resolve_config(conv_flags, {});
      if (cfg.refinement != dpg::Refinement::Uniform)
        throw dpg::Error("invalid_config", "converge runs uniform refinement; use the adapt subcommand");
      run_study(cfg, false);
    } else if (adapt->parsed()) {
      dpg::RunConfig base;
      base.benchmark = dpg::Benchmark::LShapeSingular;
      base.refinement = dpg::Refinement::Adaptive;
      base.steps = 9;
      const dpg::RunConfig cfg = resolve_config(adapt_flags, base);
      if (cfg.refinement != dpg::Refinement::Adaptive)
        throw dpg::Error("invalid_config", "adapt runs adaptive refinement; use the converge subcommand");
      run_study(cfg, true);
    } else if (infsup->parsed()) {
      run_infsup_cmd(resolve_config(infsup_flags, {}));
    } else if (dump->parsed()) {
      dpg::RunConfig cfg;
      cfg.set("benchmark", benchmark);
      cfg.initial_n = initial_n;
      if (initial_n < 1 || refinements < 0) throw dpg::Error("invalid_config", "initial_n must be >= 1 and refinements >= 0");
      dpg::Mesh mesh = dpg::make_problem(cfg).mesh;
      for (int k = 0; k < refinements; ++k) mesh = dpg::refine_uniform(mesh);
      std::ofstream os(output);
      if (!os) throw dpg::Error("io_error", "cannot open " + output + " for writing");
      dpg::write_vtk(os, mesh);
      if (!mesh_out.empty()) dpg::save_mesh(mesh, mesh_out);
      std::printf("wrote %s (%td vertices, %td triangles)\n", output.c_str(), mesh.num_vertices(), mesh.num_triangles());
    }
  } catch (const dpg::Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
