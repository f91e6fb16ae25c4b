#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "gaincert/check.hpp"
#include "gaincert/config.hpp"
#include "json.hpp"

// gaincert CLI: batch gain analysis with machine-readable outputs.
// Exit codes: 0 pass, 1 usage/IO error, 2 infeasible, 3 check failure.

namespace {

using namespace gaincert;

SystemModel model_by_name(const std::string& name) {
  if (name == "pendulum_k1") return pendulum(PendulumInput::kConstantOne);
  if (name == "pendulum_kx2") return pendulum(PendulumInput::kX2Affine);
  if (name == "linear1d") return linear_test();
  throw ConfigError("unknown system '" + name + "'");
}

std::string resolve_mode(const RunConfig& cfg, const SystemModel& model) {
  if (cfg.mode != "auto") return cfg.mode;
  return model.has_zero_B() ? "cpa" : "hybrid";
}

AnalysisOptions analysis_options(const RunConfig& cfg) {
  AnalysisOptions opts;
  opts.solver.tol = cfg.solver_tol;
  opts.solver.max_iters = cfg.solver_max_iters;
  opts.assembly.alpha_min = cfg.alpha_min;
  opts.r_u = cfg.r_u;
  return opts;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

double config_epsilon(const RunConfig& cfg) {
  return cfg.epsilon.value_or(0.1 * cfg.region.inscribed_radius());
}

int cmd_analyze(const RunConfig& cfg, const std::filesystem::path& outdir) {
  const SystemModel model = model_by_name(cfg.system);
  const std::string mode = resolve_mode(cfg, model);

  AnalysisResult result;
  if (mode == "cpa") {
    auto mesh = std::make_shared<Triangulation>(build_origin_fan_grid(cfg.region, cfg.divisions));
    for (int r = 0; r < cfg.refine_steps; ++r) mesh = std::make_shared<Triangulation>(refine(*mesh));
    result = bound_gain_cpa(model, mesh, analysis_options(cfg));
  } else {
    const double eps = config_epsilon(cfg);
    auto mesh = std::make_shared<Triangulation>(
        build_annulus(cfg.region, cfg.divisions, eps, cfg.segments));
    for (int r = 0; r < cfg.refine_steps; ++r) mesh = std::make_shared<Triangulation>(refine(*mesh));
    result = bound_gain_hybrid(model, mesh, eps, analysis_options(cfg));
  }

  if (!result.feasible()) {
    std::printf("no certificate at this mesh/region (solver status: %s)\n",
                to_string(result.status).c_str());
    return 2;
  }
  const GainCertificate& cert = *result.certificate;
  write_file(outdir / "certificate.json", certificate_to_json(cert, model.name(), cfg.region));
  std::printf("gamma_star = %.6f  (alpha = %.6f)\n", cert.gamma_star, cert.alpha_star);
  std::printf("mesh: %d simplexes, %d vertices\n", cert.mesh_stats.num_simplexes,
              cert.mesh_stats.num_vertices);
  std::printf("solver: %s in %d iterations, %.2fs\n", cert.solver_stats.status.c_str(),
              cert.solver_stats.iterations, cert.solver_stats.wall_seconds);
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& outdir) {
  const SystemModel model = model_by_name(cfg.system);
  const std::string mode = resolve_mode(cfg, model);
  SweepOptions opts;
  opts.analysis = analysis_options(cfg);
  opts.divisions = cfg.divisions;
  opts.boundary_segments = cfg.segments;
  if (mode == "hybrid") opts.epsilon = config_epsilon(cfg);
  const auto rows = refinement_sweep(model, cfg.region, cfg.levels,
                                     mode == "hybrid" ? GainMode::kHybrid : GainMode::kCpa, opts);
  write_file(outdir / "sweep.csv", sweep_to_csv(rows, cfg.timings));
  for (const SweepRow& row : rows) {
    std::printf("%8d simplexes   gamma* = %-10.6g  (%.2fs)\n", row.num_simplexes, row.gamma_star,
                row.solve_seconds);
  }
  return 0;
}

int cmd_check(const RunConfig& cfg, const std::filesystem::path& outdir,
              const std::string& certificate_path) {
  std::ifstream in(certificate_path);
  if (!in) {
    std::fprintf(stderr, "cannot open certificate '%s'\n", certificate_path.c_str());
    return 1;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  LoadedCertificate loaded = certificate_from_json(buf.str());
  const SystemModel model = model_by_name(loaded.system_name);

  CheckReport report =
      check_hji_samples(model, loaded.certificate, cfg.check_samples, cfg.check_tol, cfg.seed);

  auto inputs = random_band_limited_inputs(cfg.sim_inputs, cfg.r_u, cfg.seed);
  const auto sims = empirical_gain_lower_bound(model, inputs, cfg.sim_horizon, cfg.sim_dt,
                                               loaded.region);
  bool sandwich_ok = true;
  double worst_ratio = 0.0;
  int excluded = 0;
  for (const SimulationResult& sim : sims) {
    if (!sim.state_stayed_in_region) {
      ++excluded;
      continue;
    }
    worst_ratio = std::max(worst_ratio, sim.l2_ratio);
    if (sim.l2_ratio > loaded.certificate.gamma_star) sandwich_ok = false;
  }

  nlohmann::ordered_json j;
  j["hji"] = {{"max_violation", report.max_violation},
              {"num_samples", report.num_samples},
              {"num_skipped", report.num_skipped},
              {"tol", report.tol},
              {"passed", report.passed}};
  j["sandwich"] = {{"num_inputs", static_cast<int>(sims.size())},
                   {"excluded_out_of_region", excluded},
                   {"worst_ratio", worst_ratio},
                   {"gamma_star", loaded.certificate.gamma_star},
                   {"passed", sandwich_ok}};
  write_file(outdir / "check.json", j.dump(2) + "\n");

  std::printf("hji sampling: max violation %.3e over %d samples -> %s\n", report.max_violation,
              report.num_samples, report.passed ? "pass" : "FAIL");
  std::printf("sandwich: worst in-region ratio %.4f vs gamma* %.4f -> %s\n", worst_ratio,
              loaded.certificate.gamma_star, sandwich_ok ? "pass" : "FAIL");
  return (report.passed && sandwich_ok) ? 0 : 3;
}

int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& outdir) {
  const SystemModel model = model_by_name(cfg.system);
  auto inputs = random_band_limited_inputs(cfg.sim_inputs, cfg.r_u, cfg.seed);
  const auto sims =
      empirical_gain_lower_bound(model, inputs, cfg.sim_horizon, cfg.sim_dt, cfg.region);
  std::ostringstream os;
  os << "input,l2_ratio,stayed_in_region\n";
  for (const SimulationResult& sim : sims) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", sim.l2_ratio);
    os << sim.input_description << "," << buf << "," << (sim.state_stayed_in_region ? 1 : 0)
       << "\n";
  }
  write_file(outdir / "simulate.csv", os.str());
  std::printf("simulated %zu inputs\n", sims.size());
  return 0;
}

int cmd_export_mesh(const RunConfig& cfg, const std::filesystem::path& outdir) {
  const SystemModel model = model_by_name(cfg.system);
  const std::string mode = resolve_mode(cfg, model);
  Triangulation mesh = mode == "hybrid"
                           ? build_annulus(cfg.region, cfg.divisions, config_epsilon(cfg),
                                           cfg.segments)
                           : build_origin_fan_grid(cfg.region, cfg.divisions);
  for (int r = 0; r < cfg.refine_steps; ++r) mesh = refine(mesh);
  write_file(outdir / "mesh.json", mesh.to_json() + "\n");
  std::printf("mesh: %d simplexes, %d vertices\n", mesh.num_simplexes(), mesh.num_vertices());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified L2-gain upper bounds via CPA storage functions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--threads", threads_override, "override the config thread count");

  auto* analyze = app.add_subcommand("analyze", "solve one gain problem, write certificate.json");
  auto* sweep = app.add_subcommand("sweep", "refinement sweep, write sweep.csv");
  auto* check = app.add_subcommand("check", "re-verify a certificate, write check.json");
  auto* simulate = app.add_subcommand("simulate", "empirical L2 ratios, write simulate.csv");
  auto* export_mesh = app.add_subcommand("export-mesh", "write the configured mesh as JSON");
  for (CLI::App* sub : {analyze, sweep, check, simulate, export_mesh}) {
    sub->fallthrough();  // global flags may follow the subcommand name
  }

  std::string certificate_path = "certificate.json";
  check->add_option("certificate", certificate_path, "certificate JSON to verify");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (threads_override) cfg.threads = *threads_override;
    std::filesystem::path outdir(out_dir);
    std::filesystem::create_directories(outdir);

    if (analyze->parsed()) return cmd_analyze(cfg, outdir);
    if (sweep->parsed()) return cmd_sweep(cfg, outdir);
    if (check->parsed()) return cmd_check(cfg, outdir, certificate_path);
    if (simulate->parsed()) return cmd_simulate(cfg, outdir);
    if (export_mesh->parsed()) return cmd_export_mesh(cfg, outdir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
