#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gaincert/mesh.hpp"

namespace gaincert {

/// Flat key=value run configuration. Every key except `system` and `region`
/// has a default. See README for the documented key list.
struct RunConfig {
  std::string system;          // pendulum_k1 | pendulum_kx2 | linear1d
  Box region;                  // "region = lo hi [lo hi ...]"
  std::string mode = "auto";   // cpa | hybrid | auto (cpa when B = 0)
  std::optional<double> epsilon;
  int divisions = 8;
  int refine_steps = 0;        // extra refinements before a single analysis
  int levels = 4;              // sweep levels
  int segments = 16;           // annulus boundary segments
  double solver_tol = 1e-8;
  int solver_max_iters = 200000;
  double alpha_min = 1e-8;
  int check_samples = 10000;
  double check_tol = 1e-6;
  int sim_inputs = 100;
  double sim_horizon = 50.0;
  double sim_dt = 1e-3;
  double r_u = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
  bool timings = false;  // measured times in output files break reproducibility
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace gaincert
