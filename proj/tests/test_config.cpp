#include "doctest.h"
#include "gaincert/config.hpp"

using namespace gaincert;

TEST_CASE("config parses keys and applies defaults") {
  const RunConfig cfg = parse_config(
      "# pendulum run\n"
      "system = pendulum_kx2\n"
      "region = -0.8 0.8 -0.8 0.8\n"
      "divisions = 16\n"
      "seed = 7\n");
  CHECK(cfg.system == "pendulum_kx2");
  CHECK(cfg.region.dim() == 2);
  CHECK(cfg.region.lo(0) == -0.8);
  CHECK(cfg.region.hi(1) == 0.8);
  CHECK(cfg.divisions == 16);
  CHECK(cfg.seed == 7);
  // Documented defaults.
  CHECK(cfg.mode == "auto");
  CHECK(cfg.solver_tol == 1e-8);
  CHECK(cfg.solver_max_iters == 200000);
  CHECK(cfg.check_samples == 10000);
  CHECK(cfg.check_tol == 1e-6);
  CHECK(cfg.alpha_min == 1e-8);
  CHECK_FALSE(cfg.timings);
}

TEST_CASE("config rejects unknown keys and malformed values") {
  CHECK_THROWS_AS(parse_config("system = linear1d\nregion = -1 1\nwat = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("system = linear1d\nregion = -1 1\ndivisions = four\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("system = linear1d\nregion = -1 1\nmode = purple\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("system = linear1d\nregion = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("system = linear1d\nregion = 1 -1\n"), ConfigError);
}

TEST_CASE("config requires system and region") {
  CHECK_THROWS_AS(parse_config("region = -1 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("system = linear1d\n"), ConfigError);
}

TEST_CASE("timings toggle") {
  CHECK(parse_config("system = a\nregion = -1 1\ntimings = on\n").timings);
  CHECK_FALSE(parse_config("system = a\nregion = -1 1\ntimings = off\n").timings);
  CHECK_THROWS_AS(parse_config("system = a\nregion = -1 1\ntimings = maybe\n"), ConfigError);
}
