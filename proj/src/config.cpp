#include "gaincert/config.hpp"

#include <fstream>
#include <sstream>

namespace gaincert {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  const auto end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != static_cast<int>(v)) throw ConfigError(key + " must be an integer");
  return static_cast<int>(v);
}

Box parse_region(const std::string& value) {
  std::istringstream is(value);
  std::vector<double> nums;
  double v;
  while (is >> v) nums.push_back(v);
  if (nums.empty() || nums.size() % 2 != 0) {
    throw ConfigError("region must be 'lo hi' pairs, one per axis");
  }
  const int n = static_cast<int>(nums.size() / 2);
  Box box;
  box.lo.resize(n);
  box.hi.resize(n);
  for (int a = 0; a < n; ++a) {
    box.lo(a) = nums[static_cast<size_t>(2 * a)];
    box.hi(a) = nums[static_cast<size_t>(2 * a) + 1];
    if (!(box.lo(a) < box.hi(a))) throw ConfigError("region lo must be below hi");
  }
  return box;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool have_system = false, have_region = false;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "system") {
      cfg.system = value;
      have_system = true;
    } else if (key == "region") {
      cfg.region = parse_region(value);
      have_region = true;
    } else if (key == "mode") {
      if (value != "cpa" && value != "hybrid" && value != "auto") {
        throw ConfigError("mode must be cpa, hybrid or auto");
      }
      cfg.mode = value;
    } else if (key == "epsilon") {
      cfg.epsilon = to_double(key, value);
    } else if (key == "divisions") {
      cfg.divisions = to_int(key, value);
    } else if (key == "refine") {
      cfg.refine_steps = to_int(key, value);
    } else if (key == "levels") {
      cfg.levels = to_int(key, value);
    } else if (key == "segments") {
      cfg.segments = to_int(key, value);
    } else if (key == "solver_tol") {
      cfg.solver_tol = to_double(key, value);
    } else if (key == "solver_max_iters") {
      cfg.solver_max_iters = to_int(key, value);
    } else if (key == "alpha_min") {
      cfg.alpha_min = to_double(key, value);
    } else if (key == "check_samples") {
      cfg.check_samples = to_int(key, value);
    } else if (key == "check_tol") {
      cfg.check_tol = to_double(key, value);
    } else if (key == "sim_inputs") {
      cfg.sim_inputs = to_int(key, value);
    } else if (key == "sim_horizon") {
      cfg.sim_horizon = to_double(key, value);
    } else if (key == "sim_dt") {
      cfg.sim_dt = to_double(key, value);
    } else if (key == "r_u") {
      cfg.r_u = to_double(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_double(key, value));
    } else if (key == "threads") {
      cfg.threads = to_int(key, value);
    } else if (key == "timings") {
      if (value == "on" || value == "true" || value == "1") {
        cfg.timings = true;
      } else if (value == "off" || value == "false" || value == "0") {
        cfg.timings = false;
      } else {
        throw ConfigError("timings must be on or off");
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!have_system) throw ConfigError("config is missing 'system'");
  if (!have_region) throw ConfigError("config is missing 'region'");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace gaincert
