#include "gaincert/analysis.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace gaincert {

const Triangulation& GainCertificate::tri() const {
  if (const CpaFunction* cpa = std::get_if<CpaFunction>(&storage)) return cpa->tri();
  return std::get<HybridStorage>(storage).cpa.tri();
}

namespace {

SolverStats stats_of(const SolverResult& r) {
  return SolverStats{to_string(r.status), r.iterations, r.wall_seconds};
}

AnalysisResult run_problem(const ConstraintSet& constraints, const DecisionLayout& layout,
                           const AnalysisOptions& opts,
                           const std::function<GainCertificate(const Eigen::VectorXd&)>& build) {
  const ConicProgram program = compile(constraints, layout);
  const SolverResult solved = solve(program, opts.solver);

  AnalysisResult out;
  out.status = solved.status;
  if (solved.status != SolveStatus::kOptimal) return out;

  GainCertificate cert = build(solved.x);
  cert.alpha_star = solved.x(layout.alpha);
  cert.gamma_star = std::sqrt(cert.alpha_star);
  cert.solver_stats = stats_of(solved);
  cert.r_u = opts.r_u;
  out.certificate = std::move(cert);
  return out;
}

void append_gain_constraints(ConstraintSet& set, const SystemModel& model,
                             const Triangulation& tri, const BoundSet& bounds,
                             const DecisionLayout& layout, bool exclude_origin_vertex) {
  for (int i = 0; i < tri.num_simplexes(); ++i) {
    for (AffineExpr& e : gradient_bound_constraints(i, layout, tri)) {
      set.linear.push_back(std::move(e));
    }
  }
  for (int i = 0; i < tri.num_simplexes(); ++i) {
    const Simplex& s = tri.simplex(i);
    for (int j = 0; j <= tri.dim(); ++j) {
      if (exclude_origin_vertex && s.contains_origin && j == 0) continue;
      set.psd.push_back(gain_lmi_block(model, tri, bounds, i, j, layout));
    }
  }
}

}  // namespace

AnalysisResult bound_gain_cpa(const SystemModel& model, std::shared_ptr<const Triangulation> tri,
                              const AnalysisOptions& opts) {
  if (!model.has_zero_B()) {
    throw ModeMismatchError("CPA-only analysis requires B = 0; use the hybrid mode");
  }
  if (model.state_dim() != tri->dim()) throw ModeMismatchError("mesh/model dimension mismatch");
  bool has_origin_vertex = false;
  for (const Simplex& s : tri->simplexes()) has_origin_vertex |= s.contains_origin;
  if (!has_origin_vertex) {
    throw ModeMismatchError("CPA-only analysis needs a mesh with the origin as a vertex");
  }

  const BoundSet bounds = bounds_for(model, *tri);
  const DecisionLayout layout = DecisionLayout::make(*tri, /*hybrid=*/false);
  ConstraintSet set = side_constraints(layout, opts.assembly);
  append_gain_constraints(set, model, *tri, bounds, layout, /*exclude_origin_vertex=*/true);

  return run_problem(set, layout, opts, [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd values(tri->num_vertices());
    for (int v = 0; v < tri->num_vertices(); ++v) values(v) = x(layout.v[static_cast<size_t>(v)]);
    GainCertificate cert;
    cert.storage = CpaFunction(tri, std::move(values));
    cert.mesh_stats = MeshStats{tri->num_simplexes(), tri->num_vertices()};
    return cert;
  });
}

AnalysisResult bound_gain_hybrid(const SystemModel& model,
                                 std::shared_ptr<const Triangulation> tri, double epsilon,
                                 const AnalysisOptions& opts) {
  if (model.state_dim() != tri->dim()) throw ModeMismatchError("mesh/model dimension mismatch");
  if (!(epsilon > 0.0)) throw InvalidRegionError("epsilon must be positive");
  // The mesh hole must sit exactly on the epsilon sphere.
  double min_norm = std::numeric_limits<double>::infinity();
  for (const Vertex& v : tri->vertices()) min_norm = std::min(min_norm, v.coords.norm());
  if (std::abs(min_norm - epsilon) > 1e-9) {
    throw ModeMismatchError("mesh hole radius does not match epsilon");
  }

  const BoundSet bounds = bounds_for(model, *tri, epsilon);
  const DecisionLayout layout = DecisionLayout::make(*tri, /*hybrid=*/true);
  ConstraintSet set = side_constraints(layout, opts.assembly);
  set.psd.push_back(origin_lmi_block(model, epsilon, bounds, layout));
  append_gain_constraints(set, model, *tri, bounds, layout, /*exclude_origin_vertex=*/false);

  const int n = model.state_dim();
  return run_problem(set, layout, opts, [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd values(tri->num_vertices());
    for (int v = 0; v < tri->num_vertices(); ++v) values(v) = x(layout.v[static_cast<size_t>(v)]);
    Eigen::MatrixXd P(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c <= r; ++c) {
        P(r, c) = x(layout.p_var(r, c));
        P(c, r) = P(r, c);
      }
    }
    GainCertificate cert;
    cert.storage = HybridStorage{std::move(P), epsilon, CpaFunction(tri, std::move(values))};
    cert.mesh_stats = MeshStats{tri->num_simplexes(), tri->num_vertices()};
    return cert;
  });
}

std::vector<SweepRow> refinement_sweep(const SystemModel& model, const Box& box, int levels,
                                       GainMode mode, const SweepOptions& opts) {
  if (levels < 1) throw ConfigError("refinement sweep needs at least one level");
  double epsilon = 0.0;
  std::shared_ptr<const Triangulation> mesh;
  if (mode == GainMode::kHybrid) {
    epsilon = opts.epsilon.value_or(0.1 * box.inscribed_radius());
    mesh = std::make_shared<Triangulation>(
        build_annulus(box, opts.divisions, epsilon, opts.boundary_segments));
  } else {
    mesh = std::make_shared<Triangulation>(build_origin_fan_grid(box, opts.divisions));
  }

  std::vector<SweepRow> rows;
  for (int level = 0; level < levels; ++level) {
    if (level > 0) mesh = std::make_shared<Triangulation>(refine(*mesh));
    AnalysisResult result = mode == GainMode::kHybrid
                                ? bound_gain_hybrid(model, mesh, epsilon, opts.analysis)
                                : bound_gain_cpa(model, mesh, opts.analysis);
    SweepRow row;
    row.num_simplexes = mesh->num_simplexes();
    if (result.feasible()) {
      row.gamma_star = result.certificate->gamma_star;
      row.solve_seconds = result.certificate->solver_stats.wall_seconds;
    } else {
      row.gamma_star = std::numeric_limits<double>::infinity();
    }
    rows.push_back(row);
    if (opts.collect_results) opts.collect_results->push_back(std::move(result));
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, bool with_timings) {
  std::ostringstream os;
  os << "num_simplexes,gamma_star,solve_seconds\n";
  for (const SweepRow& row : rows) {
    os << row.num_simplexes << ",";
    if (std::isinf(row.gamma_star)) {
      os << "inf";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.9g", row.gamma_star);
      os << buf;
    }
    char tbuf[32];
    std::snprintf(tbuf, sizeof(tbuf), "%.3f", with_timings ? row.solve_seconds : 0.0);
    os << "," << tbuf << "\n";
  }
  return os.str();
}

std::string certificate_to_json(const GainCertificate& cert, const std::string& system_name,
                                const Box& region) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["system"] = system_name;
  j["mode"] = cert.is_hybrid() ? "hybrid" : "cpa";
  auto& reg = j["region"];
  for (int a = 0; a < region.dim(); ++a) {
    reg["lo"].push_back(region.lo(a));
    reg["hi"].push_back(region.hi(a));
  }
  j["gamma_star"] = cert.gamma_star;
  j["alpha_star"] = cert.alpha_star;
  if (cert.r_u) j["r_u"] = *cert.r_u;
  j["mesh_stats"] = {{"num_simplexes", cert.mesh_stats.num_simplexes},
                     {"num_vertices", cert.mesh_stats.num_vertices}};
  j["solver_stats"] = {{"status", cert.solver_stats.status},
                       {"iterations", cert.solver_stats.iterations}};
  const std::string storage_json = cert.is_hybrid()
                                       ? storage_to_json(std::get<HybridStorage>(cert.storage))
                                       : storage_to_json(std::get<CpaFunction>(cert.storage));
  j["storage"] = nlohmann::ordered_json::parse(storage_json);
  j["mesh"] = nlohmann::ordered_json::parse(cert.tri().to_json());
  if (cert.check_report) {
    const CheckReport& r = *cert.check_report;
    nlohmann::ordered_json cj;
    cj["max_violation"] = r.max_violation;
    cj["num_samples"] = r.num_samples;
    cj["num_skipped"] = r.num_skipped;
    auto& wp = cj["worst_point"] = nlohmann::ordered_json::array();
    for (int a = 0; a < r.worst_point.size(); ++a) wp.push_back(r.worst_point(a));
    cj["tol"] = r.tol;
    cj["passed"] = r.passed;
    j["check"] = std::move(cj);
  }
  return j.dump(2) + "\n";
}

LoadedCertificate certificate_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("version", 0) != 1) throw ConfigError("unsupported certificate version");
  LoadedCertificate out;
  out.system_name = j.at("system").get<std::string>();
  const auto& reg = j.at("region");
  const size_t dim = reg.at("lo").size();
  out.region.lo.resize(static_cast<long>(dim));
  out.region.hi.resize(static_cast<long>(dim));
  for (size_t a = 0; a < dim; ++a) {
    out.region.lo(static_cast<long>(a)) = reg.at("lo").at(a).get<double>();
    out.region.hi(static_cast<long>(a)) = reg.at("hi").at(a).get<double>();
  }

  auto tri = std::make_shared<Triangulation>(Triangulation::from_json(j.at("mesh").dump()));
  Eigen::VectorXd values(tri->num_vertices());
  const auto& vals = j.at("storage").at("values");
  for (int v = 0; v < tri->num_vertices(); ++v) {
    values(v) = vals.at(std::to_string(v)).get<double>();
  }

  GainCertificate cert;
  cert.gamma_star = j.at("gamma_star").get<double>();
  cert.alpha_star = j.at("alpha_star").get<double>();
  if (j.contains("r_u")) cert.r_u = j.at("r_u").get<double>();
  cert.mesh_stats = MeshStats{tri->num_simplexes(), tri->num_vertices()};
  cert.solver_stats.status = j.at("solver_stats").at("status").get<std::string>();
  cert.solver_stats.iterations = j.at("solver_stats").at("iterations").get<int>();
  if (j.at("mode").get<std::string>() == "hybrid") {
    const int n = tri->dim();
    Eigen::MatrixXd P(n, n);
    const auto& pj = j.at("storage").at("P");
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) P(r, c) = pj.at(static_cast<size_t>(r * n + c)).get<double>();
    }
    const double eps = j.at("storage").at("epsilon").get<double>();
    cert.storage = HybridStorage{std::move(P), eps, CpaFunction(tri, std::move(values))};
  } else {
    cert.storage = CpaFunction(tri, std::move(values));
  }
  out.certificate = std::move(cert);
  return out;
}

}  // namespace gaincert
