#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gaincert/check.hpp"
#include "gaincert/config.hpp"

namespace py = pybind11;
using namespace gaincert;

namespace {

Box make_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size()) throw InvalidRegionError("lo/hi size mismatch");
  return Box{lo, hi};
}

SystemModel model_by_name(const std::string& name) {
  if (name == "pendulum_k1") return pendulum(PendulumInput::kConstantOne);
  if (name == "pendulum_kx2") return pendulum(PendulumInput::kX2Affine);
  if (name == "linear1d") return linear_test();
  throw ConfigError("unknown system '" + name + "'");
}

py::dict certificate_dict(const GainCertificate& cert) {
  py::dict out;
  out["gamma_star"] = cert.gamma_star;
  out["alpha_star"] = cert.alpha_star;
  out["num_simplexes"] = cert.mesh_stats.num_simplexes;
  out["num_vertices"] = cert.mesh_stats.num_vertices;
  out["solver_status"] = cert.solver_stats.status;
  out["solver_iterations"] = cert.solver_stats.iterations;
  out["hybrid"] = cert.is_hybrid();
  if (cert.is_hybrid()) {
    const HybridStorage& hs = std::get<HybridStorage>(cert.storage);
    out["P"] = hs.P;
    out["epsilon"] = hs.epsilon;
    out["values"] = hs.cpa.values();
  } else {
    out["values"] = std::get<CpaFunction>(cert.storage).values();
  }
  return out;
}

AnalysisOptions make_options(double solver_tol, int max_iters) {
  AnalysisOptions opts;
  opts.solver.tol = solver_tol;
  opts.solver.max_iters = max_iters;
  return opts;
}

}  // namespace

PYBIND11_MODULE(_gaincert, m) {
  m.doc() = "Certified L2-gain upper bounds via CPA storage functions";

  py::register_exception<Error>(m, "GaincertError");

  py::class_<Triangulation, std::shared_ptr<Triangulation>>(m, "Triangulation")
      .def_property_readonly("dim", &Triangulation::dim)
      .def_property_readonly("num_vertices", &Triangulation::num_vertices)
      .def_property_readonly("num_simplexes", &Triangulation::num_simplexes)
      .def("vertex_coords",
           [](const Triangulation& tri, int id) { return tri.vertex(id).coords; })
      .def("locate",
           [](const Triangulation& tri, const Eigen::VectorXd& x) {
             const Barycentric b = tri.locate(x);
             return py::make_tuple(b.simplex_id, b.lambdas);
           })
      .def("to_json", &Triangulation::to_json)
      .def_static("from_json", &Triangulation::from_json);

  m.def(
      "build_kuhn_grid",
      [](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int divisions) {
        return std::make_shared<Triangulation>(build_kuhn_grid(make_box(lo, hi), divisions));
      },
      py::arg("lo"), py::arg("hi"), py::arg("divisions"));
  m.def(
      "build_origin_fan_grid",
      [](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int divisions) {
        return std::make_shared<Triangulation>(
            build_origin_fan_grid(make_box(lo, hi), divisions));
      },
      py::arg("lo"), py::arg("hi"), py::arg("divisions"));
  m.def(
      "build_annulus",
      [](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int divisions, double epsilon,
         int boundary_segments) {
        return std::make_shared<Triangulation>(
            build_annulus(make_box(lo, hi), divisions, epsilon, boundary_segments));
      },
      py::arg("lo"), py::arg("hi"), py::arg("divisions"), py::arg("epsilon"),
      py::arg("boundary_segments") = 16);
  m.def("refine",
        [](const Triangulation& tri) { return std::make_shared<Triangulation>(refine(tri)); });
  m.def("validate_mesh", [](const Triangulation& tri) {
    const MeshValidation v = validate(tri);
    py::dict out;
    out["ok"] = v.ok();
    out["affine_independence_failures"] = v.affine_independence_failures;
    out["origin_ordering_violations"] = v.origin_ordering_violations;
    out["coverage_gaps"] = v.coverage_gaps;
    out["face_intersection_violations"] = v.face_intersection_violations;
    return out;
  });

  m.def("systems",
        [] { return std::vector<std::string>{"pendulum_k1", "pendulum_kx2", "linear1d"}; });

  m.def(
      "bound_gain_cpa",
      [](const std::string& system, std::shared_ptr<Triangulation> tri, double solver_tol,
         int max_iters) {
        const AnalysisResult r =
            bound_gain_cpa(model_by_name(system), tri, make_options(solver_tol, max_iters));
        py::dict out;
        out["status"] = to_string(r.status);
        if (r.feasible()) out["certificate"] = certificate_dict(*r.certificate);
        return out;
      },
      py::arg("system"), py::arg("tri"), py::arg("solver_tol") = 1e-8,
      py::arg("max_iters") = 200000);

  m.def(
      "bound_gain_hybrid",
      [](const std::string& system, std::shared_ptr<Triangulation> tri, double epsilon,
         double solver_tol, int max_iters) {
        const AnalysisResult r = bound_gain_hybrid(model_by_name(system), tri, epsilon,
                                                   make_options(solver_tol, max_iters));
        py::dict out;
        out["status"] = to_string(r.status);
        if (r.feasible()) out["certificate"] = certificate_dict(*r.certificate);
        return out;
      },
      py::arg("system"), py::arg("tri"), py::arg("epsilon"), py::arg("solver_tol") = 1e-8,
      py::arg("max_iters") = 200000);

  m.def(
      "refinement_sweep",
      [](const std::string& system, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
         int levels, const std::string& mode, int divisions, int boundary_segments,
         std::optional<double> epsilon) {
        SweepOptions opts;
        opts.divisions = divisions;
        opts.boundary_segments = boundary_segments;
        opts.epsilon = epsilon;
        const auto rows =
            refinement_sweep(model_by_name(system), make_box(lo, hi), levels,
                             mode == "hybrid" ? GainMode::kHybrid : GainMode::kCpa, opts);
        py::list out;
        for (const SweepRow& row : rows) {
          py::dict d;
          d["num_simplexes"] = row.num_simplexes;
          d["gamma_star"] = row.gamma_star;
          d["solve_seconds"] = row.solve_seconds;
          out.append(d);
        }
        return out;
      },
      py::arg("system"), py::arg("lo"), py::arg("hi"), py::arg("levels"), py::arg("mode") = "cpa",
      py::arg("divisions") = 8, py::arg("boundary_segments") = 16,
      py::arg("epsilon") = std::nullopt);

  m.def(
      "check_certificate_json",
      [](const std::string& document, int num_samples, double tol, std::uint64_t seed) {
        const LoadedCertificate loaded = certificate_from_json(document);
        const CheckReport report = check_hji_samples(model_by_name(loaded.system_name),
                                                     loaded.certificate, num_samples, tol, seed);
        py::dict out;
        out["max_violation"] = report.max_violation;
        out["num_samples"] = report.num_samples;
        out["num_skipped"] = report.num_skipped;
        out["passed"] = report.passed;
        return out;
      },
      py::arg("document"), py::arg("num_samples") = 10000, py::arg("tol") = 1e-6,
      py::arg("seed") = 1);

  m.def(
      "empirical_ratios",
      [](const std::string& system, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
         int num_inputs, double amplitude, double horizon, double dt, std::uint64_t seed) {
        const auto sims =
            empirical_gain_lower_bound(model_by_name(system),
                                       random_band_limited_inputs(num_inputs, amplitude, seed),
                                       horizon, dt, make_box(lo, hi));
        py::list out;
        for (const SimulationResult& sim : sims) {
          py::dict d;
          d["input"] = sim.input_description;
          d["l2_ratio"] = sim.l2_ratio;
          d["stayed_in_region"] = sim.state_stayed_in_region;
          out.append(d);
        }
        return out;
      },
      py::arg("system"), py::arg("lo"), py::arg("hi"), py::arg("num_inputs") = 10,
      py::arg("amplitude") = 0.05, py::arg("horizon") = 50.0, py::arg("dt") = 1e-3,
      py::arg("seed") = 1);
}
