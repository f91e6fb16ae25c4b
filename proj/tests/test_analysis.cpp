#include <Eigen/Dense>
#include <memory>

#include "doctest.h"
#include "gaincert/check.hpp"

using namespace gaincert;

namespace {

Box box1(double lo, double hi) {
  Box b;
  b.lo = Eigen::VectorXd::Constant(1, lo);
  b.hi = Eigen::VectorXd::Constant(1, hi);
  return b;
}

Box box2(double lo, double hi) {
  Box b;
  b.lo = Eigen::Vector2d(lo, lo);
  b.hi = Eigen::Vector2d(hi, hi);
  return b;
}

}  // namespace

TEST_CASE("linear system, hybrid storage: gamma lands on the known bracket") {
  auto mesh = std::make_shared<Triangulation>(build_annulus(box1(-0.8, 0.8), 32, 0.1, 8));
  const AnalysisResult result = bound_gain_hybrid(linear_test(), mesh, 0.1, AnalysisOptions{});
  REQUIRE(result.feasible());
  const GainCertificate& cert = *result.certificate;
  CHECK(cert.gamma_star >= 1.0);
  CHECK(cert.gamma_star <= 1.3);
  CHECK(cert.gamma_star == doctest::Approx(std::sqrt(cert.alpha_star)).epsilon(1e-12));

  // Soundness hook: sampled HJI and the P floor.
  const CheckReport report = check_hji_samples(linear_test(), cert, 4000, 1e-6, 5);
  CHECK(report.passed);
  const HybridStorage& hs = std::get<HybridStorage>(cert.storage);
  CHECK(hs.P(0, 0) > 0.0);
}

TEST_CASE("CPA mode refuses systems with a constant input matrix") {
  auto mesh = std::make_shared<Triangulation>(build_kuhn_grid(box1(-0.8, 0.8), 4));
  CHECK_THROWS_AS(bound_gain_cpa(linear_test(), mesh, AnalysisOptions{}), ModeMismatchError);
}

TEST_CASE("hybrid mode checks the hole radius against epsilon") {
  auto mesh = std::make_shared<Triangulation>(build_annulus(box1(-0.8, 0.8), 16, 0.1, 8));
  CHECK_THROWS_AS(bound_gain_hybrid(linear_test(), mesh, 0.2, AnalysisOptions{}),
                  ModeMismatchError);
}

TEST_CASE("pendulum with state-affine input: CPA certificate end to end") {
  // Structured grids align first-ring edges with this system's rotational
  // flow around the origin, so CPA analyses run on the origin-fan variant.
  auto mesh = std::make_shared<Triangulation>(build_origin_fan_grid(box2(-0.8, 0.8), 16));
  const SystemModel sys = pendulum(PendulumInput::kX2Affine);
  const AnalysisResult result = bound_gain_cpa(sys, mesh, AnalysisOptions{});
  REQUIRE(result.feasible());
  const GainCertificate& cert = *result.certificate;
  CHECK(cert.gamma_star <= 1.35);
  CHECK(cert.gamma_star > 0.5);
  CHECK(cert.mesh_stats.num_simplexes == mesh->num_simplexes());

  // Storage is nonnegative at the vertices.
  const CpaFunction& cpa = std::get<CpaFunction>(cert.storage);
  CHECK(cpa.values().minCoeff() >= -1e-9);

  // Sampled HJI and the empirical sandwich.
  const CheckReport report = check_hji_samples(sys, cert, 4000, 1e-6, 7);
  CHECK(report.passed);
  const auto sims = empirical_gain_lower_bound(sys, random_band_limited_inputs(20, 0.05, 23),
                                               50.0, 1e-3, box2(-0.8, 0.8));
  for (const SimulationResult& sim : sims) {
    if (sim.state_stayed_in_region) CHECK(sim.l2_ratio <= cert.gamma_star);
  }

  // Corrupting a vertex value by +10% where the certificate is tight must be
  // caught by the sampled check on the adjacent simplexes.
  const Barycentric worst = mesh->locate(report.worst_point);
  const Simplex& tight = mesh->simplex(worst.simplex_id);
  int victim = tight.verts[0];
  for (int vid : tight.verts) {
    if (std::abs(cpa.values()(vid)) > std::abs(cpa.values()(victim))) victim = vid;
  }
  Eigen::VectorXd corrupted = cpa.values();
  corrupted(victim) *= 1.10;
  GainCertificate bad = cert;
  bad.storage = CpaFunction(mesh, corrupted);
  const CheckReport bad_report = check_hji_samples(sys, bad, 20000, 1e-6, 7);
  CHECK_FALSE(bad_report.passed);
}

TEST_CASE("refinement sweep is monotone and counts simplexes") {
  SweepOptions opts;
  opts.divisions = 16;
  opts.epsilon = 0.1;
  const auto rows = refinement_sweep(linear_test(), box1(-0.8, 0.8), 3, GainMode::kHybrid, opts);
  REQUIRE(rows.size() == 3);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].num_simplexes > rows[i - 1].num_simplexes);
    CHECK(rows[i].gamma_star <= rows[i - 1].gamma_star + 1e-6);
  }
  const std::string csv = sweep_to_csv(rows, false);
  CHECK(csv.rfind("num_simplexes,gamma_star,solve_seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("certificates serialize and reload") {
  auto mesh = std::make_shared<Triangulation>(build_annulus(box1(-0.8, 0.8), 32, 0.1, 8));
  const AnalysisResult result = bound_gain_hybrid(linear_test(), mesh, 0.1, AnalysisOptions{});
  REQUIRE(result.feasible());
  const std::string doc = certificate_to_json(*result.certificate, "linear1d", box1(-0.8, 0.8));
  const LoadedCertificate loaded = certificate_from_json(doc);
  CHECK(loaded.system_name == "linear1d");
  CHECK(loaded.certificate.gamma_star == result.certificate->gamma_star);
  CHECK(loaded.certificate.is_hybrid());
  const HybridStorage& hs = std::get<HybridStorage>(loaded.certificate.storage);
  const HybridStorage& orig = std::get<HybridStorage>(result.certificate->storage);
  CHECK((hs.P - orig.P).norm() == 0.0);
  CHECK(hs.epsilon == orig.epsilon);

  // Byte determinism: the same analysis twice gives the same document.
  auto mesh2 = std::make_shared<Triangulation>(build_annulus(box1(-0.8, 0.8), 32, 0.1, 8));
  const AnalysisResult again = bound_gain_hybrid(linear_test(), mesh2, 0.1, AnalysisOptions{});
  REQUIRE(again.feasible());
  CHECK(certificate_to_json(*again.certificate, "linear1d", box1(-0.8, 0.8)) == doc);
}

TEST_CASE("solved problems re-verify against their own constraint cones") {
  auto mesh = std::make_shared<Triangulation>(build_origin_fan_grid(box2(-0.8, 0.8), 8));
  const SystemModel sys = pendulum(PendulumInput::kX2Affine);
  const BoundSet bounds = bounds_for(sys, *mesh);
  const DecisionLayout layout = DecisionLayout::make(*mesh, false);
  ConstraintSet set = side_constraints(layout, AssemblyOptions{});
  for (int i = 0; i < mesh->num_simplexes(); ++i) {
    for (AffineExpr& e : gradient_bound_constraints(i, layout, *mesh)) {
      set.linear.push_back(std::move(e));
    }
    for (int j = 0; j <= 2; ++j) {
      if (mesh->simplex(i).contains_origin && j == 0) continue;
      set.psd.push_back(gain_lmi_block(sys, *mesh, bounds, i, j, layout));
    }
  }
  const ConicProgram prog = compile(set, layout);
  const SolveOptions opts;
  const SolverResult solved = solve(prog, opts);
  REQUIRE(solved.status == SolveStatus::kOptimal);
  // The feasibility gate is relative, like the solver's own tolerances.
  const double gate = 10.0 * opts.tol * std::max(1.0, solved.x.lpNorm<Eigen::Infinity>());
  CHECK(solved.recheck_violation <= gate);
  // Evaluating every original matrix at the solution stays within tolerance.
  for (const AffineMatrix& m : set.psd) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.eval(solved.x), Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().maxCoeff() <= gate);
  }
}
