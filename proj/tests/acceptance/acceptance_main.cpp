// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Heavy sweeps run at the sizes the criteria name, so the
// full run takes several minutes.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gaincert/check.hpp"
#include "gaincert/conic.hpp"

using namespace gaincert;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void start() { g_t0 = std::chrono::steady_clock::now(); }

void report(int criterion, bool passed, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
  std::printf("%s criterion %d: %s (%.1fs)\n", passed ? "PASS" : "FAIL", criterion,
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!passed) ++g_failures;
}

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

// ---- randomized C^2 families shared by the two oracle criteria ----------

Eigen::MatrixXd random_simplex(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd verts(n, n + 1);
  while (true) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c <= n; ++c) verts(r, c) = gauss(rng);
    }
    Eigen::MatrixXd edges(n, n);
    for (int j = 1; j <= n; ++j) edges.col(j - 1) = verts.col(j) - verts.col(0);
    if (std::abs(edges.determinant()) > 0.05) return verts;
  }
}

TestFunction random_function(int n, const Eigen::MatrixXd& verts, std::mt19937_64& rng,
                             int which) {
  std::normal_distribution<double> gauss;
  TestFunction fn;
  switch (which % 3) {
    case 0: {  // quadratic
      Eigen::MatrixXd q(n, n);
      Eigen::VectorXd b(n);
      for (int r = 0; r < n; ++r) {
        b(r) = gauss(rng);
        for (int c = 0; c < n; ++c) q(r, c) = gauss(rng);
      }
      q = ((q + q.transpose()) / 2).eval();
      fn.eval = [q, b](const Eigen::VectorXd& x) { return x.dot(q * x) + b.dot(x); };
      fn.hessian = [q](const Eigen::VectorXd&) { return (2.0 * q).eval(); };
      fn.hessian_bound = 2.0 * q.cwiseAbs().maxCoeff();
      break;
    }
    case 1: {  // separable cubic: second partials affine, extreme at vertices
      Eigen::VectorXd c(n);
      for (int r = 0; r < n; ++r) c(r) = gauss(rng);
      fn.eval = [c](const Eigen::VectorXd& x) {
        double v = 0.0;
        for (int a = 0; a < x.size(); ++a) v += c(a) * x(a) * x(a) * x(a);
        return v;
      };
      fn.hessian = [c, n](const Eigen::VectorXd& x) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (int a = 0; a < n; ++a) h(a, a) = 6.0 * c(a) * x(a);
        return h;
      };
      double bound = 0.0;
      for (int a = 0; a < n; ++a) {
        for (int j = 0; j <= n; ++j) bound = std::max(bound, std::abs(6.0 * c(a) * verts(a, j)));
      }
      fn.hessian_bound = bound;
      break;
    }
    default: {  // sinusoid
      Eigen::VectorXd k(n);
      for (int a = 0; a < n; ++a) k(a) = gauss(rng);
      const double amp = gauss(rng);
      const double phase = gauss(rng);
      fn.eval = [amp, k, phase](const Eigen::VectorXd& x) {
        return amp * std::sin(k.dot(x) + phase);
      };
      fn.hessian = [amp, k, phase](const Eigen::VectorXd& x) {
        return (-amp * std::sin(k.dot(x) + phase) * (k * k.transpose())).eval();
      };
      fn.hessian_bound = std::abs(amp) * (k * k.transpose()).cwiseAbs().maxCoeff();
      break;
    }
  }
  return fn;
}

// ---- criteria ------------------------------------------------------------

void criterion_1() {
  start();
  std::mt19937_64 rng(1001);
  int families = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_impl = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + (trial % 2);
    const Eigen::MatrixXd verts = random_simplex(n, rng);
    const TestFunction phi = random_function(n, verts, rng, trial);
    std::vector<TestFunction> zeta;
    const int m = 1 + (trial % 2);
    for (int k = 0; k < m; ++k) zeta.push_back(random_function(n, verts, rng, trial + 1 + k));
    worst_slack = std::min(
        worst_slack,
        oracle_simplex_bound(phi, zeta, verts, 1000, 5000 + static_cast<std::uint64_t>(trial)));
    worst_impl = std::max(worst_impl,
                          oracle_simplex_vertex_implication(
                              phi, zeta, verts, 1000, 6000 + static_cast<std::uint64_t>(trial)));
    ++families;
  }
  std::ostringstream os;
  os << "simplex error-bound oracle, " << families << " families, min slack " << worst_slack
     << ", max vertex-implication eig " << worst_impl;
  report(1, families >= 20 && worst_slack >= -1e-9 && worst_impl <= 1e-9, os.str());
}

void criterion_2() {
  start();
  std::mt19937_64 rng(2002);
  std::normal_distribution<double> gauss;
  int tested = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 60 && tested < 20; ++trial) {
    const int n = 2;
    const int m = 1 + (trial % 2);
    const double eps = 0.05 + 0.05 * (trial % 4);
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(n, n) * (2.0 + std::abs(gauss(rng)));
    a(0, 1) += 0.4 * gauss(rng);
    Eigen::MatrixXd qt(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) qt(r, c) = 0.3 * gauss(rng);
    }
    qt = ((qt + qt.transpose()) / 2).eval();
    VectorField theta;
    theta.jacobian0 = a;
    theta.eval = [a, qt](const Eigen::VectorXd& x) {
      Eigen::VectorXd out = a * x;
      out(0) += x.dot(qt * x);
      return out;
    };
    theta.hessian_bound = 2.0 * qt.cwiseAbs().maxCoeff();

    Eigen::MatrixXd c(m, n), qz(n, n);
    for (int r = 0; r < m; ++r) {
      for (int cc = 0; cc < n; ++cc) c(r, cc) = 0.25 * gauss(rng);
    }
    for (int r = 0; r < n; ++r) {
      for (int cc = 0; cc < n; ++cc) qz(r, cc) = 0.15 * gauss(rng);
    }
    qz = ((qz + qz.transpose()) / 2).eval();
    VectorField zeta;
    zeta.jacobian0 = c;
    zeta.eval = [c, qz](const Eigen::VectorXd& x) {
      Eigen::VectorXd out = c * x;
      out(0) += x.dot(qz * x);
      return out;
    };
    zeta.hessian_bound = 2.0 * qz.cwiseAbs().maxCoeff();

    const auto residual =
        oracle_origin_bound(theta, zeta, eps, 1000, 7000 + static_cast<std::uint64_t>(trial));
    if (!residual) continue;
    worst = std::max(worst, *residual);
    ++tested;
  }
  std::ostringstream os;
  os << "origin-ball oracle, " << tested << " feasible pairs, max residual " << worst;
  report(2, tested >= 20 && worst <= 1e-9, os.str());
}

void criterion_3() {
  start();
  auto tri = std::make_shared<Triangulation>(refine(build_kuhn_grid(box2(-0.8, 0.8), 4)));
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd values(tri->num_vertices());
  for (int v = 0; v < values.size(); ++v) values(v) = unif(rng);
  const CpaFunction cpa(tri, values);

  double vertex_err = 0.0;
  for (int v = 0; v < tri->num_vertices(); ++v) {
    vertex_err = std::max(vertex_err, std::abs(cpa.evaluate(tri->vertex(v).coords) - values(v)));
  }

  double affine_err = 0.0, twopath_err = 0.0;
  std::uniform_int_distribution<int> pick(0, tri->num_simplexes() - 1);
  std::uniform_real_distribution<double> u01(1e-12, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const int i = pick(rng);
    Eigen::Vector3d lam(-std::log(u01(rng)), -std::log(u01(rng)), -std::log(u01(rng)));
    lam /= lam.sum();
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    double expect = 0.0;
    for (int j = 0; j <= 2; ++j) {
      x += lam(j) * tri->corner(i, j);
      expect += lam(j) * values(tri->simplex(i).verts[static_cast<size_t>(j)]);
    }
    const double direct = cpa.evaluate(x);
    affine_err = std::max(affine_err, std::abs(direct - expect));
    // Second path: affine form from the located simplex's cached gradient.
    const Barycentric b = tri->locate(x);
    const Simplex& s = tri->simplex(b.simplex_id);
    const double via_grad =
        values(s.verts[0]) + cpa.gradient(b.simplex_id).grad.dot(x - tri->corner(b.simplex_id, 0));
    twopath_err = std::max(twopath_err, std::abs(direct - via_grad));
  }
  std::ostringstream os;
  os << "CPA interpolation: vertex err " << vertex_err << ", affine err " << affine_err
     << ", two-path err " << twopath_err;
  report(3, vertex_err <= 1e-12 && affine_err <= 1e-10 && twopath_err <= 1e-10, os.str());
}

AnalysisResult g_linear_result;

void criterion_4() {
  start();
  auto mesh = std::make_shared<Triangulation>(build_annulus(box1(-0.8, 0.8), 32, 0.1, 8));
  g_linear_result = bound_gain_hybrid(linear_test(), mesh, 0.1, AnalysisOptions{});
  if (!g_linear_result.feasible()) {
    report(4, false, "linear hybrid analysis infeasible");
    return;
  }
  const double gamma = g_linear_result.certificate->gamma_star;
  const auto sims = empirical_gain_lower_bound(
      linear_test(), random_band_limited_inputs(50, 0.05, 404), 50.0, 1e-3, box1(-0.8, 0.8));
  double worst_ratio = 0.0;
  for (const auto& sim : sims) {
    if (sim.state_stayed_in_region) worst_ratio = std::max(worst_ratio, sim.l2_ratio);
  }
  std::ostringstream os;
  os << "linear oracle system (64 segments): gamma* = " << gamma << " in [1.0, 1.3], sandwich "
     << worst_ratio << " <= gamma*";
  report(4, gamma >= 1.0 && gamma <= 1.3 && worst_ratio <= gamma, os.str());
}

std::vector<SweepRow> g_cpa_rows;
std::vector<AnalysisResult> g_cpa_results;
std::vector<SweepRow> g_hybrid_rows;
std::vector<AnalysisResult> g_hybrid_results;

void criterion_5() {
  start();
  SweepOptions opts;
  opts.divisions = 16;
  opts.collect_results = &g_cpa_results;
  g_cpa_rows =
      refinement_sweep(pendulum(PendulumInput::kX2Affine), box2(-0.8, 0.8), 3, GainMode::kCpa, opts);
  bool ok = g_cpa_rows.size() == 3;
  std::ostringstream os;
  os << "pendulum (k = x2) CPA sweep:";
  bool has_fine = false;
  for (size_t i = 0; i < g_cpa_rows.size(); ++i) {
    const SweepRow& row = g_cpa_rows[i];
    os << " " << row.num_simplexes << "->" << row.gamma_star;
    if (i == 0) ok = ok && row.gamma_star <= 1.35;
    if (i > 0) ok = ok && row.gamma_star <= g_cpa_rows[i - 1].gamma_star + 1e-6;
    if (row.num_simplexes >= 4000) {
      has_fine = true;
      ok = ok && row.gamma_star <= 1.0;
    }
  }
  ok = ok && has_fine;
  report(5, ok, os.str());
}

void criterion_6() {
  start();
  SweepOptions opts;
  opts.divisions = 4;
  opts.boundary_segments = 16;
  opts.epsilon = 0.1;
  opts.collect_results = &g_hybrid_results;
  g_hybrid_rows = refinement_sweep(pendulum(PendulumInput::kConstantOne), box2(-0.8, 0.8), 4,
                                   GainMode::kHybrid, opts);
  bool ok = g_hybrid_rows.size() == 4;
  std::ostringstream os;
  os << "pendulum (k = 1) hybrid sweep:";
  for (size_t i = 0; i < g_hybrid_rows.size(); ++i) {
    const SweepRow& row = g_hybrid_rows[i];
    os << " " << row.num_simplexes << "->" << row.gamma_star;
    ok = ok && std::isfinite(row.gamma_star);  // feasible at every level
    if (i > 0) ok = ok && row.gamma_star <= g_hybrid_rows[i - 1].gamma_star + 1e-6;
  }
  if (!g_hybrid_rows.empty()) {
    const SweepRow& finest = g_hybrid_rows.back();
    ok = ok && finest.num_simplexes >= 6000 && finest.gamma_star >= 1.0 &&
         finest.gamma_star <= 3.2;
  }
  report(6, ok, os.str());
}

void criterion_7() {
  start();
  bool ok = true;
  std::ostringstream os;
  os << "soundness:";
  int count = 0;

  auto check_cert = [&](const SystemModel& sys, const GainCertificate& cert, const Box& region,
                        const char* label) {
    const CheckReport rep =
        check_hji_samples(sys, cert, 10000, 1e-6, 7000 + static_cast<std::uint64_t>(count));
    const auto sims = empirical_gain_lower_bound(
        sys, random_band_limited_inputs(100, 0.05, 9000 + static_cast<std::uint64_t>(count)),
        50.0, 1e-3, region);
    double worst_ratio = 0.0;
    int in_region = 0;
    for (const auto& sim : sims) {
      if (!sim.state_stayed_in_region) continue;
      ++in_region;
      worst_ratio = std::max(worst_ratio, sim.l2_ratio);
    }
    const bool cert_ok = rep.passed && worst_ratio <= cert.gamma_star && in_region > 0;
    os << " [" << label << " hji " << rep.max_violation << " ratio " << worst_ratio << "/"
       << cert.gamma_star << (cert_ok ? " ok]" : " BAD]");
    ok = ok && cert_ok;
    ++count;
  };

  if (g_linear_result.feasible()) {
    check_cert(linear_test(), *g_linear_result.certificate, box1(-0.8, 0.8), "linear");
  } else {
    ok = false;
  }
  const SystemModel kx2 = pendulum(PendulumInput::kX2Affine);
  for (const AnalysisResult& r : g_cpa_results) {
    if (r.feasible()) check_cert(kx2, *r.certificate, box2(-0.8, 0.8), "cpa");
  }
  const SystemModel k1 = pendulum(PendulumInput::kConstantOne);
  for (const AnalysisResult& r : g_hybrid_results) {
    if (r.feasible()) check_cert(k1, *r.certificate, box2(-0.8, 0.8), "hybrid");
  }
  ok = ok && count >= 3;
  report(7, ok, os.str());
}

void criterion_8() {
  start();
  bool ok = !g_cpa_rows.empty();
  double worst = 0.0;
  for (const SweepRow& row : g_cpa_rows) {
    worst = std::max(worst, row.gamma_star);
    ok = ok && row.gamma_star < 3.85;
  }
  std::ostringstream os;
  os << "every sweep level beats the prior nonconvex bound: max gamma* " << worst << " < 3.85";
  report(8, ok, os.str());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_9(const std::string& cli) {
  start();
  if (cli.empty()) {
    report(9, false, "no --cli binary given");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "gaincert_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const fs::path analyze_cfg = dir / "analyze.cfg";
  {
    std::ofstream cfg(analyze_cfg);
    cfg << "system = linear1d\nregion = -0.8 0.8\nmode = hybrid\nepsilon = 0.1\n"
           "divisions = 32\nseed = 3\n";
  }
  const fs::path sweep_cfg = dir / "sweep.cfg";
  {
    std::ofstream cfg(sweep_cfg);
    cfg << "system = pendulum_kx2\nregion = -0.8 0.8 -0.8 0.8\nmode = cpa\n"
           "divisions = 16\nlevels = 2\nseed = 3\n";
  }

  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  bool ok = true;
  ok = ok && run("analyze --config " + analyze_cfg.string() + " --out " + (dir / "a1").string()) == 0;
  ok = ok && run("analyze --config " + analyze_cfg.string() + " --out " + (dir / "a2").string()) == 0;
  ok = ok && run("sweep --config " + sweep_cfg.string() + " --out " + (dir / "s1").string()) == 0;
  ok = ok && run("sweep --config " + sweep_cfg.string() + " --out " + (dir / "s2").string()) == 0;

  const std::string cert1 = read_file(dir / "a1" / "certificate.json");
  const std::string cert2 = read_file(dir / "a2" / "certificate.json");
  const std::string csv1 = read_file(dir / "s1" / "sweep.csv");
  const std::string csv2 = read_file(dir / "s2" / "sweep.csv");
  const bool certs_equal = !cert1.empty() && cert1 == cert2;
  const bool csv_equal = !csv1.empty() && csv1 == csv2;
  std::ostringstream os;
  os << "byte-identical outputs across reruns: certificate.json "
     << (certs_equal ? "equal" : "DIFFER") << ", sweep.csv " << (csv_equal ? "equal" : "DIFFER");
  report(9, ok && certs_equal && csv_equal, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
  }

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9(cli);

  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures;
}
