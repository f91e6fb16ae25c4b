#include "gaincert/check.hpp"

#include <cmath>
#include <random>

namespace gaincert {

namespace {

// Nominal 3-block gain LMI at one point, with a constant gradient.
Eigen::MatrixXd hji_matrix(const SystemModel& model, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& grad_v, double alpha) {
  const int m = model.input_dim();
  const int p = model.output_dim();
  Eigen::MatrixXd lmi = Eigen::MatrixXd::Zero(1 + m + p, 1 + m + p);
  lmi(0, 0) = grad_v.dot(model.f(x));
  const Eigen::MatrixXd gin = model.input_matrix(x);
  for (int k = 0; k < m; ++k) {
    lmi(1 + k, 0) = gin.col(k).dot(grad_v);
    lmi(0, 1 + k) = lmi(1 + k, 0);
    lmi(1 + k, 1 + k) = -2.0 * alpha;
  }
  const Eigen::VectorXd hx = model.h(x);
  for (int a = 0; a < p; ++a) {
    lmi(1 + m + a, 0) = hx(a);
    lmi(0, 1 + m + a) = hx(a);
    lmi(1 + m + a, 1 + m + a) = -2.0;
  }
  return lmi;
}

double max_eig(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace

CheckReport check_hji_samples(const SystemModel& model, const GainCertificate& cert,
                              int num_samples, double tol, std::uint64_t seed) {
  CheckReport report;
  report.tol = tol;
  report.num_samples = num_samples;
  if (num_samples == 0) {
    report.max_violation = -std::numeric_limits<double>::infinity();
    report.passed = true;
    return report;
  }

  const Triangulation& tri = cert.tri();
  const Box& region = tri.bounding_box();
  const int n = tri.dim();
  const double alpha = cert.alpha_star;
  const HybridStorage* hybrid = std::get_if<HybridStorage>(&cert.storage);
  const CpaFunction& cpa = hybrid ? hybrid->cpa : std::get<CpaFunction>(cert.storage);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  report.max_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_samples; ++k) {
    Eigen::VectorXd x(n);
    for (int a = 0; a < n; ++a) x(a) = region.lo(a) + unif(rng) * (region.hi(a) - region.lo(a));

    Eigen::VectorXd grad;
    if (hybrid && x.norm() <= hybrid->epsilon) {
      grad = 2.0 * hybrid->P * x;
    } else {
      auto bary = tri.try_locate(x);
      if (!bary) {
        // Sliver between the hole polygon and the sphere, or numerical edge.
        ++report.num_skipped;
        continue;
      }
      if (bary->lambdas.minCoeff() < 1e-9) {
        ++report.num_skipped;  // grad V is set-valued on simplex boundaries
        continue;
      }
      grad = cpa.gradient(bary->simplex_id).grad;
    }

    const double top = max_eig(hji_matrix(model, x, grad, alpha));
    if (top > report.max_violation) {
      report.max_violation = top;
      report.worst_point = x;
    }
  }
  report.passed = report.max_violation <= tol;
  return report;
}

namespace {

double shape_constant_cols(const Eigen::MatrixXd& verts, int j) {
  const int n = static_cast<int>(verts.rows());
  double dmax2 = 0.0;
  for (int v = 0; v < verts.cols(); ++v) {
    dmax2 = std::max(dmax2, (verts.col(j) - verts.col(v)).squaredNorm());
  }
  return n * dmax2;
}

Eigen::MatrixXd small_m(const TestFunction& phi, const std::vector<TestFunction>& zeta,
                        const Eigen::VectorXd& x) {
  const int m = static_cast<int>(zeta.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(1 + m, 1 + m);
  out(0, 0) = phi.eval(x);
  for (int k = 0; k < m; ++k) {
    out(1 + k, 0) = zeta[static_cast<size_t>(k)].eval(x);
    out(0, 1 + k) = out(1 + k, 0);
    out(1 + k, 1 + k) = -1.0;
  }
  return out;
}

Eigen::VectorXd dirichlet_draw(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(1e-12, 1.0);
  Eigen::VectorXd lam(count);
  for (int j = 0; j < count; ++j) lam(j) = -std::log(unif(rng));
  return lam / lam.sum();
}

}  // namespace

double oracle_simplex_bound(const TestFunction& phi, const std::vector<TestFunction>& zeta,
                            const Eigen::MatrixXd& verts, int num_draws, std::uint64_t seed) {
  const int nv = static_cast<int>(verts.cols());
  const int m = static_cast<int>(zeta.size());
  Eigen::VectorXd mus(m);
  for (int k = 0; k < m; ++k) mus(k) = zeta[static_cast<size_t>(k)].hessian_bound;

  std::vector<Eigen::MatrixXd> m_at_vertex, e_at_vertex;
  for (int j = 0; j < nv; ++j) {
    m_at_vertex.push_back(small_m(phi, zeta, verts.col(j)));
    e_at_vertex.push_back(
        error_bound_matrix(phi.hessian_bound, mus, shape_constant_cols(verts, j)).dense());
  }

  std::mt19937_64 rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int draw = 0; draw < num_draws; ++draw) {
    const Eigen::VectorXd lam = dirichlet_draw(nv, rng);
    const Eigen::VectorXd x = verts * lam;
    Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(1 + m, 1 + m);
    Eigen::MatrixXd e_x = Eigen::MatrixXd::Zero(1 + m, 1 + m);
    for (int j = 0; j < nv; ++j) {
      combo += lam(j) * m_at_vertex[static_cast<size_t>(j)];
      e_x += lam(j) * e_at_vertex[static_cast<size_t>(j)];
    }
    const Eigen::MatrixXd d = e_x - (small_m(phi, zeta, x) - combo);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d, Eigen::EigenvaluesOnly);
    worst = std::min(worst, eig.eigenvalues().minCoeff());
  }
  return worst;
}

double oracle_simplex_vertex_implication(const TestFunction& phi,
                                         const std::vector<TestFunction>& zeta,
                                         const Eigen::MatrixXd& verts, int num_draws,
                                         std::uint64_t seed) {
  const int nv = static_cast<int>(verts.cols());
  const int m = static_cast<int>(zeta.size());
  Eigen::VectorXd mus(m);
  for (int k = 0; k < m; ++k) mus(k) = zeta[static_cast<size_t>(k)].hessian_bound;

  // Shift phi so that M(x_j) + E(x_j) <= 0 at every vertex. With the -1/2 I
  // corner the exact requirement is phi + e_scalar + 2 zeta'zeta <= 0.
  double shift = 0.0;
  for (int j = 0; j < nv; ++j) {
    const Eigen::VectorXd xj = verts.col(j);
    const double e_scalar =
        error_bound_matrix(phi.hessian_bound, mus, shape_constant_cols(verts, j)).scalar;
    double z2 = 0.0;
    for (const TestFunction& zk : zeta) {
      const double v = zk.eval(xj);
      z2 += v * v;
    }
    shift = std::max(shift, phi.eval(xj) + e_scalar + 2.0 * z2);
  }
  shift += 1e-12;

  std::mt19937_64 rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (int draw = 0; draw < num_draws; ++draw) {
    const Eigen::VectorXd lam = dirichlet_draw(nv, rng);
    const Eigen::VectorXd x = verts * lam;
    Eigen::MatrixXd mx = small_m(phi, zeta, x);
    mx(0, 0) -= shift;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mx, Eigen::EigenvaluesOnly);
    worst = std::max(worst, eig.eigenvalues().maxCoeff());
  }
  return worst;
}

Eigen::MatrixXd origin_ball_matrix(const Eigen::MatrixXd& j_theta, const Eigen::MatrixXd& j_zeta,
                                   double beta_eps, double mu_eps, double epsilon) {
  const int n = static_cast<int>(j_theta.rows());
  const int m = static_cast<int>(j_zeta.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + m, n + m);
  const double pad = epsilon * std::pow(n, 1.5) * beta_eps +
                     epsilon * epsilon * n * n * m * mu_eps * mu_eps;
  out.topLeftCorner(n, n) =
      0.5 * (j_theta.transpose() + j_theta + pad * Eigen::MatrixXd::Identity(n, n));
  out.topRightCorner(n, m) = j_zeta.transpose();
  out.bottomLeftCorner(m, n) = j_zeta;
  out.bottomRightCorner(m, m) = -0.5 * Eigen::MatrixXd::Identity(m, m);
  return out;
}

std::optional<double> oracle_origin_bound(const VectorField& theta, const VectorField& zeta,
                                          double epsilon, int num_draws, std::uint64_t seed) {
  const Eigen::MatrixXd m_eps = origin_ball_matrix(theta.jacobian0, zeta.jacobian0,
                                                   theta.hessian_bound, zeta.hessian_bound,
                                                   epsilon);
  if (max_eig(m_eps) > 1e-10) return std::nullopt;  // precondition unmet

  const int n = static_cast<int>(theta.jacobian0.rows());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int draw = 0; draw < num_draws; ++draw) {
    Eigen::VectorXd dir(n);
    for (int a = 0; a < n; ++a) dir(a) = gauss(rng);
    if (dir.norm() == 0.0) continue;
    dir.normalize();
    const double radius = epsilon * std::pow(unif(rng), 1.0 / n);
    const Eigen::VectorXd x = radius * dir;
    const Eigen::VectorXd zx = zeta.eval(x);
    const double residual = zx.squaredNorm() + x.dot(theta.eval(x));
    worst = std::max(worst, residual);
  }
  return worst;
}

namespace {

Eigen::VectorXd eval_signal(const InputSignal& sig, int m, double t,
                            const std::vector<Eigen::Vector3d>& modes) {
  double v = 0.0;
  switch (sig.kind) {
    case InputSignal::Kind::kZero: v = 0.0; break;
    case InputSignal::Kind::kStep: v = sig.amplitude; break;
    case InputSignal::Kind::kSine: v = sig.amplitude * std::sin(2.0 * M_PI * sig.frequency * t); break;
    case InputSignal::Kind::kBandLimitedRandom: {
      double sum = 0.0, weight = 0.0;
      for (const Eigen::Vector3d& mode : modes) {
        sum += mode(0) * std::sin(mode(1) * t + mode(2));
        weight += std::abs(mode(0));
      }
      v = weight > 0.0 ? sig.amplitude * sum / weight : 0.0;
      break;
    }
  }
  return Eigen::VectorXd::Constant(m, v);
}

std::string describe(const InputSignal& sig) {
  switch (sig.kind) {
    case InputSignal::Kind::kZero: return "zero";
    case InputSignal::Kind::kStep: return "step(" + std::to_string(sig.amplitude) + ")";
    case InputSignal::Kind::kSine:
      return "sine(a=" + std::to_string(sig.amplitude) + ",f=" + std::to_string(sig.frequency) + ")";
    case InputSignal::Kind::kBandLimitedRandom:
      return "bandlimited(seed=" + std::to_string(sig.seed) + ")";
  }
  return "?";
}

}  // namespace

std::vector<InputSignal> random_band_limited_inputs(int count, double amplitude,
                                                    std::uint64_t seed) {
  std::vector<InputSignal> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    InputSignal sig;
    sig.kind = InputSignal::Kind::kBandLimitedRandom;
    sig.amplitude = amplitude;
    sig.seed = seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL;
    out.push_back(sig);
  }
  return out;
}

std::vector<SimulationResult> empirical_gain_lower_bound(const SystemModel& model,
                                                         const std::vector<InputSignal>& inputs,
                                                         double horizon, double dt,
                                                         const Box& region) {
  if (!(dt > 0.0)) throw ConfigError("simulation dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
  const int n = model.state_dim();
  const int m = model.input_dim();
  const int steps = static_cast<int>(std::ceil(horizon / dt));

  std::vector<SimulationResult> results;
  results.reserve(inputs.size());
  for (const InputSignal& sig : inputs) {
    // Frozen sinusoid bank for band-limited signals.
    std::vector<Eigen::Vector3d> modes;
    if (sig.kind == InputSignal::Kind::kBandLimitedRandom) {
      std::mt19937_64 rng(sig.seed);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int k = 0; k < 8; ++k) {
        const double amp = 0.2 + 0.8 * unif(rng);
        const double omega = 2.0 * M_PI * (0.05 + 1.95 * unif(rng));
        const double phase = 2.0 * M_PI * unif(rng);
        modes.emplace_back(amp, omega, phase);
      }
    }

    auto rhs = [&](const Eigen::VectorXd& x, double t) {
      return (model.f(x) + model.input_matrix(x) * eval_signal(sig, m, t, modes)).eval();
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    double u2 = 0.0, y2 = 0.0;  // trapezoid accumulators of squared norms
    double u2_prev = eval_signal(sig, m, 0.0, modes).squaredNorm();
    double y2_prev = model.h(x).squaredNorm();
    bool stayed = true;

    SimulationResult res;
    res.input_description = describe(sig);
    res.horizon = horizon;
    for (int k = 0; k < steps; ++k) {
      const double t = k * dt;
      const Eigen::VectorXd k1 = rhs(x, t);
      const Eigen::VectorXd k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt);
      const Eigen::VectorXd k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt);
      const Eigen::VectorXd k4 = rhs(x + dt * k3, t + dt);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

      const double u2_now = eval_signal(sig, m, t + dt, modes).squaredNorm();
      const double y2_now = model.h(x).squaredNorm();
      u2 += 0.5 * dt * (u2_prev + u2_now);
      y2 += 0.5 * dt * (y2_prev + y2_now);
      u2_prev = u2_now;
      y2_prev = y2_now;

      if (!region.contains(x)) {
        stayed = false;
        break;
      }
    }

    res.state_stayed_in_region = stayed;
    res.l2_ratio = u2 > 0.0 ? std::sqrt(y2 / u2) : 0.0;
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace gaincert
