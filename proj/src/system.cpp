#include "gaincert/system.hpp"

#include <cmath>

namespace gaincert {

namespace {

constexpr double kOriginTol = 1e-12;
constexpr double kJacStep = 1e-6;
constexpr double kJacRelTol = 1e-6;

void check_jacobian(const std::string& which, const Eigen::MatrixXd& claimed,
                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn, int n) {
  Eigen::MatrixXd fd(claimed.rows(), n);
  for (int a = 0; a < n; ++a) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(a) = kJacStep;
    fd.col(a) = (fn(e) - fn(-e)) / (2.0 * kJacStep);
  }
  const double scale = std::max(1.0, claimed.norm());
  if ((fd - claimed).norm() > kJacRelTol * scale) {
    throw InvalidModelError("Jacobian of " + which +
                            " at 0 disagrees with finite differences");
  }
}

}  // namespace

SystemModel::SystemModel(std::string name, int n, int m, int p, VecFn f, Eigen::MatrixXd B,
                         MatFn g, VecFn h, Eigen::MatrixXd jac_f0,
                         std::vector<Eigen::MatrixXd> jac_g0, Eigen::MatrixXd jac_h0,
                         BoxBound beta_oracle, IndexedBoxBound rho_oracle,
                         IndexedBoxBound mu_oracle)
    : name_(std::move(name)), n_(n), m_(m), p_(p), f_(std::move(f)), B_(std::move(B)),
      g_(std::move(g)), h_(std::move(h)), jac_f0_(std::move(jac_f0)),
      jac_g0_(std::move(jac_g0)), jac_h0_(std::move(jac_h0)), beta_(std::move(beta_oracle)),
      rho_(std::move(rho_oracle)), mu_(std::move(mu_oracle)) {
  if (n_ < 1 || m_ < 1 || p_ < 1) throw InvalidModelError("dimensions must be positive");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
  if (f_(zero).norm() > kOriginTol) throw InvalidModelError("f(0) != 0");
  if (g_(zero).norm() > kOriginTol) throw InvalidModelError("g(0) != 0");
  if (h_(zero).norm() > kOriginTol) throw InvalidModelError("h(0) != 0");
  if (B_.rows() != n_ || B_.cols() != m_) throw InvalidModelError("B has wrong shape");
  if (jac_f0_.rows() != n_ || jac_f0_.cols() != n_) throw InvalidModelError("jac_f0 shape");
  if (jac_h0_.rows() != p_ || jac_h0_.cols() != n_) throw InvalidModelError("jac_h0 shape");
  if (static_cast<int>(jac_g0_.size()) != m_) throw InvalidModelError("jac_g0 count");

  check_jacobian("f", jac_f0_, f_, n_);
  check_jacobian("h", jac_h0_, h_, n_);
  for (int k = 0; k < m_; ++k) {
    if (jac_g0_[static_cast<size_t>(k)].rows() != n_ || jac_g0_[static_cast<size_t>(k)].cols() != n_) {
      throw InvalidModelError("jac_g0 shape for column " + std::to_string(k));
    }
    auto col = [this, k](const Eigen::VectorXd& x) { return Eigen::VectorXd(g_(x).col(k)); };
    check_jacobian("g column " + std::to_string(k), jac_g0_[static_cast<size_t>(k)], col, n_);
  }
}

double SystemModel::beta_bound(const Box& box) const {
  const double v = beta_(box);
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidOracleError("beta oracle returned " + std::to_string(v));
  return v;
}

double SystemModel::rho_bound(const Box& box, int a) const {
  const double v = rho_(box, a);
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidOracleError("rho oracle returned " + std::to_string(v));
  return v;
}

double SystemModel::mu_bound(const Box& box, int k) const {
  const double v = mu_(box, k);
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidOracleError("mu oracle returned " + std::to_string(v));
  return v;
}

double interval_abs_sin_max(double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  // |sin| attains 1 whenever the interval covers pi/2 + k*pi.
  const double pi = M_PI;
  const double k_lo = std::ceil((lo - pi / 2.0) / pi);
  const double k_hi = std::floor((hi - pi / 2.0) / pi);
  if (k_lo <= k_hi) return 1.0;
  return std::max(std::abs(std::sin(lo)), std::abs(std::sin(hi)));
}

SystemModel pendulum(PendulumInput k_mode) {
  const int n = 2, m = 1, p = 1;
  auto f = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2);
    out << x(1), -std::sin(x(0)) - x(1);
    return out;
  };
  auto h = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(1);
    out << x(1);
    return out;
  };
  Eigen::MatrixXd jac_f0(2, 2);
  jac_f0 << 0, 1, -1, -1;
  Eigen::MatrixXd jac_h0(1, 2);
  jac_h0 << 0, 1;
  // The only nonzero second partial of f is d^2 f2 / dx1^2 = sin x1.
  auto beta = [](const Box& box) { return interval_abs_sin_max(box.lo(0), box.hi(0)); };
  auto zero_bound = [](const Box&, int) { return 0.0; };

  if (k_mode == PendulumInput::kConstantOne) {
    Eigen::MatrixXd B(2, 1);
    B << 0, 1;
    auto g = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(2, 1).eval(); };
    std::vector<Eigen::MatrixXd> jac_g0{Eigen::MatrixXd::Zero(2, 2)};
    return SystemModel("pendulum_k1", n, m, p, f, B, g, h, jac_f0, jac_g0, jac_h0, beta,
                       zero_bound, zero_bound);
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 1);
  auto g = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2, 1);
    out(1, 0) = x(1);
    return out;
  };
  Eigen::MatrixXd jg(2, 2);
  jg << 0, 0, 0, 1;
  std::vector<Eigen::MatrixXd> jac_g0{jg};
  return SystemModel("pendulum_kx2", n, m, p, f, B, g, h, jac_f0, jac_g0, jac_h0, beta,
                     zero_bound, zero_bound);
}

SystemModel linear_test() {
  auto f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  auto h = [](const Eigen::VectorXd& x) { return x; };
  auto g = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1).eval(); };
  Eigen::MatrixXd B(1, 1);
  B << 1;
  Eigen::MatrixXd jf(1, 1), jh(1, 1);
  jf << -1;
  jh << 1;
  std::vector<Eigen::MatrixXd> jac_g0{Eigen::MatrixXd::Zero(1, 1)};
  auto zero_box = [](const Box&) { return 0.0; };
  auto zero_bound = [](const Box&, int) { return 0.0; };
  return SystemModel("linear1d", 1, 1, 1, f, B, g, h, jf, jac_g0, jh, zero_box, zero_bound,
                     zero_bound);
}

BoundSet bounds_for(const SystemModel& model, const Triangulation& tri,
                    std::optional<double> hybrid_epsilon) {
  BoundSet out;
  const int m = tri.num_simplexes();
  out.beta.resize(static_cast<size_t>(m));
  out.rho.resize(static_cast<size_t>(m));
  out.mu.resize(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Box box = tri.simplex_box(i);
    out.beta[static_cast<size_t>(i)] = model.beta_bound(box);
    Eigen::VectorXd rho(model.output_dim());
    for (int a = 0; a < model.output_dim(); ++a) rho(a) = model.rho_bound(box, a);
    Eigen::VectorXd mu(model.input_dim());
    for (int k = 0; k < model.input_dim(); ++k) mu(k) = model.mu_bound(box, k);
    out.rho[static_cast<size_t>(i)] = std::move(rho);
    out.mu[static_cast<size_t>(i)] = std::move(mu);
  }
  if (hybrid_epsilon) {
    const double eps = *hybrid_epsilon;
    if (!(eps > 0.0)) throw InvalidRegionError("hybrid epsilon must be positive");
    const int n = model.state_dim();
    Box ball_box{Eigen::VectorXd::Constant(n, -eps), Eigen::VectorXd::Constant(n, eps)};
    out.has_origin_ball = true;
    out.beta_eps = model.beta_bound(ball_box);
    for (int a = 0; a < model.output_dim(); ++a) {
      out.rho_eps = std::max(out.rho_eps, model.rho_bound(ball_box, a));
    }
    for (int k = 0; k < model.input_dim(); ++k) {
      out.mu_eps = std::max(out.mu_eps, model.mu_bound(ball_box, k));
    }
  }
  return out;
}

}  // namespace gaincert
