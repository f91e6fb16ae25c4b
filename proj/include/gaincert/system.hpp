#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gaincert/mesh.hpp"

namespace gaincert {

/// Input-affine system  xdot = f(x) + (B + g(x)) u,  y = h(x)  with
/// f(0) = 0, g(0) = 0, h(0) = 0, together with the per-box bounds on the
/// largest absolute second partial derivative of f, h and each column of g.
///
/// Evaluators and oracles must be pure; construction checks the origin
/// conditions and the supplied Jacobians against finite differences.
class SystemModel {
 public:
  using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using MatFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using BoxBound = std::function<double(const Box&)>;
  using IndexedBoxBound = std::function<double(const Box&, int)>;

  SystemModel(std::string name, int n, int m, int p, VecFn f, Eigen::MatrixXd B, MatFn g,
              VecFn h, Eigen::MatrixXd jac_f0, std::vector<Eigen::MatrixXd> jac_g0,
              Eigen::MatrixXd jac_h0, BoxBound beta_oracle, IndexedBoxBound rho_oracle,
              IndexedBoxBound mu_oracle);

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int output_dim() const { return p_; }

  Eigen::VectorXd f(const Eigen::VectorXd& x) const { return f_(x); }
  Eigen::MatrixXd g(const Eigen::VectorXd& x) const { return g_(x); }
  Eigen::VectorXd h(const Eigen::VectorXd& x) const { return h_(x); }
  /// Full input matrix B + g(x).
  Eigen::MatrixXd input_matrix(const Eigen::VectorXd& x) const { return B_ + g_(x); }
  const Eigen::MatrixXd& B() const { return B_; }
  bool has_zero_B() const { return B_.isZero(0.0); }

  const Eigen::MatrixXd& jac_f0() const { return jac_f0_; }
  const Eigen::MatrixXd& jac_h0() const { return jac_h0_; }
  const std::vector<Eigen::MatrixXd>& jac_g0() const { return jac_g0_; }

  double beta_bound(const Box& box) const;
  double rho_bound(const Box& box, int output_index) const;
  double mu_bound(const Box& box, int column) const;

 private:
  std::string name_;
  int n_, m_, p_;
  VecFn f_;
  Eigen::MatrixXd B_;
  MatFn g_;
  VecFn h_;
  Eigen::MatrixXd jac_f0_;
  std::vector<Eigen::MatrixXd> jac_g0_;
  Eigen::MatrixXd jac_h0_;
  BoxBound beta_;
  IndexedBoxBound rho_;
  IndexedBoxBound mu_;
};

/// Per-simplex derivative bounds, plus the origin-ball bounds in hybrid mode
/// (those are maxima over output rows / input columns).
struct BoundSet {
  std::vector<double> beta;               // per simplex
  std::vector<Eigen::VectorXd> rho;       // per simplex, length p
  std::vector<Eigen::VectorXd> mu;        // per simplex, length m
  bool has_origin_ball = false;
  double beta_eps = 0.0;
  double rho_eps = 0.0;
  double mu_eps = 0.0;
};

/// Pendulum  x1dot = x2, x2dot = -sin x1 - x2 + k(x) u, y = x2.
enum class PendulumInput {
  kConstantOne,  // k = 1:   B = [0;1], g = 0
  kX2Affine,     // k = x2:  B = 0,    g(x) = [0; x2]
};
SystemModel pendulum(PendulumInput k_mode);

/// 1-D test system xdot = -x + u, y = x; true L2-gain 1.
SystemModel linear_test();

/// Evaluates the oracles on every simplex bounding box (and, in hybrid mode,
/// on [-eps, eps]^n for the origin ball).
BoundSet bounds_for(const SystemModel& model, const Triangulation& tri,
                    std::optional<double> hybrid_epsilon = std::nullopt);

/// max over [lo, hi] of |sin t|, by interval evaluation.
double interval_abs_sin_max(double lo, double hi);

}  // namespace gaincert
