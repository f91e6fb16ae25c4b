#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "gaincert/analysis.hpp"
#include "gaincert/system.hpp"

namespace gaincert {

/// Samples the nominal gain LMI (the 3-block HJI form) over the certified
/// region using the certificate's storage gradients and gamma*, and reports
/// the largest eigenvalue seen. Points within 1e-9 of simplex boundaries are
/// skipped (the CPA gradient is set-valued there); inside the hybrid ball the
/// gradient is 2 P x.
CheckReport check_hji_samples(const SystemModel& model, const GainCertificate& cert,
                              int num_samples, double tol, std::uint64_t seed);

/// Scalar-valued C^2 test function with an exact Hessian-magnitude bound;
/// the currency of the error-bound theorem oracles.
struct TestFunction {
  std::function<double(const Eigen::VectorXd&)> eval;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
  double hessian_bound = 0.0;  // max |second partial| over the test region
};

/// Brute-force statement of the simplex error-bound theorem for
/// M(x) = [[phi, zeta'], [zeta, -I]]: over random barycentric draws returns
/// the smallest eigenvalue of  E(x) - (M(x) - sum_j lambda_j M(x_j)); the
/// theorem holds iff the result is >= -1e-9.
double oracle_simplex_bound(const TestFunction& phi, const std::vector<TestFunction>& zeta,
                            const Eigen::MatrixXd& simplex_vertices, int num_draws,
                            std::uint64_t seed);

/// The theorem's implication: enforce M(x_j) + E(x_j) <= 0 at the vertices by
/// shifting phi, then return the largest eigenvalue of the shifted M(x) over
/// random draws (should be <= 1e-9).
double oracle_simplex_vertex_implication(const TestFunction& phi,
                                         const std::vector<TestFunction>& zeta,
                                         const Eigen::MatrixXd& simplex_vertices, int num_draws,
                                         std::uint64_t seed);

/// Brute-force statement of the origin-ball theorem. Verifies the ball LMI
/// M_eps <= 0 first (returns nullopt when it fails: precondition unmet), then
/// samples zeta'zeta + x'theta over the ball and returns the maximum
/// (<= 1e-9 when the theorem holds).
struct VectorField {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  Eigen::MatrixXd jacobian0;
  double hessian_bound = 0.0;
};
std::optional<double> oracle_origin_bound(const VectorField& theta, const VectorField& zeta,
                                          double epsilon, int num_draws, std::uint64_t seed);

/// Builds the Eq-style ball matrix for (theta, zeta) data; exposed for tests.
Eigen::MatrixXd origin_ball_matrix(const Eigen::MatrixXd& j_theta, const Eigen::MatrixXd& j_zeta,
                                   double beta_eps, double mu_eps, double epsilon);

struct SimulationResult {
  std::string input_description;
  double horizon = 0.0;
  double l2_ratio = 0.0;  // ||y||_2 / ||u||_2, 0 when u = 0
  bool state_stayed_in_region = true;
};

struct InputSignal {
  enum class Kind { kZero, kStep, kSine, kBandLimitedRandom };
  Kind kind = Kind::kStep;
  double amplitude = 0.05;
  double frequency = 1.0;  // sine only
  std::uint64_t seed = 0;  // band-limited only
};

/// Integrates the closed system from rest with classical fixed-step RK4 and
/// returns trapezoid-rule L2 ratios; trajectories that leave the region are
/// flagged so callers can exclude them from gain comparisons.
std::vector<SimulationResult> empirical_gain_lower_bound(const SystemModel& model,
                                                         const std::vector<InputSignal>& inputs,
                                                         double horizon, double dt,
                                                         const Box& region);

/// Convenience: n seeded band-limited inputs with ||u||_inf <= amplitude.
std::vector<InputSignal> random_band_limited_inputs(int count, double amplitude,
                                                    std::uint64_t seed);

}  // namespace gaincert
