#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "gaincert/assembly.hpp"

namespace gaincert {

// Symmetric-vectorization helpers. svec stores the column-major lower
// triangle with off-diagonal entries scaled by sqrt(2), so vector inner
// products equal trace inner products.
int svec_len(int dim);
Eigen::VectorXd svec(const Eigen::MatrixXd& a);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int dim);

/// Standard-form conic program   minimize c'x  s.t.  s = h - G x,  s in K,
/// where K = R^num_nonneg_+  x  PSD(psd_dims[0]) x ... (svec coordinates).
struct ConicProgram {
  int num_vars = 0;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;
  int num_nonneg = 0;
  std::vector<int> psd_dims;

  int num_rows() const { return static_cast<int>(G.rows()); }
  std::string to_json() const;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure, kMaxIters };
std::string to_string(SolveStatus s);

struct SolverResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;  // primal values per VarId; empty unless optimal/max_iters
  /// Dual cone variable; on kInfeasible it carries the Farkas direction
  /// (z in K*, G'z ~ 0, h'z < 0).
  Eigen::VectorXd z;
  double objective = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  double duality_gap = 0.0;
  /// Worst constraint violation of the returned point against the original
  /// program (largest eigenvalue across PSD blocks / nonnegativity defect),
  /// filled by the re-check in solve().
  double recheck_violation = 0.0;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iters = 200000;
  bool verbose = false;
};

/// Narrow adapter contract: accepts nonnegative + PSD cones, returns a
/// primal-dual solution with duality gap below tol.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual SolverResult solve(const ConicProgram& program, const SolveOptions& opts) = 0;
  virtual std::string name() const = 0;
};

/// Production adapter: primal-dual interior-point method (Nesterov-Todd
/// scalings, Mehrotra predictor-corrector, homogeneous self-dual embedding).
std::unique_ptr<ConicSolver> make_ipm_solver();

/// Reference adapter for bridge self-tests only: projected subgradient,
/// restricted to programs whose cones are all 1x1 or 2x2.
std::unique_ptr<ConicSolver> make_tiny_solver();

/// Lowers a constraint set to standard form. Deterministic: nonnegative rows
/// first in given order, then PSD cones in given order.
ConicProgram compile(const ConstraintSet& constraints, const DecisionLayout& layout,
                     VarId objective_var = 0);

/// Largest violation of the original cones at x (<= 0 means feasible).
double max_constraint_violation(const ConicProgram& program, const Eigen::VectorXd& x);

/// Runs the adapter and re-checks feasibility of the returned point against
/// the program; never trusts solver status alone.
SolverResult solve(const ConicProgram& program, const SolveOptions& opts,
                   ConicSolver* solver = nullptr);

}  // namespace gaincert
