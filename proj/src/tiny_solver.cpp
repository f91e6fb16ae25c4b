#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "gaincert/conic.hpp"

// Reference adapter for bridge self-tests: exact-penalty projected
// subgradient, restricted to programs whose PSD blocks are 1x1 or 2x2.
// Deliberately slow and simple; accuracy around 1e-4 on well-scaled tiny
// problems.

namespace gaincert {

namespace {

class TinySolver final : public ConicSolver {
 public:
  SolverResult solve(const ConicProgram& prog, const SolveOptions& opts) override {
    const auto t0 = std::chrono::steady_clock::now();
    for (int dim : prog.psd_dims) {
      if (dim > 2) throw Error("tiny solver only handles 1x1 and 2x2 cones");
    }

    const int n = prog.num_vars;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd best_x = x;
    double best_score = std::numeric_limits<double>::infinity();
    double best_violation = std::numeric_limits<double>::infinity();
    const double rho = 100.0 * std::max(1.0, prog.c.norm());

    const int iters = std::max(1000, opts.max_iters);
    for (int k = 0; k < iters; ++k) {
      Eigen::VectorXd grad = prog.c;
      const Eigen::VectorXd s = prog.h - prog.G * x;
      double violation = 0.0;
      for (int i = 0; i < prog.num_nonneg; ++i) {
        if (s(i) < 0.0) {
          violation += -s(i);
          grad += rho * prog.G.row(i).transpose();
        }
      }
      long row = prog.num_nonneg;
      for (int dim : prog.psd_dims) {
        const int len = svec_len(dim);
        const Eigen::MatrixXd block = smat(s.segment(row, len), dim);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
        const double lmin = eig.eigenvalues()(0);
        if (lmin < 0.0) {
          violation += -lmin;
          const Eigen::VectorXd v = eig.eigenvectors().col(0);
          // d(-lambda_min)/dx_j = v' smat(G column block j) v
          for (int j = 0; j < n; ++j) {
            Eigen::VectorXd gcol = Eigen::VectorXd::Zero(len);
            bool any = false;
            for (int rr = 0; rr < len; ++rr) {
              const double val = prog.G.coeff(row + rr, j);
              if (val != 0.0) {
                gcol(rr) = val;
                any = true;
              }
            }
            if (any) grad(j) += rho * v.dot(smat(gcol, dim) * v);
          }
        }
        row += len;
      }

      const double score = prog.c.dot(x) + rho * violation;
      if (score < best_score) {
        best_score = score;
        best_x = x;
        best_violation = violation;
      }
      const double step = 1.0 / (std::sqrt(static_cast<double>(k) + 1.0) *
                                 std::max(1.0, grad.norm()));
      x -= step * grad;
      if (x.norm() > 1e7) break;
    }

    SolverResult out;
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.iterations = iters;
    if (x.norm() > 1e7) {
      out.status = SolveStatus::kUnbounded;
      return out;
    }
    if (best_violation > 1e-3) {
      out.status = SolveStatus::kInfeasible;
      return out;
    }
    out.status = SolveStatus::kOptimal;
    out.x = best_x;
    out.objective = prog.c.dot(best_x);
    out.duality_gap = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::string name() const override { return "tiny-subgradient"; }
};

}  // namespace

std::unique_ptr<ConicSolver> make_tiny_solver() { return std::make_unique<TinySolver>(); }

}  // namespace gaincert
