#include "gaincert/conic.hpp"

#include <cmath>

#include "json.hpp"

namespace gaincert {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

int svec_len(int dim) { return dim * (dim + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& a) {
  const int p = static_cast<int>(a.rows());
  Eigen::VectorXd v(svec_len(p));
  int k = 0;
  for (int c = 0; c < p; ++c) {
    v(k++) = a(c, c);
    for (int r = c + 1; r < p; ++r) v(k++) = kSqrt2 * a(r, c);
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int dim) {
  Eigen::MatrixXd a(dim, dim);
  int k = 0;
  for (int c = 0; c < dim; ++c) {
    a(c, c) = v(k++);
    for (int r = c + 1; r < dim; ++r) {
      a(r, c) = v(k) / kSqrt2;
      a(c, r) = a(r, c);
      ++k;
    }
  }
  return a;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
    case SolveStatus::kMaxIters: return "max_iters";
  }
  return "unknown";
}

ConicProgram compile(const ConstraintSet& constraints, const DecisionLayout& layout,
                     VarId objective_var) {
  ConicProgram prog;
  prog.num_vars = layout.num_vars;
  if (objective_var < 0 || objective_var >= layout.num_vars) {
    throw CompileError("objective variable outside the layout");
  }
  prog.c = Eigen::VectorXd::Zero(prog.num_vars);
  prog.c(objective_var) = 1.0;

  prog.num_nonneg = static_cast<int>(constraints.linear.size());
  long rows = prog.num_nonneg;
  for (const AffineMatrix& m : constraints.psd) {
    prog.psd_dims.push_back(m.dim());
    rows += svec_len(m.dim());
  }

  prog.h = Eigen::VectorXd::Zero(rows);
  std::vector<Eigen::Triplet<double>> trips;
  auto check_var = [&](VarId v) {
    if (v < 0 || v >= layout.num_vars) throw CompileError("constraint references unknown VarId");
  };

  // expr >= 0  ->  s = h - Gx with h = constant, G row = -coefs.
  long row = 0;
  for (const AffineExpr& e : constraints.linear) {
    prog.h(row) = e.constant;
    for (const auto& [var, coef] : e.terms) {
      check_var(var);
      trips.emplace_back(static_cast<int>(row), var, -coef);
    }
    ++row;
  }

  // M(x) <= 0  ->  s = svec(-M(x)): h = svec(-const part), G col j = svec(A_j).
  for (const AffineMatrix& mat : constraints.psd) {
    const int dim = mat.dim();
    for (int c = 0; c < dim; ++c) {
      for (int r = c; r < dim; ++r) {
        const long entry_row = row + (static_cast<long>(c) * dim - static_cast<long>(c) * (c - 1) / 2 + (r - c));
        const double scale = (r == c) ? 1.0 : kSqrt2;
        const AffineExpr& e = mat.at(r, c);
        prog.h(entry_row) = -scale * e.constant;
        for (const auto& [var, coef] : e.terms) {
          check_var(var);
          trips.emplace_back(static_cast<int>(entry_row), var, scale * coef);
        }
      }
    }
    row += svec_len(dim);
  }

  prog.G.resize(rows, prog.num_vars);
  prog.G.setFromTriplets(trips.begin(), trips.end());
  prog.G.makeCompressed();
  return prog;
}

double max_constraint_violation(const ConicProgram& program, const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = program.h - program.G * x;
  double worst = -std::numeric_limits<double>::infinity();
  if (program.num_nonneg > 0) {
    worst = std::max(worst, -s.head(program.num_nonneg).minCoeff());
  }
  long offset = program.num_nonneg;
  for (int dim : program.psd_dims) {
    const Eigen::MatrixXd block = smat(s.segment(offset, svec_len(dim)), dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block, Eigen::EigenvaluesOnly);
    worst = std::max(worst, -eig.eigenvalues().minCoeff());
    offset += svec_len(dim);
  }
  return worst;
}

SolverResult solve(const ConicProgram& program, const SolveOptions& opts, ConicSolver* solver) {
  std::unique_ptr<ConicSolver> owned;
  if (solver == nullptr) {
    owned = make_ipm_solver();
    solver = owned.get();
  }
  SolverResult result = solver->solve(program, opts);
  if (result.status == SolveStatus::kOptimal || result.status == SolveStatus::kMaxIters) {
    result.recheck_violation = max_constraint_violation(program, result.x);
    // Feasibility gate scaled like the solver's relative tolerances.
    const double scale = std::max(1.0, result.x.lpNorm<Eigen::Infinity>());
    if (result.status == SolveStatus::kOptimal &&
        result.recheck_violation > 10.0 * opts.tol * scale) {
      result.status = SolveStatus::kNumericalFailure;
    }
  }
  return result;
}

std::string ConicProgram::to_json() const {
  nlohmann::ordered_json j;
  j["num_vars"] = num_vars;
  j["num_nonneg"] = num_nonneg;
  j["psd_dims"] = psd_dims;
  auto& cj = j["objective"] = nlohmann::ordered_json::array();
  for (int i = 0; i < c.size(); ++i) {
    if (c(i) != 0.0) cj.push_back({{"var", i}, {"coef", c(i)}});
  }
  auto& hj = j["h"] = nlohmann::ordered_json::array();
  for (int i = 0; i < h.size(); ++i) hj.push_back(h(i));
  auto& gj = j["G"] = nlohmann::ordered_json::array();
  for (int col = 0; col < G.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(G, col); it; ++it) {
      gj.push_back({{"row", it.row()}, {"col", it.col()}, {"val", it.value()}});
    }
  }
  return j.dump();
}

}  // namespace gaincert
