#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gaincert/mesh.hpp"
#include "gaincert/system.hpp"

namespace gaincert {

using VarId = int;

/// Decision-variable layout shared by assembly, compilation and solution
/// readback: alpha (= gamma^2) first, then one value per vertex, then the
/// per-simplex gradient-bound vectors, then (hybrid) the lower triangle of P
/// and the operator-norm bound l_p.
struct DecisionLayout {
  VarId alpha = 0;
  std::vector<VarId> v;        // per vertex
  std::vector<VarId> l_start;  // per simplex; l_i = [l_start[i], l_start[i]+n)
  int n = 0;
  std::vector<VarId> p_entries;  // hybrid: n(n+1)/2 ids, column-major lower triangle
  VarId l_p = -1;
  int num_vars = 0;
  bool hybrid = false;

  static DecisionLayout make(const Triangulation& tri, bool hybrid);
  VarId l_var(int simplex_id, int component) const {
    return l_start[static_cast<size_t>(simplex_id)] + component;
  }
  /// Variable id of P(r, c) for r >= c.
  VarId p_var(int r, int c) const;
};

/// constant + sum coef_k * var_k; the only expression form constraints may
/// take, so affinity holds by construction.
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<VarId, double>> terms;

  void add(VarId var, double coef);
  void simplify();
  double eval(const Eigen::VectorXd& x) const;
  bool operator==(const AffineExpr&) const = default;
};

/// Symmetric matrix with affine entries; only the lower triangle is stored.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  explicit AffineMatrix(int dim);

  int dim() const { return dim_; }
  /// Entry (r, c); symmetric access, row/col order immaterial.
  AffineExpr& at(int r, int c);
  const AffineExpr& at(int r, int c) const;

  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
  void simplify();

 private:
  int dim_ = 0;
  std::vector<AffineExpr> lower_;  // column-major lower triangle
};

/// Full constraint set of one optimization problem: linear inequalities
/// (expr >= 0) and matrix inequalities (matrix <= 0).
struct ConstraintSet {
  std::vector<AffineExpr> linear;
  std::vector<AffineMatrix> psd;
};

/// The reusable diagonal data of the simplex error-bound matrix E(x_j):
/// scalar (1,1) entry 1/2 (beta c_j + sum_k mu_k^2 c_j^2) and a 1/2 I block
/// of the given dimension.
struct ErrorBoundMatrix {
  double scalar = 0.0;
  int identity_block_dim = 0;

  Eigen::MatrixXd dense() const;
};

ErrorBoundMatrix error_bound_matrix(double beta, const Eigen::VectorXd& mus, double c_j);

/// Options pinned by the optimization problems; strict inequalities are
/// realized with these margins.
struct AssemblyOptions {
  double alpha_min = 1e-8;
  double p_min_eig = 1e-8;  // delta in P >= delta I
};

/// Vertex LMI M_{i,j} of the gain problem, affine in {V_x, l_i, alpha}.
/// Dimension 1 + m + p + m. The input matrix entering block (2,1) is
/// B + g(x_{i,j}); in CPA-only mode B = 0 is required so this reduces to
/// g(x_{i,j})' grad V. Shape constants come from the origin rule when the
/// simplex contains the origin.
AffineMatrix gain_lmi_block(const SystemModel& model, const Triangulation& tri,
                            const BoundSet& bounds, int simplex_id, int j,
                            const DecisionLayout& layout);

/// Origin-ball LMI M_eps of the hybrid problem, affine in {P, l_p, alpha}.
/// Dimension 3n + m + p. The two norm-channel diagonals and the Young slack
/// on the input block adapt to the data magnitudes (see bound derivation in
/// the implementation); with zero channel data the matrix reduces to the
/// exact linearized gain LMI.
AffineMatrix origin_lmi_block(const SystemModel& model, double epsilon, const BoundSet& bounds,
                              const DecisionLayout& layout);

/// 2n inequalities +-(grad V_i)_k <= l_i^(k), written as expr >= 0.
std::vector<AffineExpr> gradient_bound_constraints(int simplex_id, const DecisionLayout& layout,
                                                   const Triangulation& tri);

/// alpha >= alpha_min, V_x >= 0 (linear) and, in hybrid mode, P - delta I >= 0
/// and l_p I - P >= 0 (PSD, emitted as "matrix <= 0" of the negated form).
ConstraintSet side_constraints(const DecisionLayout& layout, const AssemblyOptions& opts);

/// One line per matrix entry: "constraint row col varid coef" with varid -1
/// for the constant part. Linear constraints are 1x1.
std::string dump_constraints(const ConstraintSet& set);

}  // namespace gaincert
