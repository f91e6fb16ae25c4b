#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "gaincert/mesh.hpp"

namespace gaincert {

struct SimplexGradient {
  int simplex_id = -1;
  Eigen::VectorXd grad;
};

/// Continuous piecewise-affine function on a triangulation, determined by one
/// value per vertex. Per-simplex gradients solve X_i grad = Wbar_i and are
/// computed once at construction. Immutable afterwards.
class CpaFunction {
 public:
  CpaFunction(std::shared_ptr<const Triangulation> tri, Eigen::VectorXd values);

  const Triangulation& tri() const { return *tri_; }
  std::shared_ptr<const Triangulation> tri_ptr() const { return tri_; }
  const Eigen::VectorXd& values() const { return values_; }

  SimplexGradient gradient(int simplex_id) const;
  double evaluate(const Eigen::VectorXd& x) const;

 private:
  std::shared_ptr<const Triangulation> tri_;
  Eigen::VectorXd values_;
  Eigen::MatrixXd gradients_;  // n x num_simplexes; NaN column when degenerate
};

/// Quadratic-near-origin storage: x'Px on the closed ball of radius epsilon,
/// the CPA function on the annulus outside. The two pieces need not agree on
/// the sphere.
struct HybridStorage {
  Eigen::MatrixXd P;
  double epsilon = 0.0;
  CpaFunction cpa;

  double evaluate(const Eigen::VectorXd& x) const;
};

std::string storage_to_json(const CpaFunction& cpa);
std::string storage_to_json(const HybridStorage& hs);

}  // namespace gaincert
