#include "gaincert/storage.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace gaincert {

CpaFunction::CpaFunction(std::shared_ptr<const Triangulation> tri, Eigen::VectorXd values)
    : tri_(std::move(tri)), values_(std::move(values)) {
  if (!tri_) throw Error("CpaFunction needs a triangulation");
  if (values_.size() != tri_->num_vertices()) {
    throw Error("CpaFunction value count does not match the vertex count");
  }
  if (!values_.allFinite()) throw Error("CpaFunction values must be finite");

  const int n = tri_->dim();
  gradients_.resize(n, tri_->num_simplexes());
  for (int i = 0; i < tri_->num_simplexes(); ++i) {
    const Simplex& s = tri_->simplex(i);
    Eigen::VectorXd wbar(n);
    for (int j = 1; j <= n; ++j) {
      wbar(j - 1) = values_(s.verts[static_cast<size_t>(j)]) - values_(s.verts[0]);
    }
    try {
      gradients_.col(i) = tri_->vertex_matrix(i).second * wbar;
    } catch (const DegenerateSimplexError&) {
      gradients_.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
}

SimplexGradient CpaFunction::gradient(int simplex_id) const {
  Eigen::VectorXd g = gradients_.col(simplex_id);
  if (!g.allFinite()) {
    throw DegenerateSimplexError("gradient undefined on degenerate simplex " +
                                 std::to_string(simplex_id));
  }
  return SimplexGradient{simplex_id, std::move(g)};
}

double CpaFunction::evaluate(const Eigen::VectorXd& x) const {
  const Barycentric b = tri_->locate(x);
  const Simplex& s = tri_->simplex(b.simplex_id);
  double v = 0.0;
  for (int j = 0; j <= tri_->dim(); ++j) {
    v += b.lambdas(j) * values_(s.verts[static_cast<size_t>(j)]);
  }
  return v;
}

double HybridStorage::evaluate(const Eigen::VectorXd& x) const {
  // The sphere itself belongs to the quadratic branch.
  if (x.norm() <= epsilon) return x.dot(P * x);
  return cpa.evaluate(x);
}

std::string storage_to_json(const CpaFunction& cpa) {
  nlohmann::ordered_json j;
  auto& vals = j["values"] = nlohmann::ordered_json::object();
  for (int v = 0; v < cpa.tri().num_vertices(); ++v) {
    vals[std::to_string(v)] = cpa.values()(v);
  }
  return j.dump();
}

std::string storage_to_json(const HybridStorage& hs) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(storage_to_json(hs.cpa));
  auto& p = j["P"] = nlohmann::ordered_json::array();
  for (int r = 0; r < hs.P.rows(); ++r) {
    for (int c = 0; c < hs.P.cols(); ++c) p.push_back(hs.P(r, c));
  }
  j["epsilon"] = hs.epsilon;
  return j.dump();
}

}  // namespace gaincert
