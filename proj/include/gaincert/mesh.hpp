#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gaincert/errors.hpp"

namespace gaincert {

/// Axis-aligned box, the region currency for meshes and derivative bounds.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  bool contains_origin_strictly() const;
  /// Distance from the origin to the nearest box face.
  double inscribed_radius() const;
};

struct Vertex {
  int id = -1;
  Eigen::VectorXd coords;
};

/// n+1 vertex indices; when the simplex contains the origin the origin
/// vertex is listed first.
struct Simplex {
  std::vector<int> verts;
  bool contains_origin = false;
};

/// Barycentric coordinates of a point within one simplex.
struct Barycentric {
  int simplex_id = -1;
  Eigen::VectorXd lambdas;  // length n+1, ordered like Simplex::verts
};

/// Immutable simplicial mesh of a region about the origin. All queries are
/// pure and safe to call concurrently once construction is done.
class Triangulation {
 public:
  Triangulation() = default;
  /// Assembles a mesh from raw parts and precomputes per-simplex geometry
  /// (vertex-difference inverses, bounding boxes, point-location bins).
  /// Degenerate simplexes are tolerated here and surface later through
  /// vertex_matrix() or validate().
  Triangulation(int n, std::vector<Vertex> vertices, std::vector<Simplex> simplexes,
                std::optional<double> hole_radius = std::nullopt);

  int dim() const { return n_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_simplexes() const { return static_cast<int>(simplexes_.size()); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Simplex>& simplexes() const { return simplexes_; }
  const Vertex& vertex(int id) const { return vertices_.at(static_cast<size_t>(id)); }
  const Simplex& simplex(int id) const { return simplexes_.at(static_cast<size_t>(id)); }
  const Box& bounding_box() const { return bounding_box_; }
  /// Radius of the spherical hole for annulus meshes, if any.
  std::optional<double> hole_radius() const { return hole_radius_; }

  /// Coordinates of vertex position j of a simplex.
  const Eigen::VectorXd& corner(int simplex_id, int j) const;

  /// Matrix X with rows x_{i,j} - x_{i,0} together with its inverse.
  /// Throws DegenerateSimplexError when the condition number exceeds 1e12.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> vertex_matrix(int simplex_id) const;

  /// Axis-aligned bounding box of one simplex.
  Box simplex_box(int simplex_id) const;

  /// Largest vertex-matrix condition number tolerated before a simplex is
  /// treated as degenerate.
  static constexpr double kDegenerateCond = 1e12;

  /// Locates x in the mesh; ties on shared faces go to the lowest simplex id.
  Barycentric locate(const Eigen::VectorXd& x) const;
  /// Like locate() but returns nullopt instead of throwing.
  std::optional<Barycentric> try_locate(const Eigen::VectorXd& x) const;

  std::string to_json() const;
  static Triangulation from_json(const std::string& text);

 private:
  void build_caches();

  int n_ = 0;
  std::vector<Vertex> vertices_;
  std::vector<Simplex> simplexes_;
  Box bounding_box_;
  std::optional<double> hole_radius_;

  // Per-simplex caches; x_inv_ok_[i] is false for degenerate simplexes.
  std::vector<Eigen::MatrixXd> x_inv_;
  std::vector<char> x_inv_ok_;
  std::vector<Eigen::VectorXd> box_lo_, box_hi_;

  // Uniform bin grid for point location: bin -> simplex ids (sorted).
  std::vector<std::vector<int>> bins_;
  Eigen::VectorXi bins_per_axis_;
};

/// Kuhn (Freudenthal) grid over a box whose grid lines pass through the
/// origin on every axis. Cells adjacent to the origin are reflected so the
/// origin fans out along cell diagonals that avoid it, which keeps the
/// Eq.-style origin shape constants small.
Triangulation build_kuhn_grid(const Box& box, const std::vector<int>& divisions_per_axis);
Triangulation build_kuhn_grid(const Box& box, int divisions_per_axis);

/// Kuhn grid whose origin-adjacent cells are replaced by a polar fan: a ring
/// of vertices on a small circle at angles offset from the grid axes, fanned
/// to the origin and stitched back to the grid. Grid-aligned meshes can make
/// first-ring edges run parallel to a rotational vector field, which renders
/// the vertex gain LMIs infeasible around the origin (the constraints chain
/// into a cycle); the rotated ring breaks that alignment. 2-D only; other
/// dimensions fall back to the plain grid.
Triangulation build_origin_fan_grid(const Box& box, int divisions_per_axis);

/// Mesh of box minus the open ball of radius epsilon. The hole boundary is a
/// regular polygon inscribed in the epsilon-sphere, so the mesh plus the
/// closed ball covers the box. 1-D boxes get two interval chains instead.
Triangulation build_annulus(const Box& box, int divisions_per_axis, double epsilon,
                            int boundary_segments);

/// Red refinement by edge midpoints (2^n children per simplex). Vertices on
/// the hole sphere keep their children's ring midpoints re-projected onto it.
Triangulation refine(const Triangulation& tri);

/// c_{i,j} of the origin-simplex error bound:
/// n * ||x_j - x_0|| * (max_k ||x_k - x_0|| + ||x_j - x_0||), 2-norm, and 0
/// for j = 0.
double shape_constant_origin(const Triangulation& tri, int simplex_id, int j);

/// c_j of the general simplex error bound: n * max_v ||x_j - x_v||_2^2.
double shape_constant(const Triangulation& tri, int simplex_id, int j);

/// Report-based mesh checks; never throws.
struct MeshValidation {
  std::vector<std::string> affine_independence_failures;
  std::vector<std::string> origin_ordering_violations;
  std::vector<std::string> coverage_gaps;
  std::vector<std::string> face_intersection_violations;
  bool ok() const {
    return affine_independence_failures.empty() && origin_ordering_violations.empty() &&
           coverage_gaps.empty() && face_intersection_violations.empty();
  }
};

MeshValidation validate(const Triangulation& tri, int coverage_samples = 2000,
                        std::uint64_t seed = 0);

}  // namespace gaincert
