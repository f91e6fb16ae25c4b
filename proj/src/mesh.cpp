#include "gaincert/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gaincert {

namespace {

constexpr double kOriginSnap = 1e-13;
constexpr double kGridAlign = 1e-9;

bool is_origin(const Eigen::VectorXd& x) { return x.isZero(0.0); }

// Moves the origin vertex (if present) to the front, keeping the relative
// order of the rest, and sets the flag.
void normalize_origin_order(Simplex& s, const std::vector<Vertex>& verts) {
  int origin_pos = -1;
  for (size_t j = 0; j < s.verts.size(); ++j) {
    if (is_origin(verts[static_cast<size_t>(s.verts[j])].coords)) {
      origin_pos = static_cast<int>(j);
      break;
    }
  }
  s.contains_origin = origin_pos >= 0;
  if (origin_pos > 0) {
    int id = s.verts[static_cast<size_t>(origin_pos)];
    s.verts.erase(s.verts.begin() + origin_pos);
    s.verts.insert(s.verts.begin(), id);
  }
}

}  // namespace

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  for (int a = 0; a < dim(); ++a) {
    if (x(a) < lo(a) - tol || x(a) > hi(a) + tol) return false;
  }
  return true;
}

bool Box::contains_origin_strictly() const {
  for (int a = 0; a < dim(); ++a) {
    if (!(lo(a) < 0.0 && hi(a) > 0.0)) return false;
  }
  return true;
}

double Box::inscribed_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim(); ++a) {
    r = std::min(r, std::min(-lo(a), hi(a)));
  }
  return r;
}

Triangulation::Triangulation(int n, std::vector<Vertex> vertices, std::vector<Simplex> simplexes,
                             std::optional<double> hole_radius)
    : n_(n), vertices_(std::move(vertices)), simplexes_(std::move(simplexes)),
      hole_radius_(hole_radius) {
  if (n_ <= 0) throw InvalidRegionError("triangulation dimension must be positive");
  for (size_t i = 0; i < vertices_.size(); ++i) {
    vertices_[i].id = static_cast<int>(i);
    if (!vertices_[i].coords.allFinite() || vertices_[i].coords.size() != n_) {
      throw InvalidRegionError("vertex " + std::to_string(i) + " has bad coordinates");
    }
  }
  build_caches();
}

void Triangulation::build_caches() {
  const size_t m = simplexes_.size();
  x_inv_.assign(m, Eigen::MatrixXd());
  x_inv_ok_.assign(m, 0);
  box_lo_.assign(m, Eigen::VectorXd());
  box_hi_.assign(m, Eigen::VectorXd());

  bounding_box_.lo = Eigen::VectorXd::Constant(n_, std::numeric_limits<double>::infinity());
  bounding_box_.hi = Eigen::VectorXd::Constant(n_, -std::numeric_limits<double>::infinity());
  for (const Vertex& v : vertices_) {
    bounding_box_.lo = bounding_box_.lo.cwiseMin(v.coords);
    bounding_box_.hi = bounding_box_.hi.cwiseMax(v.coords);
  }

  for (size_t i = 0; i < m; ++i) {
    const Simplex& s = simplexes_[i];
    if (static_cast<int>(s.verts.size()) != n_ + 1) {
      throw InvalidRegionError("simplex " + std::to_string(i) + " has wrong vertex count");
    }
    Eigen::VectorXd lo = vertex(s.verts[0]).coords;
    Eigen::VectorXd hi = lo;
    Eigen::MatrixXd x(n_, n_);
    for (int j = 1; j <= n_; ++j) {
      const Eigen::VectorXd& c = vertex(s.verts[static_cast<size_t>(j)]).coords;
      x.row(j - 1) = (c - vertex(s.verts[0]).coords).transpose();
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    box_lo_[i] = lo;
    box_hi_[i] = hi;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues()(n_ - 1);
    const double smax = svd.singularValues()(0);
    if (smin > 0.0 && smax / smin < kDegenerateCond) {
      x_inv_[i] = svd.solve(Eigen::MatrixXd::Identity(n_, n_));
      x_inv_ok_[i] = 1;
    }
  }

  // Point-location bins: a uniform grid over the bounding box; each simplex
  // registers with every bin its own box overlaps.
  int per_axis = std::max(1, static_cast<int>(std::floor(std::pow(4096.0, 1.0 / n_))));
  per_axis = std::min<int>(per_axis, 64);
  bins_per_axis_ = Eigen::VectorXi::Constant(n_, per_axis);
  long total = 1;
  for (int a = 0; a < n_; ++a) total *= bins_per_axis_(a);
  bins_.assign(static_cast<size_t>(total), {});

  auto bin_range = [&](double lo, double hi, int axis) {
    const double span = bounding_box_.hi(axis) - bounding_box_.lo(axis);
    const int nb = bins_per_axis_(axis);
    if (span <= 0.0) return std::pair<int, int>(0, 0);
    int b0 = static_cast<int>(std::floor((lo - bounding_box_.lo(axis)) / span * nb));
    int b1 = static_cast<int>(std::floor((hi - bounding_box_.lo(axis)) / span * nb));
    b0 = std::clamp(b0, 0, nb - 1);
    b1 = std::clamp(b1, 0, nb - 1);
    return std::pair<int, int>(b0, b1);
  };

  for (size_t i = 0; i < m; ++i) {
    std::vector<std::pair<int, int>> ranges(static_cast<size_t>(n_));
    for (int a = 0; a < n_; ++a) ranges[static_cast<size_t>(a)] = bin_range(box_lo_[i](a), box_hi_[i](a), a);
    std::vector<int> idx(static_cast<size_t>(n_));
    for (int a = 0; a < n_; ++a) idx[static_cast<size_t>(a)] = ranges[static_cast<size_t>(a)].first;
    while (true) {
      long flat = 0;
      for (int a = 0; a < n_; ++a) flat = flat * bins_per_axis_(a) + idx[static_cast<size_t>(a)];
      bins_[static_cast<size_t>(flat)].push_back(static_cast<int>(i));
      int a = n_ - 1;
      while (a >= 0 && ++idx[static_cast<size_t>(a)] > ranges[static_cast<size_t>(a)].second) {
        idx[static_cast<size_t>(a)] = ranges[static_cast<size_t>(a)].first;
        --a;
      }
      if (a < 0) break;
    }
  }
}

const Eigen::VectorXd& Triangulation::corner(int simplex_id, int j) const {
  const Simplex& s = simplex(simplex_id);
  return vertex(s.verts.at(static_cast<size_t>(j))).coords;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> Triangulation::vertex_matrix(int simplex_id) const {
  const Simplex& s = simplex(simplex_id);
  if (!x_inv_ok_[static_cast<size_t>(simplex_id)]) {
    throw DegenerateSimplexError("simplex " + std::to_string(simplex_id) +
                                 " is numerically degenerate");
  }
  Eigen::MatrixXd x(n_, n_);
  for (int j = 1; j <= n_; ++j) {
    x.row(j - 1) = (vertex(s.verts[static_cast<size_t>(j)]).coords - vertex(s.verts[0]).coords).transpose();
  }
  return {x, x_inv_[static_cast<size_t>(simplex_id)]};
}

Box Triangulation::simplex_box(int simplex_id) const {
  return Box{box_lo_.at(static_cast<size_t>(simplex_id)), box_hi_.at(static_cast<size_t>(simplex_id))};
}

std::optional<Barycentric> Triangulation::try_locate(const Eigen::VectorXd& x) const {
  if (x.size() != n_) return std::nullopt;
  constexpr double kLocTol = 1e-10;
  if (!bounding_box_.contains(x, kLocTol)) return std::nullopt;

  long flat = 0;
  for (int a = 0; a < n_; ++a) {
    const double span = bounding_box_.hi(a) - bounding_box_.lo(a);
    int b = span > 0.0 ? static_cast<int>(std::floor((x(a) - bounding_box_.lo(a)) / span *
                                                     bins_per_axis_(a)))
                       : 0;
    b = std::clamp(b, 0, bins_per_axis_(a) - 1);
    flat = flat * bins_per_axis_(a) + b;
  }

  // Candidates are stored sorted by id, so the first hit is the lowest id.
  for (int i : bins_[static_cast<size_t>(flat)]) {
    if (!x_inv_ok_[static_cast<size_t>(i)]) continue;
    bool inside_box = true;
    for (int a = 0; a < n_; ++a) {
      if (x(a) < box_lo_[static_cast<size_t>(i)](a) - kLocTol ||
          x(a) > box_hi_[static_cast<size_t>(i)](a) + kLocTol) {
        inside_box = false;
        break;
      }
    }
    if (!inside_box) continue;
    const Simplex& s = simplexes_[static_cast<size_t>(i)];
    Eigen::VectorXd lam_tail =
        x_inv_[static_cast<size_t>(i)].transpose() * (x - vertex(s.verts[0]).coords);
    const double lam0 = 1.0 - lam_tail.sum();
    if (lam0 < -kLocTol || (lam_tail.array() < -kLocTol).any()) continue;
    Eigen::VectorXd lambdas(n_ + 1);
    lambdas(0) = lam0;
    lambdas.tail(n_) = lam_tail;
    return Barycentric{i, lambdas};
  }
  return std::nullopt;
}

Barycentric Triangulation::locate(const Eigen::VectorXd& x) const {
  auto b = try_locate(x);
  if (!b) {
    std::ostringstream os;
    os << "point [" << x.transpose() << "] is outside the triangulated region";
    throw OutOfRegionError(os.str());
  }
  return *b;
}

double shape_constant_origin(const Triangulation& tri, int simplex_id, int j) {
  const Simplex& s = tri.simplex(simplex_id);
  if (!s.contains_origin) {
    throw InvalidBoundError("shape_constant_origin requires an origin simplex");
  }
  if (j == 0) return 0.0;
  const int n = tri.dim();
  const Eigen::VectorXd& x0 = tri.corner(simplex_id, 0);
  const double dj = (tri.corner(simplex_id, j) - x0).norm();
  double dmax = 0.0;
  for (int k = 1; k <= n; ++k) {
    dmax = std::max(dmax, (tri.corner(simplex_id, k) - x0).norm());
  }
  return n * dj * (dmax + dj);
}

double shape_constant(const Triangulation& tri, int simplex_id, int j) {
  const int n = tri.dim();
  const Eigen::VectorXd& xj = tri.corner(simplex_id, j);
  double dmax2 = 0.0;
  for (int v = 0; v <= n; ++v) {
    dmax2 = std::max(dmax2, (xj - tri.corner(simplex_id, v)).squaredNorm());
  }
  return n * dmax2;
}

namespace {

// Per-axis grid description with the origin sitting exactly on a grid line.
struct AxisGrid {
  std::vector<double> ticks;  // size divisions+1
  int origin_index = -1;
};

AxisGrid make_axis_grid(double lo, double hi, int div, int axis) {
  if (div < 1) throw InvalidRegionError("divisions_per_axis must be positive");
  if (!(lo < 0.0 && hi > 0.0)) {
    throw InvalidRegionError("box must contain the origin strictly in its interior");
  }
  const double h = (hi - lo) / div;
  const double z = -lo / h;
  const double zr = std::round(z);
  if (std::abs(z - zr) > kGridAlign * div || zr < 0.5 || zr > div - 0.5) {
    throw InvalidRegionError("grid lines must pass through 0 on axis " + std::to_string(axis));
  }
  AxisGrid g;
  g.origin_index = static_cast<int>(zr);
  g.ticks.resize(static_cast<size_t>(div) + 1);
  for (int i = 0; i <= div; ++i) {
    g.ticks[static_cast<size_t>(i)] = (i == g.origin_index) ? 0.0 : lo + i * h;
    if (std::abs(g.ticks[static_cast<size_t>(i)]) < kOriginSnap) g.ticks[static_cast<size_t>(i)] = 0.0;
  }
  return g;
}

std::vector<std::vector<int>> permutations(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace

Triangulation build_kuhn_grid(const Box& box, const std::vector<int>& divisions_per_axis) {
  const int n = box.dim();
  if (n < 1) throw InvalidRegionError("box dimension must be positive");
  if (static_cast<int>(divisions_per_axis.size()) != n) {
    throw InvalidRegionError("divisions_per_axis size must match box dimension");
  }
  if (!box.contains_origin_strictly()) {
    throw InvalidRegionError("box must contain the origin strictly in its interior");
  }

  std::vector<AxisGrid> grids;
  grids.reserve(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) {
    grids.push_back(make_axis_grid(box.lo(a), box.hi(a), divisions_per_axis[static_cast<size_t>(a)], a));
  }

  // Vertices in lexicographic order of their grid multi-index.
  std::vector<long> vstride(static_cast<size_t>(n));
  long nverts = 1;
  for (int a = n - 1; a >= 0; --a) {
    vstride[static_cast<size_t>(a)] = nverts;
    nverts *= divisions_per_axis[static_cast<size_t>(a)] + 1;
  }
  std::vector<Vertex> vertices(static_cast<size_t>(nverts));
  {
    std::vector<int> idx(static_cast<size_t>(n), 0);
    for (long v = 0; v < nverts; ++v) {
      Eigen::VectorXd c(n);
      for (int a = 0; a < n; ++a) c(a) = grids[static_cast<size_t>(a)].ticks[static_cast<size_t>(idx[static_cast<size_t>(a)])];
      vertices[static_cast<size_t>(v)] = Vertex{static_cast<int>(v), c};
      int a = n - 1;
      while (a >= 0 && ++idx[static_cast<size_t>(a)] > divisions_per_axis[static_cast<size_t>(a)]) {
        idx[static_cast<size_t>(a)] = 0;
        --a;
      }
    }
  }

  auto vid = [&](const std::vector<int>& idx) {
    long v = 0;
    for (int a = 0; a < n; ++a) v += idx[static_cast<size_t>(a)] * vstride[static_cast<size_t>(a)];
    return static_cast<int>(v);
  };

  // Parity-reflected Kuhn split. The reflection pattern alternates per cell
  // (keeps the complex face-to-face) and the base bits put the cell diagonal
  // off the origin corner for every origin-adjacent cell when n >= 2.
  const auto perms = permutations(n);
  std::vector<Simplex> simplexes;
  std::vector<int> cell(static_cast<size_t>(n), 0);
  while (true) {
    std::vector<int> flip(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
      const int parity = ((cell[static_cast<size_t>(a)] - grids[static_cast<size_t>(a)].origin_index) % 2 + 2) % 2;
      const int base = (n >= 2 && a == 0) ? 1 : 0;
      flip[static_cast<size_t>(a)] = parity ^ base;
    }
    for (const auto& p : perms) {
      std::vector<int> local(static_cast<size_t>(n), 0);
      Simplex s;
      s.verts.reserve(static_cast<size_t>(n) + 1);
      std::vector<int> idx(static_cast<size_t>(n));
      auto push = [&]() {
        for (int a = 0; a < n; ++a) {
          const int y = flip[static_cast<size_t>(a)] ? 1 - local[static_cast<size_t>(a)] : local[static_cast<size_t>(a)];
          idx[static_cast<size_t>(a)] = cell[static_cast<size_t>(a)] + y;
        }
        s.verts.push_back(vid(idx));
      };
      push();
      for (int j = 0; j < n; ++j) {
        local[static_cast<size_t>(p[static_cast<size_t>(j)])] += 1;
        push();
      }
      normalize_origin_order(s, vertices);
      simplexes.push_back(std::move(s));
    }
    int a = n - 1;
    while (a >= 0 && ++cell[static_cast<size_t>(a)] >= divisions_per_axis[static_cast<size_t>(a)]) {
      cell[static_cast<size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }

  return Triangulation(n, std::move(vertices), std::move(simplexes));
}

Triangulation build_kuhn_grid(const Box& box, int divisions_per_axis) {
  return build_kuhn_grid(box, std::vector<int>(static_cast<size_t>(box.dim()), divisions_per_axis));
}

Triangulation build_origin_fan_grid(const Box& box, int divisions_per_axis) {
  Triangulation grid = build_kuhn_grid(box, divisions_per_axis);
  if (grid.dim() != 2) return grid;

  // The block of origin-adjacent cells.
  Eigen::Vector2d block_lo, block_hi;
  {
    const double hx = (box.hi(0) - box.lo(0)) / divisions_per_axis;
    const double hy = (box.hi(1) - box.lo(1)) / divisions_per_axis;
    block_lo = Eigen::Vector2d(-hx, -hy);
    block_hi = Eigen::Vector2d(hx, hy);
  }

  std::vector<Vertex> vertices = grid.vertices();
  std::vector<Simplex> simplexes;
  for (const Simplex& s : grid.simplexes()) {
    bool inside_block = true;
    for (int vid : s.verts) {
      const auto& c = vertices[static_cast<size_t>(vid)].coords;
      if (c(0) < block_lo(0) - 1e-12 || c(0) > block_hi(0) + 1e-12 ||
          c(1) < block_lo(1) - 1e-12 || c(1) > block_hi(1) + 1e-12) {
        inside_block = false;
        break;
      }
    }
    if (!inside_block) simplexes.push_back(s);
  }

  // The block boundary nodes in angular order: four corners and four edge
  // midpoints, all existing grid vertices.
  const std::array<Eigen::Vector2d, 8> ring_outer = {
      Eigen::Vector2d(block_hi(0), 0.0),        Eigen::Vector2d(block_hi(0), block_hi(1)),
      Eigen::Vector2d(0.0, block_hi(1)),        Eigen::Vector2d(block_lo(0), block_hi(1)),
      Eigen::Vector2d(block_lo(0), 0.0),        Eigen::Vector2d(block_lo(0), block_lo(1)),
      Eigen::Vector2d(0.0, block_lo(1)),        Eigen::Vector2d(block_hi(0), block_lo(1))};
  std::array<int, 8> outer_ids{};
  for (size_t k = 0; k < 8; ++k) {
    int found = -1;
    for (const Vertex& v : vertices) {
      if ((v.coords - ring_outer[k]).norm() < 1e-12) {
        found = v.id;
        break;
      }
    }
    if (found < 0) throw Error("internal origin-fan error: missing block boundary node");
    outer_ids[k] = found;
  }
  int origin_id = -1;
  for (const Vertex& v : vertices) {
    if (v.coords.isZero(0.0)) origin_id = v.id;
  }
  if (origin_id < 0) throw Error("internal origin-fan error: missing origin vertex");

  // Inner ring on a circle, each vertex on the angular bisector of two
  // consecutive boundary nodes; the offset breaks edge/flow alignment.
  const double r0 =
      0.45 * std::min(std::min(block_hi(0), -block_lo(0)), std::min(block_hi(1), -block_lo(1)));
  std::array<int, 8> inner_ids{};
  for (size_t k = 0; k < 8; ++k) {
    const double a0 = std::atan2(ring_outer[k].y(), ring_outer[k].x());
    const Eigen::Vector2d& nxt = ring_outer[(k + 1) % 8];
    double a1 = std::atan2(nxt.y(), nxt.x());
    while (a1 < a0) a1 += 2.0 * M_PI;
    const double mid = 0.5 * (a0 + a1);
    Eigen::VectorXd c(2);
    c << r0 * std::cos(mid), r0 * std::sin(mid);
    inner_ids[k] = static_cast<int>(vertices.size());
    vertices.push_back(Vertex{inner_ids[k], c});
  }

  // Fan around the origin plus the zig-zag strip out to the block boundary.
  for (int k = 0; k < 8; ++k) {
    simplexes.push_back(Simplex{{origin_id, inner_ids[static_cast<size_t>(k)],
                                 inner_ids[static_cast<size_t>((k + 1) % 8)]},
                                true});
  }
  for (int k = 0; k < 8; ++k) {
    const int sq0 = outer_ids[static_cast<size_t>(k)];
    const int sq1 = outer_ids[static_cast<size_t>((k + 1) % 8)];
    const int r0k = inner_ids[static_cast<size_t>(k)];
    const int r1k = inner_ids[static_cast<size_t>((k + 1) % 8)];
    simplexes.push_back(Simplex{{sq0, r0k, sq1}, false});
    simplexes.push_back(Simplex{{r0k, r1k, sq1}, false});
  }

  return Triangulation(2, std::move(vertices), std::move(simplexes));
}

Triangulation build_annulus(const Box& box, int divisions_per_axis, double epsilon,
                            int boundary_segments) {
  const int n = box.dim();
  if (!box.contains_origin_strictly()) {
    throw InvalidRegionError("box must contain the origin strictly in its interior");
  }
  if (!(epsilon > 0.0)) throw InvalidRegionError("annulus hole radius must be positive");
  if (!(epsilon < 0.5 * box.inscribed_radius())) {
    throw InvalidRegionError("annulus hole radius too large for the box");
  }

  if (n == 1) {
    // Two interval chains [lo, -eps] and [eps, hi].
    std::vector<Vertex> vertices;
    std::vector<Simplex> simplexes;
    auto chain = [&](double a, double b) {
      const int segs = std::max(1, divisions_per_axis);
      const int first = static_cast<int>(vertices.size());
      for (int i = 0; i <= segs; ++i) {
        double t = a + (b - a) * i / segs;
        if (i == segs) t = b;
        Eigen::VectorXd c(1);
        c(0) = t;
        vertices.push_back(Vertex{static_cast<int>(vertices.size()), c});
      }
      for (int i = 0; i < segs; ++i) {
        simplexes.push_back(Simplex{{first + i, first + i + 1}, false});
      }
    };
    chain(box.lo(0), -epsilon);
    chain(epsilon, box.hi(0));
    return Triangulation(1, std::move(vertices), std::move(simplexes), epsilon);
  }

  if (n != 2) {
    throw InvalidRegionError("annulus meshes are implemented for n = 1 and n = 2");
  }
  if (boundary_segments < 8) {
    throw InvalidRegionError("annulus needs at least 8 boundary segments");
  }

  // Ring construction: S spokes from the inscribed eps-polygon out to the box
  // perimeter, K radial layers, two triangles per quad. The spokes follow the
  // box's own perimeter points (corners included) so the outer ring is the
  // box boundary exactly.
  const int per_edge = std::max(2, (boundary_segments + 3) / 4);
  const int S = 4 * per_edge;
  const int K = std::max(1, divisions_per_axis);

  std::vector<Eigen::Vector2d> rim;
  rim.reserve(static_cast<size_t>(S));
  const double x0 = box.lo(0), x1 = box.hi(0), y0 = box.lo(1), y1 = box.hi(1);
  for (int i = 0; i < per_edge; ++i) rim.emplace_back(x1, y0 + (y1 - y0) * i / per_edge);
  for (int i = 0; i < per_edge; ++i) rim.emplace_back(x1 - (x1 - x0) * i / per_edge, y1);
  for (int i = 0; i < per_edge; ++i) rim.emplace_back(x0, y1 - (y1 - y0) * i / per_edge);
  for (int i = 0; i < per_edge; ++i) rim.emplace_back(x0 + (x1 - x0) * i / per_edge, y0);

  std::vector<Vertex> vertices;
  vertices.reserve(static_cast<size_t>(S) * (static_cast<size_t>(K) + 1));
  for (int r = 0; r <= K; ++r) {
    for (int i = 0; i < S; ++i) {
      const double theta = std::atan2(rim[static_cast<size_t>(i)].y(), rim[static_cast<size_t>(i)].x());
      Eigen::Vector2d inner(epsilon * std::cos(theta), epsilon * std::sin(theta));
      Eigen::Vector2d p = inner + (rim[static_cast<size_t>(i)] - inner) * (static_cast<double>(r) / K);
      if (r == 0) p = inner;  // exactly on the sphere
      Eigen::VectorXd c(2);
      c << p.x(), p.y();
      vertices.push_back(Vertex{static_cast<int>(vertices.size()), c});
    }
  }

  auto ring_id = [S](int r, int i) { return r * S + ((i % S) + S) % S; };
  std::vector<Simplex> simplexes;
  simplexes.reserve(static_cast<size_t>(2 * S * K));
  for (int r = 0; r < K; ++r) {
    for (int i = 0; i < S; ++i) {
      simplexes.push_back(Simplex{{ring_id(r, i), ring_id(r + 1, i), ring_id(r + 1, i + 1)}, false});
      simplexes.push_back(Simplex{{ring_id(r, i), ring_id(r + 1, i + 1), ring_id(r, i + 1)}, false});
    }
  }

  return Triangulation(2, std::move(vertices), std::move(simplexes), epsilon);
}

Triangulation refine(const Triangulation& tri) {
  const int n = tri.dim();
  const std::optional<double> hole = tri.hole_radius();
  std::vector<Vertex> vertices = tri.vertices();
  std::map<std::pair<int, int>, int> midpoint_ids;

  auto on_sphere = [&](int vid) {
    return hole && std::abs(vertices[static_cast<size_t>(vid)].coords.norm() - *hole) <= 1e-9;
  };
  auto midpoint = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint_ids.find(key);
    if (it != midpoint_ids.end()) return it->second;
    Eigen::VectorXd c =
        0.5 * (vertices[static_cast<size_t>(a)].coords + vertices[static_cast<size_t>(b)].coords);
    if (on_sphere(a) && on_sphere(b) && c.norm() > 0.0) {
      c *= *hole / c.norm();  // ring midpoints go back onto the sphere
    }
    for (int i = 0; i < c.size(); ++i) {
      if (std::abs(c(i)) < kOriginSnap) c(i) = 0.0;
    }
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(Vertex{id, c});
    midpoint_ids.emplace(key, id);
    return id;
  };

  // Children of the reference Kuhn simplex scaled by two: lattice path
  // simplexes that respect the ordering cone. Computed once per dimension;
  // each child vertex is encoded as a (j, k) vertex/midpoint pair.
  const auto perms = permutations(n);
  std::vector<std::vector<std::pair<int, int>>> child_patterns;
  {
    std::vector<std::vector<int>> cells;
    std::vector<int> z(static_cast<size_t>(n), 0);
    for (long c = 0; c < (1L << n); ++c) {
      for (int a = 0; a < n; ++a) z[static_cast<size_t>(a)] = static_cast<int>((c >> a) & 1);
      cells.push_back(z);
    }
    auto ordered = [&](const std::vector<int>& y) {
      for (int a = 0; a + 1 < n; ++a) {
        if (y[static_cast<size_t>(a)] < y[static_cast<size_t>(a) + 1]) return false;
      }
      return y[0] <= 2 && y[static_cast<size_t>(n) - 1] >= 0;
    };
    auto vertex_pair = [&](const std::vector<int>& y) {
      // y (in halves of the unit ordering coordinates) -> barycentric support.
      // lambda_j = (y_j - y_{j+1}) / 2 with y_0 = 2, y_{n+1} = 0.
      std::vector<int> lam(static_cast<size_t>(n) + 1);
      lam[0] = 2 - y[0];
      for (int j = 1; j < n; ++j) lam[static_cast<size_t>(j)] = y[static_cast<size_t>(j) - 1] - y[static_cast<size_t>(j)];
      lam[static_cast<size_t>(n)] = y[static_cast<size_t>(n) - 1];
      int first = -1, second = -1;
      for (int j = 0; j <= n; ++j) {
        if (lam[static_cast<size_t>(j)] == 2) return std::pair<int, int>(j, j);
        if (lam[static_cast<size_t>(j)] == 1) (first < 0 ? first : second) = j;
      }
      return std::pair<int, int>(first, second);
    };
    for (const auto& cz : cells) {
      for (const auto& p : perms) {
        std::vector<std::vector<int>> ys;
        std::vector<int> y = cz;
        ys.push_back(y);
        for (int j = 0; j < n; ++j) {
          y[static_cast<size_t>(p[static_cast<size_t>(j)])] += 1;
          ys.push_back(y);
        }
        bool ok = true;
        for (const auto& yy : ys) ok = ok && ordered(yy);
        if (!ok) continue;
        std::vector<std::pair<int, int>> pattern;
        pattern.reserve(ys.size());
        for (const auto& yy : ys) pattern.push_back(vertex_pair(yy));
        child_patterns.push_back(std::move(pattern));
      }
    }
    // Exactly 2^n children tile the doubled simplex.
    if (static_cast<long>(child_patterns.size()) != (1L << n)) {
      throw Error("internal refinement pattern error");
    }
  }

  std::vector<Simplex> simplexes;
  simplexes.reserve(tri.simplexes().size() * static_cast<size_t>(1L << n));
  for (const Simplex& parent : tri.simplexes()) {
    // Children are generated against id-sorted parent vertices so shared
    // faces split identically on both sides.
    std::vector<int> pv = parent.verts;
    std::sort(pv.begin(), pv.end());
    for (const auto& pattern : child_patterns) {
      Simplex child;
      child.verts.reserve(static_cast<size_t>(n) + 1);
      for (const auto& [j, k] : pattern) {
        child.verts.push_back(j == k ? pv[static_cast<size_t>(j)]
                                     : midpoint(pv[static_cast<size_t>(j)], pv[static_cast<size_t>(k)]));
      }
      normalize_origin_order(child, vertices);
      simplexes.push_back(std::move(child));
    }
  }

  return Triangulation(n, std::move(vertices), std::move(simplexes), hole);
}

MeshValidation validate(const Triangulation& tri, int coverage_samples, std::uint64_t seed) {
  MeshValidation report;
  const int n = tri.dim();

  for (int i = 0; i < tri.num_simplexes(); ++i) {
    try {
      tri.vertex_matrix(i);
    } catch (const DegenerateSimplexError&) {
      report.affine_independence_failures.push_back("simplex " + std::to_string(i));
    }
    const Simplex& s = tri.simplex(i);
    bool has_origin = false;
    int origin_pos = -1;
    for (int j = 0; j <= n; ++j) {
      if (tri.corner(i, j).isZero(0.0)) {
        has_origin = true;
        origin_pos = j;
      }
    }
    if (has_origin != s.contains_origin || (has_origin && origin_pos != 0)) {
      report.origin_ordering_violations.push_back("simplex " + std::to_string(i));
    }
  }

  // Coverage: sampled points of the declared region (minus the hole) must
  // locate successfully.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Box& bb = tri.bounding_box();
  int missed = 0;
  for (int k = 0; k < coverage_samples; ++k) {
    Eigen::VectorXd x(n);
    for (int a = 0; a < n; ++a) x(a) = bb.lo(a) + unif(rng) * (bb.hi(a) - bb.lo(a));
    if (tri.hole_radius() && x.norm() <= *tri.hole_radius()) continue;
    if (!tri.try_locate(x)) ++missed;
  }
  if (missed > 0) {
    report.coverage_gaps.push_back(std::to_string(missed) + " of " +
                                   std::to_string(coverage_samples) + " samples not located");
  }

  // Face conformity, two checks: (a) every (n-1)-face is shared by at most
  // two simplexes, (b) no vertex lies inside another simplex without being
  // one of its vertices (hanging node).
  std::map<std::vector<int>, int> face_count;
  for (const Simplex& s : tri.simplexes()) {
    for (int drop = 0; drop <= n; ++drop) {
      std::vector<int> face;
      for (int j = 0; j <= n; ++j) {
        if (j != drop) face.push_back(s.verts[static_cast<size_t>(j)]);
      }
      std::sort(face.begin(), face.end());
      ++face_count[face];
    }
  }
  for (const auto& [face, count] : face_count) {
    if (count > 2) {
      std::ostringstream os;
      os << "face {";
      for (size_t i = 0; i < face.size(); ++i) os << (i ? "," : "") << face[i];
      os << "} shared by " << count << " simplexes";
      report.face_intersection_violations.push_back(os.str());
    }
  }
  std::vector<int> by_x(static_cast<size_t>(tri.num_vertices()));
  std::iota(by_x.begin(), by_x.end(), 0);
  std::sort(by_x.begin(), by_x.end(), [&](int a, int b) {
    return tri.vertex(a).coords(0) < tri.vertex(b).coords(0);
  });
  for (int i = 0; i < tri.num_simplexes(); ++i) {
    const Simplex& si = tri.simplex(i);
    const Box sb = tri.simplex_box(i);
    auto lo_it = std::lower_bound(by_x.begin(), by_x.end(), sb.lo(0) - 1e-12,
                                  [&](int a, double v) { return tri.vertex(a).coords(0) < v; });
    for (auto it = lo_it; it != by_x.end(); ++it) {
      const Vertex& v = tri.vertex(*it);
      if (v.coords(0) > sb.hi(0) + 1e-12) break;
      bool own = std::find(si.verts.begin(), si.verts.end(), v.id) != si.verts.end();
      if (own) continue;
      bool inside_box = true;
      for (int a = 1; a < n; ++a) {
        if (v.coords(a) < sb.lo(a) - 1e-12 || v.coords(a) > sb.hi(a) + 1e-12) inside_box = false;
      }
      if (!inside_box) continue;
      Eigen::MatrixXd xinv;
      try {
        xinv = tri.vertex_matrix(i).second;
      } catch (const DegenerateSimplexError&) {
        continue;
      }
      Eigen::VectorXd lam_tail = xinv.transpose() * (v.coords - tri.corner(i, 0));
      const double lam0 = 1.0 - lam_tail.sum();
      if (lam0 > 1e-9 && (lam_tail.array() > 1e-9).all()) {
        report.face_intersection_violations.push_back(
            "vertex " + std::to_string(v.id) + " inside simplex " + std::to_string(i));
      } else if (lam0 > -1e-9 && (lam_tail.array() > -1e-9).all()) {
        report.face_intersection_violations.push_back(
            "vertex " + std::to_string(v.id) + " hangs on a face of simplex " + std::to_string(i));
      }
    }
  }

  return report;
}

std::string Triangulation::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["n"] = n_;
  auto& verts = j["vertices"] = nlohmann::ordered_json::array();
  for (const Vertex& v : vertices_) {
    nlohmann::ordered_json c = nlohmann::ordered_json::array();
    for (int a = 0; a < n_; ++a) c.push_back(v.coords(a));
    verts.push_back(std::move(c));
  }
  auto& simps = j["simplexes"] = nlohmann::ordered_json::array();
  for (const Simplex& s : simplexes_) {
    nlohmann::ordered_json e;
    e["verts"] = s.verts;
    e["origin"] = s.contains_origin;
    simps.push_back(std::move(e));
  }
  return j.dump();
}

Triangulation Triangulation::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("version", 0) != 1) throw ConfigError("unsupported mesh document version");
  const int n = j.at("n").get<int>();
  std::vector<Vertex> vertices;
  for (const auto& c : j.at("vertices")) {
    Eigen::VectorXd x(n);
    for (int a = 0; a < n; ++a) x(a) = c.at(static_cast<size_t>(a)).get<double>();
    vertices.push_back(Vertex{static_cast<int>(vertices.size()), x});
  }
  std::vector<Simplex> simplexes;
  for (const auto& e : j.at("simplexes")) {
    Simplex s;
    s.verts = e.at("verts").get<std::vector<int>>();
    s.contains_origin = e.at("origin").get<bool>();
    simplexes.push_back(std::move(s));
  }
  return Triangulation(n, std::move(vertices), std::move(simplexes));
}

}  // namespace gaincert
