#include "gaincert/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gaincert {

DecisionLayout DecisionLayout::make(const Triangulation& tri, bool hybrid) {
  DecisionLayout layout;
  layout.n = tri.dim();
  layout.hybrid = hybrid;
  layout.alpha = 0;
  int next = 1;
  layout.v.resize(static_cast<size_t>(tri.num_vertices()));
  for (int i = 0; i < tri.num_vertices(); ++i) layout.v[static_cast<size_t>(i)] = next++;
  layout.l_start.resize(static_cast<size_t>(tri.num_simplexes()));
  for (int i = 0; i < tri.num_simplexes(); ++i) {
    layout.l_start[static_cast<size_t>(i)] = next;
    next += layout.n;
  }
  if (hybrid) {
    const int tri_count = layout.n * (layout.n + 1) / 2;
    layout.p_entries.resize(static_cast<size_t>(tri_count));
    for (int k = 0; k < tri_count; ++k) layout.p_entries[static_cast<size_t>(k)] = next++;
    layout.l_p = next++;
  }
  layout.num_vars = next;
  return layout;
}

VarId DecisionLayout::p_var(int r, int c) const {
  if (r < c) std::swap(r, c);
  const int offset = c * n - c * (c - 1) / 2;
  return p_entries.at(static_cast<size_t>(offset + (r - c)));
}

void AffineExpr::add(VarId var, double coef) {
  if (coef == 0.0) return;
  terms.emplace_back(var, coef);
}

void AffineExpr::simplify() {
  std::sort(terms.begin(), terms.end());
  std::vector<std::pair<VarId, double>> out;
  for (const auto& [var, coef] : terms) {
    if (!out.empty() && out.back().first == var) {
      out.back().second += coef;
    } else {
      out.emplace_back(var, coef);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const auto& t) { return t.second == 0.0; }),
            out.end());
  terms = std::move(out);
}

double AffineExpr::eval(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const auto& [var, coef] : terms) v += coef * x(var);
  return v;
}

AffineMatrix::AffineMatrix(int dim) : dim_(dim), lower_(static_cast<size_t>(dim) * (dim + 1) / 2) {}

namespace {
size_t lower_index(int dim, int r, int c) {
  if (r < c) std::swap(r, c);
  return static_cast<size_t>(c) * dim - static_cast<size_t>(c) * (c - 1) / 2 +
         static_cast<size_t>(r - c);
}
}  // namespace

AffineExpr& AffineMatrix::at(int r, int c) { return lower_[lower_index(dim_, r, c)]; }
const AffineExpr& AffineMatrix::at(int r, int c) const { return lower_[lower_index(dim_, r, c)]; }

Eigen::MatrixXd AffineMatrix::eval(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out(dim_, dim_);
  for (int c = 0; c < dim_; ++c) {
    for (int r = c; r < dim_; ++r) {
      out(r, c) = at(r, c).eval(x);
      out(c, r) = out(r, c);
    }
  }
  return out;
}

void AffineMatrix::simplify() {
  for (AffineExpr& e : lower_) e.simplify();
}

Eigen::MatrixXd ErrorBoundMatrix::dense() const {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(1 + identity_block_dim, 1 + identity_block_dim);
  e(0, 0) = scalar;
  e.bottomRightCorner(identity_block_dim, identity_block_dim) =
      0.5 * Eigen::MatrixXd::Identity(identity_block_dim, identity_block_dim);
  return e;
}

ErrorBoundMatrix error_bound_matrix(double beta, const Eigen::VectorXd& mus, double c_j) {
  if (beta < 0.0 || c_j < 0.0 || (mus.size() > 0 && mus.minCoeff() < 0.0)) {
    throw InvalidBoundError("error bound ingredients must be nonnegative");
  }
  ErrorBoundMatrix e;
  e.identity_block_dim = static_cast<int>(mus.size());
  e.scalar = 0.5 * (beta * c_j + mus.squaredNorm() * c_j * c_j);
  return e;
}

AffineMatrix gain_lmi_block(const SystemModel& model, const Triangulation& tri,
                            const BoundSet& bounds, int simplex_id, int j,
                            const DecisionLayout& layout) {
  if (!layout.hybrid && !model.has_zero_B()) {
    throw ModeMismatchError("CPA-only gain constraints require B = 0");
  }
  const int n = tri.dim();
  const int m = model.input_dim();
  const int p = model.output_dim();
  const Simplex& simplex = tri.simplex(simplex_id);
  const Eigen::VectorXd& x = tri.corner(simplex_id, j);
  const Eigen::MatrixXd x_inv_t = tri.vertex_matrix(simplex_id).second.transpose();

  const double c = simplex.contains_origin ? shape_constant_origin(tri, simplex_id, j)
                                           : shape_constant(tri, simplex_id, j);
  const double beta = bounds.beta.at(static_cast<size_t>(simplex_id));
  const Eigen::VectorXd& rho = bounds.rho.at(static_cast<size_t>(simplex_id));
  const Eigen::VectorXd& mu = bounds.mu.at(static_cast<size_t>(simplex_id));

  AffineMatrix out(1 + 2 * m + p);

  // grad V' w expands through X_i^{-1} into vertex-value variables.
  auto add_gradv_dot = [&](AffineExpr& expr, const Eigen::VectorXd& w) {
    const Eigen::VectorXd q = x_inv_t * w;
    for (int k = 1; k <= n; ++k) {
      expr.add(layout.v[static_cast<size_t>(simplex.verts[static_cast<size_t>(k)])], q(k - 1));
    }
    expr.add(layout.v[static_cast<size_t>(simplex.verts[0])], -q.sum());
  };

  // (1,1): grad V' f + 1/2 (beta c 1'l + sum_a rho_a^2 c^2)
  AffineExpr& top = out.at(0, 0);
  add_gradv_dot(top, model.f(x));
  for (int k = 0; k < n; ++k) top.add(layout.l_var(simplex_id, k), 0.5 * beta * c);
  top.constant += 0.5 * rho.squaredNorm() * c * c;

  // (2,1): (B + g(x))' grad V, one row per input.
  const Eigen::MatrixXd gin = model.input_matrix(x);
  for (int k = 0; k < m; ++k) {
    add_gradv_dot(out.at(1 + k, 0), gin.col(k));
  }

  // (3,1): h(x)
  const Eigen::VectorXd hx = model.h(x);
  for (int a = 0; a < p; ++a) out.at(1 + m + a, 0).constant = hx(a);

  // (4,1): (1'l) c [mu_1 ... mu_m]'
  for (int k = 0; k < m; ++k) {
    AffineExpr& e = out.at(1 + m + p + k, 0);
    for (int comp = 0; comp < n; ++comp) e.add(layout.l_var(simplex_id, comp), c * mu(k));
  }

  // Diagonals: -2 alpha I + 1/2 I, -(3/2) I, -2 I.
  for (int k = 0; k < m; ++k) {
    out.at(1 + k, 1 + k).add(layout.alpha, -2.0);
    out.at(1 + k, 1 + k).constant += 0.5;
  }
  for (int a = 0; a < p; ++a) out.at(1 + m + a, 1 + m + a).constant = -1.5;
  for (int k = 0; k < m; ++k) out.at(1 + m + p + k, 1 + m + p + k).constant = -2.0;

  out.simplify();
  return out;
}

AffineMatrix origin_lmi_block(const SystemModel& model, double epsilon, const BoundSet& bounds,
                              const DecisionLayout& layout) {
  if (!layout.hybrid) throw ModeMismatchError("origin-ball constraints need hybrid mode");
  if (!(epsilon > 0.0)) throw InvalidRegionError("epsilon must be positive");
  if (!bounds.has_origin_ball) throw InvalidBoundError("bounds lack origin-ball data");

  const int n = model.state_dim();
  const int m = model.input_dim();
  const int p = model.output_dim();
  const Eigen::MatrixXd& jf = model.jac_f0();
  const Eigen::MatrixXd& jh = model.jac_h0();
  const Eigen::MatrixXd& B = model.B();

  // Taylor-remainder magnitudes on the ball. The quadratic (J_g) and cubic
  // (Hessian-of-g) parts of g'Px and the quadratic part of h feed Young
  // splits whose slack is sized by the data itself, so all of it vanishes
  // for linear systems:
  //   || g(x)'Px ||   <= l_p ||x|| (d_g + d_mu / 2),
  //   || h(x) - J_h x || <= delta_h ||x||,   2 x'P r_f <= l_p c_f ||x||^2.
  double jg_norm_sum = 0.0;
  for (const Eigen::MatrixXd& jg : model.jac_g0()) {
    jg_norm_sum += jg.jacobiSvd().singularValues()(0);
  }
  const double c_f = epsilon * std::pow(n, 1.5) * bounds.beta_eps;
  const double d_g = epsilon * jg_norm_sum;
  const double d_mu = std::pow(n, 1.5) * std::sqrt(static_cast<double>(m)) * bounds.mu_eps *
                      epsilon * epsilon;
  const double delta_h =
      0.5 * n * std::sqrt(static_cast<double>(p)) * bounds.rho_eps * epsilon;
  const double young = d_g + 0.5 * d_mu;  // slack added next to -alpha/2
  const double t_h = std::min(1.0 / 3.0, delta_h);
  const double rho_term = delta_h > 0.0 ? 0.5 * (1.0 + 1.0 / t_h) * delta_h * delta_h : 0.0;
  const double diag_h = 2.0 / (1.0 + t_h);
  const double diag_jg = d_g > 0.0 ? d_g : 1.0;
  const double diag_mu = d_mu > 0.0 ? 2.0 * d_mu : 2.0;

  AffineMatrix out(3 * n + m + p);

  // omega = P J_f + J_f' P + (l_p c_f + rho_term) I
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c <= r; ++c) {
      AffineExpr& e = out.at(r, c);
      for (int k = 0; k < n; ++k) {
        e.add(layout.p_var(r, k), jf(k, c));
        e.add(layout.p_var(k, c), jf(k, r));
      }
      if (r == c) {
        e.add(layout.l_p, c_f);
        e.constant += rho_term;
      }
    }
  }

  // (2,1) = P B
  for (int k = 0; k < m; ++k) {
    for (int r = 0; r < n; ++r) {
      AffineExpr& e = out.at(n + k, r);
      for (int jcol = 0; jcol < n; ++jcol) e.add(layout.p_var(r, jcol), B(jcol, k));
    }
  }

  // (3,1) = J_h(0)'
  for (int a = 0; a < p; ++a) {
    for (int r = 0; r < n; ++r) out.at(n + m + a, r).constant = jh(a, r);
  }

  // (4,1) and (5,1): l_p-scaled norm channels for the J_g and g-Hessian parts.
  for (int r = 0; r < n; ++r) {
    out.at(n + m + p + r, r).add(layout.l_p, d_g);
    out.at(2 * n + m + p + r, r).add(layout.l_p, d_mu);
  }

  // Diagonals.
  for (int k = 0; k < m; ++k) {
    out.at(n + k, n + k).add(layout.alpha, -0.5);
    out.at(n + k, n + k).constant += young;
  }
  for (int a = 0; a < p; ++a) out.at(n + m + a, n + m + a).constant = -diag_h;
  for (int r = 0; r < n; ++r) {
    out.at(n + m + p + r, n + m + p + r).constant = -diag_jg;
    out.at(2 * n + m + p + r, 2 * n + m + p + r).constant = -diag_mu;
  }

  out.simplify();
  return out;
}

std::vector<AffineExpr> gradient_bound_constraints(int simplex_id, const DecisionLayout& layout,
                                                   const Triangulation& tri) {
  const int n = tri.dim();
  const Simplex& simplex = tri.simplex(simplex_id);
  const Eigen::MatrixXd x_inv = tri.vertex_matrix(simplex_id).second;

  std::vector<AffineExpr> out;
  out.reserve(static_cast<size_t>(2 * n));
  // (grad V_i)_k = row k of X^{-1} Wbar; emit l_i^(k) +- (grad V_i)_k >= 0.
  for (int k = 0; k < n; ++k) {
    for (double sign : {+1.0, -1.0}) {
      AffineExpr e;
      e.add(layout.l_var(simplex_id, k), 1.0);
      for (int jj = 1; jj <= n; ++jj) {
        const double coef = sign * x_inv(k, jj - 1);
        e.add(layout.v[static_cast<size_t>(simplex.verts[static_cast<size_t>(jj)])], -coef);
        e.add(layout.v[static_cast<size_t>(simplex.verts[0])], coef);
      }
      e.simplify();
      out.push_back(std::move(e));
    }
  }
  return out;
}

ConstraintSet side_constraints(const DecisionLayout& layout, const AssemblyOptions& opts) {
  ConstraintSet set;
  {
    AffineExpr alpha_floor;
    alpha_floor.add(layout.alpha, 1.0);
    alpha_floor.constant = -opts.alpha_min;
    set.linear.push_back(std::move(alpha_floor));
  }
  for (VarId vv : layout.v) {
    AffineExpr e;
    e.add(vv, 1.0);
    set.linear.push_back(std::move(e));
  }
  if (layout.hybrid) {
    const int n = layout.n;
    // delta I - P <= 0
    AffineMatrix p_floor(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c <= r; ++c) {
        p_floor.at(r, c).add(layout.p_var(r, c), -1.0);
        if (r == c) p_floor.at(r, c).constant = opts.p_min_eig;
      }
    }
    set.psd.push_back(std::move(p_floor));
    // P - l_p I <= 0   (valid operator-norm bound since P is PSD)
    AffineMatrix p_cap(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c <= r; ++c) {
        p_cap.at(r, c).add(layout.p_var(r, c), 1.0);
        if (r == c) p_cap.at(r, c).add(layout.l_p, -1.0);
      }
    }
    set.psd.push_back(std::move(p_cap));
  }
  return set;
}

std::string dump_constraints(const ConstraintSet& set) {
  std::ostringstream os;
  os.precision(17);
  int cid = 0;
  auto emit_expr = [&os](int id, int r, int c, const AffineExpr& e) {
    if (e.constant != 0.0) os << id << " " << r << " " << c << " -1 " << e.constant << "\n";
    for (const auto& [var, coef] : e.terms) {
      os << id << " " << r << " " << c << " " << var << " " << coef << "\n";
    }
  };
  for (const AffineExpr& e : set.linear) {
    emit_expr(cid, 0, 0, e);
    ++cid;
  }
  for (const AffineMatrix& mat : set.psd) {
    for (int c = 0; c < mat.dim(); ++c) {
      for (int r = c; r < mat.dim(); ++r) emit_expr(cid, r, c, mat.at(r, c));
    }
    ++cid;
  }
  return os.str();
}

}  // namespace gaincert
