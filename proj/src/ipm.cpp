#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#include "gaincert/conic.hpp"

// Homogeneous self-dual interior-point method for
//     minimize c'x   s.t.   Gx + s = h,   s in K,
// with K a product of a nonnegative cone and small PSD cones in svec
// coordinates. Nesterov-Todd scalings, Mehrotra predictor-corrector, and a
// sparse Schur-complement KKT solve (H = G' (W'W)^{-1} G, Cholesky'd once per
// iteration). Follows the ECOS iteration layout with the second-order cone
// machinery replaced by semidefinite-cone scalings.

namespace gaincert {

namespace {

constexpr double kStepMin = 1e-6;
constexpr double kStepMax = 0.999;
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 1.0;
constexpr double kGammaStep = 0.99;
constexpr double kSafeguard = 5.0;
constexpr int kEquilIters = 3;
constexpr int kRefineRounds = 4;
constexpr int kIterCap = 100;

struct PsdCone {
  int dim = 0;
  long row = 0;  // first row in the cone vector
  int len = 0;   // svec length
  // NT scaling state.
  Eigen::MatrixXd r, rti;      // R, R^{-T}
  Eigen::MatrixXd w_inv;       // (R R')^{-1} = rti rti'
  Eigen::MatrixXd w_mat;       // R R'
  Eigen::VectorXd lambda_diag; // scaled point (diagonal entries)
};

struct Iterate {
  Eigen::VectorXd x, s, z;
  double tau = 1.0, kap = 1.0;
  // statistics of this iterate
  double gap = 0.0, mu = 0.0, pcost = 0.0, dcost = 0.0;
  double pres = 0.0, dres = 0.0, kapovert = 0.0;
  std::optional<double> relgap, pinfres, dinfres;
  int iter = 0;
};

class Ipm {
 public:
  Ipm(const ConicProgram& prog, const SolveOptions& opts) : opts_(opts) {
    G_ = prog.G;
    c_ = prog.c;
    h_ = prog.h;
    nvar_ = prog.num_vars;
    nonneg_ = prog.num_nonneg;
    long row = nonneg_;
    degree_ = static_cast<double>(nonneg_);
    for (int dim : prog.psd_dims) {
      PsdCone cone;
      cone.dim = dim;
      cone.row = row;
      cone.len = svec_len(dim);
      row += cone.len;
      degree_ += dim;
      cones_.push_back(std::move(cone));
    }
    nrows_ = row;
    equilibrate();
    Gt_ = G_.transpose();
    build_pattern();
  }

  SolverResult run();

 private:
  // --- cone algebra on full-length vectors -------------------------------
  double cone_min_residual(const Eigen::VectorXd& v) const {
    double worst = std::numeric_limits<double>::infinity();
    if (nonneg_ > 0) worst = std::min(worst, v.head(nonneg_).minCoeff());
    for (const PsdCone& cone : cones_) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(smat(v.segment(cone.row, cone.len), cone.dim),
                                                         Eigen::EigenvaluesOnly);
      worst = std::min(worst, eig.eigenvalues().minCoeff());
    }
    return worst;
  }

  Eigen::VectorXd cone_identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nrows_);
    e.head(nonneg_).setOnes();
    for (const PsdCone& cone : cones_) {
      e.segment(cone.row, cone.len) = svec(Eigen::MatrixXd::Identity(cone.dim, cone.dim));
    }
    return e;
  }

  void bring_to_cone(const Eigen::VectorXd& raw, Eigen::VectorXd& out) const {
    const double res = cone_min_residual(raw);
    const double shift = res <= kGammaStep ? 1.0 + std::max(-res, -kGammaStep) : 0.0;
    out = raw;
    if (shift > 0.0) {
      out.head(nonneg_).array() += shift;
      for (const PsdCone& cone : cones_) {
        Eigen::VectorXd seg = out.segment(cone.row, cone.len);
        out.segment(cone.row, cone.len) =
            seg + shift * svec(Eigen::MatrixXd::Identity(cone.dim, cone.dim));
      }
    }
  }

  bool update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    if (nonneg_ > 0) {
      if (s.head(nonneg_).minCoeff() <= 0.0 || z.head(nonneg_).minCoeff() <= 0.0) return false;
      lp_v_ = s.head(nonneg_).cwiseQuotient(z.head(nonneg_));
      lp_w_ = lp_v_.cwiseSqrt();
      lambda_.head(nonneg_) = s.head(nonneg_).cwiseProduct(z.head(nonneg_)).cwiseSqrt();
    }
    for (PsdCone& cone : cones_) {
      const Eigen::MatrixXd S = smat(s.segment(cone.row, cone.len), cone.dim);
      const Eigen::MatrixXd Z = smat(z.segment(cone.row, cone.len), cone.dim);
      Eigen::LLT<Eigen::MatrixXd> ls(S), lz(Z);
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      const Eigen::MatrixXd Ls = ls.matrixL();
      const Eigen::MatrixXd Lz = lz.matrixL();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls,
                                            Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::VectorXd sig = svd.singularValues();
      if (sig.minCoeff() <= 0.0) return false;
      const Eigen::VectorXd isqrt = sig.cwiseSqrt().cwiseInverse();
      cone.r = Ls * svd.matrixV() * isqrt.asDiagonal();
      cone.rti = Lz * svd.matrixU() * isqrt.asDiagonal();
      cone.w_inv = cone.rti * cone.rti.transpose();
      cone.w_mat = cone.r * cone.r.transpose();
      cone.lambda_diag = sig;
      Eigen::MatrixXd lam = sig.asDiagonal();
      lambda_.segment(cone.row, cone.len) = svec(lam);
    }
    return true;
  }

  // lambda = W z and the scaled-direction maps.
  void scale_w(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {  // W u
    out.head(nonneg_) = lp_w_.cwiseProduct(u.head(nonneg_));
    for (const PsdCone& cone : cones_) {
      const Eigen::MatrixXd U = smat(u.segment(cone.row, cone.len), cone.dim);
      out.segment(cone.row, cone.len) = svec(cone.r.transpose() * U * cone.r);
    }
  }
  void scale_wt(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {  // W' u
    out.head(nonneg_) = lp_w_.cwiseProduct(u.head(nonneg_));
    for (const PsdCone& cone : cones_) {
      const Eigen::MatrixXd U = smat(u.segment(cone.row, cone.len), cone.dim);
      out.segment(cone.row, cone.len) = svec(cone.r * U * cone.r.transpose());
    }
  }
  void apply_wtw_inv(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    out.head(nonneg_) = u.head(nonneg_).cwiseQuotient(lp_v_);
    for (const PsdCone& cone : cones_) {
      const Eigen::MatrixXd U = smat(u.segment(cone.row, cone.len), cone.dim);
      out.segment(cone.row, cone.len) = svec(cone.w_inv * U * cone.w_inv);
    }
  }
  void apply_wtw(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    out.head(nonneg_) = u.head(nonneg_).cwiseProduct(lp_v_);
    for (const PsdCone& cone : cones_) {
      const Eigen::MatrixXd U = smat(u.segment(cone.row, cone.len), cone.dim);
      out.segment(cone.row, cone.len) = svec(cone.w_mat * U * cone.w_mat);
    }
  }

  // u o v = svec((UV + VU)/2) on PSD blocks, elementwise on the LP block.
  void conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     Eigen::VectorXd& out) const {
    out.head(nonneg_) = u.head(nonneg_).cwiseProduct(v.head(nonneg_));
    for (const PsdCone& cone : cones_) {
      const Eigen::MatrixXd U = smat(u.segment(cone.row, cone.len), cone.dim);
      const Eigen::MatrixXd V = smat(v.segment(cone.row, cone.len), cone.dim);
      const Eigen::MatrixXd UV = U * V;
      out.segment(cone.row, cone.len) = svec(0.5 * (UV + UV.transpose()));
    }
  }

  // lambda \ u with the scaled point (diagonal on PSD blocks).
  void lambda_divide(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    out.head(nonneg_) = u.head(nonneg_).cwiseQuotient(lambda_.head(nonneg_));
    for (const PsdCone& cone : cones_) {
      Eigen::MatrixXd U = smat(u.segment(cone.row, cone.len), cone.dim);
      for (int i = 0; i < cone.dim; ++i) {
        for (int j = 0; j < cone.dim; ++j) {
          U(i, j) /= 0.5 * (cone.lambda_diag(i) + cone.lambda_diag(j));
        }
      }
      out.segment(cone.row, cone.len) = svec(U);
    }
  }

  // Largest step with lambda + alpha d staying in the cone, for both ds and
  // dz, also limited by tau and kappa.
  double line_search(const Eigen::VectorXd& ds, const Eigen::VectorXd& dz, double tau,
                     double dtau, double kap, double dkap) const {
    double alpha = 1.0 / kStepMin;
    if (nonneg_ > 0) {
      const double rho_min = (ds.head(nonneg_).cwiseQuotient(lambda_.head(nonneg_))).minCoeff();
      const double sig_min = (dz.head(nonneg_).cwiseQuotient(lambda_.head(nonneg_))).minCoeff();
      const double worst = std::min(rho_min, sig_min);
      if (worst < 0.0) alpha = std::min(alpha, 1.0 / (-worst));
    }
    for (const PsdCone& cone : cones_) {
      const Eigen::VectorXd inv_sqrt = cone.lambda_diag.cwiseSqrt().cwiseInverse();
      for (const Eigen::VectorXd* d : {&ds, &dz}) {
        Eigen::MatrixXd M = smat(d->segment(cone.row, cone.len), cone.dim);
        M = inv_sqrt.asDiagonal() * M * inv_sqrt.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
        const double lmin = eig.eigenvalues().minCoeff();
        if (lmin < 0.0) alpha = std::min(alpha, 1.0 / (-lmin));
      }
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
    return std::clamp(alpha, kStepMin, kStepMax);
  }

  // --- KKT ----------------------------------------------------------------
  void equilibrate();
  void build_pattern();
  bool refactorize();
  void kkt_solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& dx,
                 Eigen::VectorXd& dz) const;

  // --- iteration helpers ---------------------------------------------------
  void compute_residuals(const Iterate& it);
  void update_statistics(Iterate& it);
  enum class Verdict { kContinue, kOptimal, kPrimalInfeasible, kDualInfeasible };
  // feas_scale/gap_scale loosen the respective tolerances for the
  // reduced-accuracy exits. A stalled-but-feasible iterate is still a usable
  // point (the caller re-checks feasibility; the gap only bounds how
  // conservative the objective is), so the gap fallback is looser than the
  // feasibility one.
  Verdict check_exit(const Iterate& it, double feas_scale, double gap_scale) const;
  SolverResult finish(const Iterate& it, SolveStatus status) const;

  SolveOptions opts_;
  Eigen::SparseMatrix<double> G_, Gt_;
  Eigen::VectorXd c_, h_;
  Eigen::VectorXd col_equil_, row_equil_;
  int nvar_ = 0;
  long nrows_ = 0;
  int nonneg_ = 0;
  double degree_ = 0.0;
  std::vector<PsdCone> cones_;

  // scaling state
  Eigen::VectorXd lp_v_, lp_w_, lambda_;

  // KKT state
  Eigen::SparseMatrix<double> H_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;
  std::vector<std::vector<std::pair<int, double>>> lin_rows_;  // per nonneg row
  std::vector<std::vector<int>> lin_slots_;
  std::vector<std::vector<int>> cone_vars_;   // sorted global ids per cone
  std::vector<Eigen::MatrixXd> cone_local_;   // len x nloc per cone
  std::vector<std::vector<int>> cone_slots_;  // lower-tri slot list per cone

  // residual state
  Eigen::VectorXd rx_, rz_;
  double hresx_ = 0.0, hresz_ = 0.0, rt_ = 0.0;
  double cx_ = 0.0, hz_ = 0.0, nx_ = 0.0, nz_ = 0.0, ns_ = 0.0;
  double resx0_ = 1.0, resz0_ = 1.0;
};

void Ipm::equilibrate() {
  col_equil_ = Eigen::VectorXd::Ones(nvar_);
  row_equil_ = Eigen::VectorXd::Ones(nrows_);
  for (int pass = 0; pass < kEquilIters; ++pass) {
    Eigen::VectorXd cmax = Eigen::VectorXd::Zero(nvar_);
    Eigen::VectorXd rmax = Eigen::VectorXd::Zero(nrows_);
    for (int col = 0; col < G_.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G_, col); it; ++it) {
        const double a = std::abs(it.value());
        cmax(col) = std::max(cmax(col), a);
        rmax(it.row()) = std::max(rmax(it.row()), a);
      }
    }
    // Rows of one PSD cone share a single factor to keep the cone geometry.
    for (const PsdCone& cone : cones_) {
      const double groupmax = rmax.segment(cone.row, cone.len).maxCoeff();
      rmax.segment(cone.row, cone.len).setConstant(groupmax);
    }
    auto sqrt_or_one = [](double v) { return v < 1e-10 ? 1.0 : std::sqrt(v); };
    cmax = cmax.unaryExpr(sqrt_or_one);
    rmax = rmax.unaryExpr(sqrt_or_one);
    for (int col = 0; col < G_.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G_, col); it; ++it) {
        it.valueRef() /= cmax(col) * rmax(it.row());
      }
    }
    col_equil_ = col_equil_.cwiseProduct(cmax);
    row_equil_ = row_equil_.cwiseProduct(rmax);
  }
  c_ = c_.cwiseQuotient(col_equil_);
  h_ = h_.cwiseQuotient(row_equil_);
}

void Ipm::build_pattern() {
  // Row-major pass over G to collect per-row entries.
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<size_t>(nrows_));
  for (int col = 0; col < G_.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(G_, col); it; ++it) {
      rows[static_cast<size_t>(it.row())].emplace_back(col, it.value());
    }
  }
  lin_rows_.assign(rows.begin(), rows.begin() + nonneg_);

  cone_vars_.resize(cones_.size());
  cone_local_.resize(cones_.size());
  for (size_t k = 0; k < cones_.size(); ++k) {
    const PsdCone& cone = cones_[k];
    std::vector<int> vars;
    for (int rr = 0; rr < cone.len; ++rr) {
      for (const auto& [col, val] : rows[static_cast<size_t>(cone.row + rr)]) vars.push_back(col);
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(cone.len, static_cast<int>(vars.size()));
    for (int rr = 0; rr < cone.len; ++rr) {
      for (const auto& [col, val] : rows[static_cast<size_t>(cone.row + rr)]) {
        const int j = static_cast<int>(std::lower_bound(vars.begin(), vars.end(), col) - vars.begin());
        local(rr, j) += val;
      }
    }
    cone_vars_[k] = std::move(vars);
    cone_local_[k] = std::move(local);
  }

  // Pattern of H (lower triangle) once; per-iteration writes go through slots.
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& row : lin_rows_) {
    for (size_t a = 0; a < row.size(); ++a) {
      for (size_t b = 0; b <= a; ++b) {
        const int r = std::max(row[a].first, row[b].first);
        const int cc = std::min(row[a].first, row[b].first);
        trips.emplace_back(r, cc, 0.0);
      }
    }
  }
  for (const auto& vars : cone_vars_) {
    for (size_t a = 0; a < vars.size(); ++a) {
      for (size_t b = 0; b <= a; ++b) {
        trips.emplace_back(vars[a], vars[b], 0.0);
      }
    }
  }
  for (int i = 0; i < nvar_; ++i) trips.emplace_back(i, i, 0.0);
  H_.resize(nvar_, nvar_);
  H_.setFromTriplets(trips.begin(), trips.end());
  H_.makeCompressed();

  auto slot_of = [this](int r, int cc) {
    const int start = H_.outerIndexPtr()[cc];
    const int end = H_.outerIndexPtr()[cc + 1];
    const int* rows_ptr = H_.innerIndexPtr();
    const int* found = std::lower_bound(rows_ptr + start, rows_ptr + end, r);
    return static_cast<int>(found - rows_ptr);
  };
  lin_slots_.resize(lin_rows_.size());
  for (size_t i = 0; i < lin_rows_.size(); ++i) {
    const auto& row = lin_rows_[i];
    std::vector<int> slots;
    slots.reserve(row.size() * (row.size() + 1) / 2);
    for (size_t a = 0; a < row.size(); ++a) {
      for (size_t b = 0; b <= a; ++b) {
        slots.push_back(slot_of(std::max(row[a].first, row[b].first),
                                std::min(row[a].first, row[b].first)));
      }
    }
    lin_slots_[i] = std::move(slots);
  }
  cone_slots_.resize(cones_.size());
  for (size_t k = 0; k < cones_.size(); ++k) {
    const auto& vars = cone_vars_[k];
    std::vector<int> slots;
    slots.reserve(vars.size() * (vars.size() + 1) / 2);
    for (size_t a = 0; a < vars.size(); ++a) {
      for (size_t b = 0; b <= a; ++b) slots.push_back(slot_of(vars[a], vars[b]));
    }
    cone_slots_[k] = std::move(slots);
  }
}

bool Ipm::refactorize() {
  double* vals = H_.valuePtr();
  std::fill(vals, vals + H_.nonZeros(), 0.0);

  for (size_t i = 0; i < lin_rows_.size(); ++i) {
    const double d = 1.0 / lp_v_(static_cast<long>(i));  // z_i / s_i
    const auto& row = lin_rows_[i];
    const auto& slots = lin_slots_[i];
    size_t idx = 0;
    for (size_t a = 0; a < row.size(); ++a) {
      for (size_t b = 0; b <= a; ++b) {
        vals[slots[idx++]] += d * row[a].second * row[b].second;
      }
    }
  }
  for (size_t k = 0; k < cones_.size(); ++k) {
    const PsdCone& cone = cones_[k];
    const Eigen::MatrixXd& local = cone_local_[k];
    const int nloc = static_cast<int>(local.cols());
    Eigen::MatrixXd scaled(cone.len, nloc);
    for (int j = 0; j < nloc; ++j) {
      const Eigen::MatrixXd A = smat(local.col(j), cone.dim);
      scaled.col(j) = svec(cone.rti.transpose() * A * cone.rti);
    }
    const Eigen::MatrixXd hloc = scaled.transpose() * scaled;
    const auto& slots = cone_slots_[k];
    size_t idx = 0;
    for (int a = 0; a < nloc; ++a) {
      for (int b = 0; b <= a; ++b) vals[slots[idx++]] += hloc(a, b);
    }
  }

  // Relative per-diagonal regularization; iterative refinement against the
  // exact KKT removes the bias.
  for (int i = 0; i < nvar_; ++i) {
    double& d = H_.coeffRef(i, i);
    d += 1e-12 * std::abs(d) + 1e-30;
  }

  if (!analyzed_) {
    ldlt_.analyzePattern(H_);
    analyzed_ = true;
  }
  ldlt_.factorize(H_);
  return ldlt_.info() == Eigen::Success;
}

void Ipm::kkt_solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& dx,
                    Eigen::VectorXd& dz) const {
  Eigen::VectorXd tmp(nrows_), rhs(nvar_);
  apply_wtw_inv(bz, tmp);
  rhs = bx + Gt_ * tmp;
  dx = ldlt_.solve(rhs);
  apply_wtw_inv(G_ * dx - bz, dz);

  // Refinement against the exact augmented system; the factorization is
  // reused for the corrections. Stops early when the residual no longer
  // improves (the factorization cannot do better).
  const double rhs_scale = 1.0 + bx.lpNorm<Eigen::Infinity>() + bz.lpNorm<Eigen::Infinity>();
  double prev_err = std::numeric_limits<double>::max();
  for (int round = 0; round < kRefineRounds; ++round) {
    Eigen::VectorXd res_x = bx - Gt_ * dz;
    Eigen::VectorXd wtwdz(nrows_);
    apply_wtw(dz, wtwdz);
    Eigen::VectorXd res_z = bz - G_ * dx + wtwdz;
    const double err = res_x.lpNorm<Eigen::Infinity>() + res_z.lpNorm<Eigen::Infinity>();
    if (err < 1e-13 * rhs_scale || err > 0.5 * prev_err) break;
    prev_err = err;
    apply_wtw_inv(res_z, tmp);
    Eigen::VectorXd ddx = ldlt_.solve(res_x + Gt_ * tmp);
    Eigen::VectorXd ddz(nrows_);
    apply_wtw_inv(G_ * ddx - res_z, ddz);
    dx += ddx;
    dz += ddz;
  }
}

void Ipm::compute_residuals(const Iterate& it) {
  rx_ = -Gt_ * it.z;
  hresx_ = rx_.norm();
  rx_ -= it.tau * c_;
  rz_ = it.s + G_ * it.x;
  hresz_ = rz_.norm();
  rz_ -= it.tau * h_;
  cx_ = c_.dot(it.x);
  hz_ = h_.dot(it.z);
  rt_ = it.kap + cx_ + hz_;
  nx_ = it.x.norm();
  nz_ = it.z.norm();
  ns_ = it.s.norm();
}

void Ipm::update_statistics(Iterate& it) {
  it.gap = it.s.dot(it.z);
  it.mu = (it.gap + it.kap * it.tau) / (degree_ + 1.0);
  it.kapovert = it.kap / it.tau;
  it.pcost = cx_ / it.tau;
  it.dcost = -hz_ / it.tau;
  if (it.pcost < 0.0) {
    it.relgap = it.gap / (-it.pcost);
  } else if (it.dcost > 0.0) {
    it.relgap = it.gap / it.dcost;
  } else {
    it.relgap.reset();
  }
  it.pres = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0) / it.tau;
  it.dres = rx_.norm() / std::max(resx0_ + nz_, 1.0) / it.tau;
  it.pinfres.reset();
  it.dinfres.reset();
  if (hz_ / std::max(nz_, 1.0) < -opts_.tol) {
    it.pinfres = hresx_ / std::max(nz_, 1.0);
  }
  if (cx_ / std::max(nx_, 1.0) < -opts_.tol) {
    it.dinfres = hresz_ / std::max(nx_ + ns_, 1.0);
  }
  if (opts_.verbose) {
    std::printf("it %2d  pcost % .6e  dcost % .6e  gap %.2e  pres %.2e  dres %.2e  k/t %.2e\n",
                it.iter, it.pcost, it.dcost, it.gap, it.pres, it.dres, it.kapovert);
  }
}

Ipm::Verdict Ipm::check_exit(const Iterate& it, double feas_scale, double gap_scale) const {
  const double feastol = opts_.tol * feas_scale;
  const double abstol = opts_.tol * gap_scale;
  const double reltol = opts_.tol * gap_scale;
  // The homogeneous gap s'z overstates the objective uncertainty when
  // tau < 1; with both residuals small, pcost - dcost brackets the optimum
  // directly.
  const double obj_gap = it.pcost - it.dcost;
  const bool gap_ok = it.gap < abstol || (it.relgap && *it.relgap < reltol) ||
                      (obj_gap >= 0.0 && obj_gap <= reltol * std::max(1.0, std::abs(it.pcost)));
  if ((-cx_ > 0.0 || -hz_ >= -abstol) && it.pres < feastol && it.dres < feastol && gap_ok) {
    return Verdict::kOptimal;
  }
  if (it.dinfres && *it.dinfres < feastol && it.tau < it.kap) return Verdict::kDualInfeasible;
  if ((it.pinfres && *it.pinfres < feastol && it.tau < it.kap) ||
      (it.tau < feastol && it.kap < feastol && it.pinfres && *it.pinfres < feastol)) {
    return Verdict::kPrimalInfeasible;
  }
  return Verdict::kContinue;
}

SolverResult Ipm::finish(const Iterate& it, SolveStatus status) const {
  SolverResult out;
  out.status = status;
  out.iterations = it.iter;
  out.duality_gap = it.gap;
  if (status == SolveStatus::kOptimal || status == SolveStatus::kMaxIters) {
    out.x = (it.x / it.tau).cwiseQuotient(col_equil_);
    out.objective = c_.cwiseProduct(col_equil_).dot(out.x);
    out.z = (it.z / it.tau).cwiseQuotient(row_equil_);
  } else if (status == SolveStatus::kInfeasible) {
    out.z = it.z.cwiseQuotient(row_equil_);  // Farkas direction, scale-free
  }
  return out;
}

SolverResult Ipm::run() {
  if (nrows_ == 0) {
    // No cones at all: the objective is unbounded below unless it is zero.
    SolverResult out;
    out.status = c_.isZero(0.0) ? SolveStatus::kOptimal : SolveStatus::kUnbounded;
    if (out.status == SolveStatus::kOptimal) out.x = Eigen::VectorXd::Zero(nvar_);
    return out;
  }
  resx0_ = std::max(1.0, c_.norm());
  resz0_ = std::max(1.0, h_.norm());

  Iterate it;
  it.x.setZero(nvar_);
  it.s.setZero(nrows_);
  it.z.setZero(nrows_);
  lambda_.setZero(nrows_);
  lp_v_ = Eigen::VectorXd::Ones(std::max(nonneg_, 1));
  lp_w_ = lp_v_;

  // Initialization: identity scalings, then shift the least-squares points
  // into the cone interior.
  for (PsdCone& cone : cones_) {
    cone.r = cone.rti = cone.w_inv = cone.w_mat = Eigen::MatrixXd::Identity(cone.dim, cone.dim);
    cone.lambda_diag = Eigen::VectorXd::Ones(cone.dim);
  }
  lp_v_.setOnes(nonneg_);
  lp_w_.setOnes(nonneg_);
  if (!refactorize()) return finish(it, SolveStatus::kNumericalFailure);

  Eigen::VectorXd dx1(nvar_), dz1(nrows_), dx2(nvar_), dz2(nrows_);
  kkt_solve(Eigen::VectorXd::Zero(nvar_), h_, dx1, dz1);
  it.x = dx1;
  bring_to_cone(-dz1, it.s);
  kkt_solve(-c_, Eigen::VectorXd::Zero(nrows_), dx2, dz2);
  bring_to_cone(dz2, it.z);
  it.tau = 1.0;
  it.kap = 1.0;

  Iterate best = it;
  bool have_best = false;
  double pres_prev = std::numeric_limits<double>::max();
  const int iter_max = std::min(opts_.max_iters, kIterCap);
  double step = 0.0;

  Eigen::VectorXd w_dz(nrows_), ds_by_w(nrows_), ds_comb(nrows_), lam_div_ds(nrows_),
      ds_final(nrows_);
  const Eigen::VectorXd e = cone_identity();

  for (it.iter = 0; it.iter <= iter_max; ++it.iter) {
    compute_residuals(it);
    update_statistics(it);

    if (it.iter > 0 && (it.pres > kSafeguard * pres_prev || it.gap < 0.0)) {
      if (have_best) it = best;
      compute_residuals(it);
      update_statistics(it);
      return finish(it, check_exit(it, 1e3, 1e5) == Verdict::kOptimal ? SolveStatus::kOptimal
                                                                 : SolveStatus::kNumericalFailure);
    }
    pres_prev = it.pres;

    switch (check_exit(it, 1.0, 1.0)) {
      case Verdict::kOptimal: return finish(it, SolveStatus::kOptimal);
      case Verdict::kPrimalInfeasible: return finish(it, SolveStatus::kInfeasible);
      case Verdict::kDualInfeasible: return finish(it, SolveStatus::kUnbounded);
      case Verdict::kContinue: break;
    }
    if (it.iter > 0 && step <= kStepMin * kGammaStep) {
      if (have_best) it = best;
      compute_residuals(it);
      update_statistics(it);
      return finish(it, check_exit(it, 1e3, 1e5) == Verdict::kOptimal ? SolveStatus::kOptimal
                                                                 : SolveStatus::kNumericalFailure);
    }
    if (it.iter == iter_max) {
      return finish(it, check_exit(it, 1e3, 1e5) == Verdict::kOptimal ? SolveStatus::kOptimal
                                                                 : SolveStatus::kMaxIters);
    }
    if (!std::isfinite(it.pcost)) {
      if (have_best) it = best;
      return finish(it, SolveStatus::kNumericalFailure);
    }

    if (!have_best || (it.pres <= best.pres && it.gap <= best.gap)) {
      best = it;
      have_best = true;
    }

    if (!update_scalings(it.s, it.z)) {
      if (have_best) it = best;
      compute_residuals(it);
      update_statistics(it);
      return finish(it, check_exit(it, 1e3, 1e5) == Verdict::kOptimal ? SolveStatus::kOptimal
                                                                 : SolveStatus::kNumericalFailure);
    }
    if (!refactorize()) {
      if (have_best) it = best;
      return finish(it, SolveStatus::kNumericalFailure);
    }

    kkt_solve(-c_, h_, dx1, dz1);
    const double dtau_denom = it.kap / it.tau - c_.dot(dx1) - h_.dot(dz1);

    // Affine (predictor) direction.
    kkt_solve(rx_, it.s - rz_, dx2, dz2);
    const double dtauaff = (rt_ - it.kap + c_.dot(dx2) + h_.dot(dz2)) / dtau_denom;
    Eigen::VectorXd dzaff = dz2 + dtauaff * dz1;
    scale_w(dzaff, w_dz);
    ds_by_w = -w_dz - lambda_;
    const double dkapaff = -it.kap - it.kap / it.tau * dtauaff;
    const double step_aff = line_search(ds_by_w, w_dz, it.tau, dtauaff, it.kap, dkapaff);
    const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), kSigmaMin, kSigmaMax);

    // Combined (corrector) direction.
    conic_product(ds_by_w, w_dz, ds_comb);
    Eigen::VectorXd lam_sq(nrows_);
    conic_product(lambda_, lambda_, lam_sq);
    ds_comb += lam_sq;
    ds_comb -= sigma * it.mu * e;
    lambda_divide(ds_comb, lam_div_ds);
    Eigen::VectorXd bz(nrows_);
    scale_wt(lam_div_ds, bz);
    bz = -(1.0 - sigma) * rz_ + bz;
    kkt_solve((1.0 - sigma) * rx_, bz, dx2, dz2);

    const double bkap = it.kap * it.tau + dkapaff * dtauaff - sigma * it.mu;
    const double dtau =
        ((1.0 - sigma) * rt_ - bkap / it.tau + c_.dot(dx2) + h_.dot(dz2)) / dtau_denom;
    dx2 += dtau * dx1;
    dz2 += dtau * dz1;
    scale_w(dz2, w_dz);
    ds_by_w = -(lam_div_ds + w_dz);
    const double dkap = -(bkap + it.kap * dtau) / it.tau;
    step = kGammaStep * line_search(ds_by_w, w_dz, it.tau, dtau, it.kap, dkap);
    scale_wt(ds_by_w, ds_final);

    // Backtrack when ill-conditioned late directions would blow up the
    // residuals; a vanishing step trips the stall exit with the best iterate.
    bool step_ok = false;
    for (int bt = 0; bt < 10 && !step_ok; ++bt) {
      const Eigen::VectorXd x_try = it.x + step * dx2;
      const Eigen::VectorXd z_try = it.z + step * dz2;
      const Eigen::VectorXd s_try = it.s + step * ds_final;
      const double tau_try = it.tau + step * dtau;
      const double pres_try = (s_try + G_ * x_try - tau_try * h_).norm() /
                              std::max(resz0_ + x_try.norm() + s_try.norm(), 1.0) / tau_try;
      const double dres_try = (-(Gt_ * z_try) - tau_try * c_).norm() /
                              std::max(resx0_ + z_try.norm(), 1.0) / tau_try;
      const double growth = std::max(pres_try / std::max(it.pres, 1e-14),
                                     dres_try / std::max(it.dres, 1e-14));
      step_ok = tau_try > 0.0 &&
                (growth <= 4.0 || std::max(pres_try, dres_try) < opts_.tol);
      if (!step_ok) step *= 0.5;
    }
    if (!step_ok) step = 0.0;

    it.x += step * dx2;
    it.z += step * dz2;
    it.s += step * ds_final;
    it.kap += step * dkap;
    it.tau += step * dtau;
  }
  return finish(it, SolveStatus::kMaxIters);
}

class IpmSolver final : public ConicSolver {
 public:
  SolverResult solve(const ConicProgram& program, const SolveOptions& opts) override {
    const auto t0 = std::chrono::steady_clock::now();
    Ipm ipm(program, opts);
    SolverResult result = ipm.run();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  }
  std::string name() const override { return "ipm"; }
};

}  // namespace

std::unique_ptr<ConicSolver> make_ipm_solver() { return std::make_unique<IpmSolver>(); }

}  // namespace gaincert
