#pragma once

// Sparse primal-dual interior-point method for
//
//   minimize f(x)  subject to  c(x) = 0,  G x <= h
//
// with smooth f, c and linear inequalities. Each iteration factors the
// regularized quasi-definite KKT matrix
//
//   [ H + G' W G + dp I      J'    ]
//   [        J            -dd I    ],   W = diag(z / s)
//
// with a sparse LDL' (pattern analysed once per solve) and takes a Mehrotra
// predictor-corrector step. When c is affine and f is convex quadratic this is
// the standard convex QP method; for nonlinear c the problem re-linearizes every
// iteration and supplies a positive semidefinite Lagrangian Hessian H.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <utility>
#include <vector>

namespace whmpc::mpc {

using Eigen::VectorXd;

/// Rows of G x <= h stored in compressed-row form.
class LinearInequalities {
 public:
  explicit LinearInequalities(int num_variables = 0) : n_(num_variables) { start_.push_back(0); }

  void add(std::initializer_list<std::pair<int, double>> terms, double rhs) {
    for (auto [col, coef] : terms) {
      cols_.push_back(col);
      vals_.push_back(coef);
    }
    start_.push_back(static_cast<int>(cols_.size()));
    rhs_.push_back(rhs);
  }

  int rows() const { return static_cast<int>(rhs_.size()); }
  int num_variables() const { return n_; }
  double rhs(int r) const { return rhs_[r]; }
  VectorXd rhs() const { return Eigen::Map<const VectorXd>(rhs_.data(), rows()); }

  template <class F>
  void for_row(int r, F&& f) const {
    for (int k = start_[r]; k < start_[r + 1]; ++k) f(cols_[k], vals_[k]);
  }

  VectorXd multiply(const VectorXd& x) const {
    VectorXd out(rows());
    for (int r = 0; r < rows(); ++r) {
      double acc = 0.0;
      for_row(r, [&](int c, double v) { acc += v * x(c); });
      out(r) = acc;
    }
    return out;
  }

  VectorXd multiply_transpose(const VectorXd& z) const {
    VectorXd out = VectorXd::Zero(n_);
    for (int r = 0; r < rows(); ++r) for_row(r, [&](int c, double v) { out(c) += v * z(r); });
    return out;
  }

 private:
  int n_;
  std::vector<int> start_;
  std::vector<int> cols_;
  std::vector<double> vals_;
  std::vector<double> rhs_;
};

/// (row, col) coordinates of a fixed sparsity pattern.
using Pattern = std::vector<std::pair<int, int>>;

template <class P>
concept SmoothProgram = requires(const P& p, const VectorXd& x, VectorXd& out,
                                 std::vector<double>& vals) {
  { p.num_variables() } -> std::convertible_to<int>;
  { p.num_equalities() } -> std::convertible_to<int>;
  { p.inequalities() } -> std::convertible_to<const LinearInequalities&>;
  { p.objective(x) } -> std::convertible_to<double>;
  p.gradient(x, out);
  p.equalities(x, out);
  { p.jacobian_pattern() } -> std::convertible_to<const Pattern&>;
  p.jacobian_values(x, vals);
  // lower triangle (row >= col) of a PSD approximation of the Lagrangian Hessian
  { p.hessian_pattern() } -> std::convertible_to<const Pattern&>;
  p.hessian_values(x, x, vals);
};

struct IpmSettings {
  double tolerance = 1e-8;             // scaled KKT residual for convergence
  double acceptable_tolerance = 1e-6;  // accepted if the iteration cap is hit below this
  int max_iterations = 200;
  double step_fraction = 0.995;
  double primal_reg = 1e-9;
  double dual_reg = 1e-9;
  int refinement_steps = 2;
  double warm_start_floor = 1e-2;  // slacks and multipliers are lifted to at least this
};

struct IpmIterate {
  VectorXd x, y, z, s;
};

enum class IpmStatus { Converged, Acceptable, IterationLimit, NumericalFailure };

struct IpmResult {
  IpmIterate iterate;
  IpmStatus status = IpmStatus::NumericalFailure;
  int iterations = 0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double objective = 0.0;

  bool ok() const { return status == IpmStatus::Converged || status == IpmStatus::Acceptable; }
};

namespace detail {

inline double max_step(const VectorXd& v, const VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

inline double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace detail

template <SmoothProgram Problem>
class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(IpmSettings settings = {}) : settings_(settings) {}

  const IpmSettings& settings() const { return settings_; }

  /// `start.x` is required; missing or mis-sized duals/slacks are initialized here.
  IpmResult solve(const Problem& prob, IpmIterate start) {
    const int n = prob.num_variables();
    const int meq = prob.num_equalities();
    const LinearInequalities& G = prob.inequalities();
    const int mi = G.rows();
    const VectorXd h = G.rhs();
    setup_structure(prob, n, meq);

    IpmIterate it = std::move(start);
    const VectorXd gx0 = G.multiply(it.x);
    const double floor = settings_.warm_start_floor;
    if (it.s.size() != mi || it.z.size() != mi) {
      it.s = (h - gx0).cwiseMax(1.0);
      it.z = VectorXd::Ones(mi);
    } else {
      it.s = it.s.cwiseMax(floor).cwiseMax(h - gx0);
      it.z = it.z.cwiseMax(floor);
    }
    if (it.y.size() != meq) it.y = VectorXd::Zero(meq);

    IpmResult res;
    VectorXd grad(n), cons(meq), rd(n), rp(meq), ri(mi), w(mi), rc(mi);
    std::vector<double> jvals, hvals;

    for (int iter = 0;; ++iter) {
      prob.gradient(it.x, grad);
      prob.equalities(it.x, cons);
      prob.jacobian_values(it.x, jvals);
      rd = grad + jt_times(jvals, it.y, n) + G.multiply_transpose(it.z);
      rp = cons;
      ri = G.multiply(it.x) + it.s - h;
      const double mu = mi ? it.s.dot(it.z) / mi : 0.0;
      const double kkt = std::max({detail::inf_norm(rd) / (1.0 + detail::inf_norm(grad)),
                                   detail::inf_norm(rp), detail::inf_norm(ri) / (1.0 + detail::inf_norm(h)),
                                   mu});
      res.iterations = iter;
      res.kkt_residual = kkt;
      if (!std::isfinite(kkt)) {
        res.status = IpmStatus::NumericalFailure;
        break;
      }
      if (kkt <= settings_.tolerance) {
        res.status = IpmStatus::Converged;
        break;
      }
      if (iter >= settings_.max_iterations) {
        res.status = kkt <= settings_.acceptable_tolerance ? IpmStatus::Acceptable
                                                           : IpmStatus::IterationLimit;
        break;
      }

      prob.hessian_values(it.x, it.y, hvals);
      w = it.z.cwiseQuotient(it.s);
      if (!factorize(G, hvals, jvals, w, n, meq)) {
        res.status = kkt <= settings_.acceptable_tolerance ? IpmStatus::Acceptable
                                                           : IpmStatus::NumericalFailure;
        break;
      }

      // Predictor (affine scaling).
      rc = it.s.cwiseProduct(it.z);
      Direction aff = direction(G, w, it, rd, rp, ri, rc, n, meq);
      const double ap = detail::max_step(it.s, aff.ds);
      const double ad = detail::max_step(it.z, aff.dz);
      double sigma = 0.0;
      if (mi) {
        const double mu_aff = (it.s + ap * aff.ds).dot(it.z + ad * aff.dz) / mi;
        sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      }

      // Corrector.
      rc = it.s.cwiseProduct(it.z) + aff.ds.cwiseProduct(aff.dz) -
           VectorXd::Constant(mi, sigma * mu);
      Direction d = direction(G, w, it, rd, rp, ri, rc, n, meq);
      const double alpha_p = std::min(1.0, settings_.step_fraction * detail::max_step(it.s, d.ds));
      const double alpha_d = std::min(1.0, settings_.step_fraction * detail::max_step(it.z, d.dz));
      it.x += alpha_p * d.dx;
      it.s += alpha_p * d.ds;
      it.y += alpha_d * d.dy;
      it.z += alpha_d * d.dz;
    }
    res.objective = prob.objective(it.x);
    res.iterate = std::move(it);
    return res;
  }

 private:
  struct Direction {
    VectorXd dx, dy, dz, ds;
  };

  using SpMat = Eigen::SparseMatrix<double>;

  void setup_structure(const Problem& prob, int n, int meq) {
    const Pattern& hp = prob.hessian_pattern();
    const Pattern& jp = prob.jacobian_pattern();
    const LinearInequalities& G = prob.inequalities();
    std::vector<Eigen::Triplet<double>> trip;
    coords_.clear();
    for (auto [r, c] : hp) coords_.emplace_back(std::max(r, c), std::min(r, c));
    for (int r = 0; r < G.rows(); ++r) {
      std::vector<int> cols;
      G.for_row(r, [&](int c, double) { cols.push_back(c); });
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b)
          coords_.emplace_back(std::max(cols[a], cols[b]), std::min(cols[a], cols[b]));
    }
    for (auto [r, c] : jp) coords_.emplace_back(n + r, c);
    for (int i = 0; i < n + meq; ++i) coords_.emplace_back(i, i);

    trip.reserve(coords_.size());
    for (auto [r, c] : coords_) trip.emplace_back(r, c, 0.0);
    kkt_.resize(n + meq, n + meq);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    kkt_.makeCompressed();
    slots_.resize(coords_.size());
    for (std::size_t k = 0; k < coords_.size(); ++k) {
      const auto [r, c] = coords_[k];
      const int* begin = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[c];
      const int* end = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[c + 1];
      slots_[k] = static_cast<int>(std::lower_bound(begin, end, r) - kkt_.innerIndexPtr());
    }
    ldlt_.analyzePattern(kkt_);
    jac_pattern_ = &jp;
  }

  VectorXd jt_times(const std::vector<double>& jvals, const VectorXd& y, int n) const {
    VectorXd out = VectorXd::Zero(n);
    for (std::size_t k = 0; k < jvals.size(); ++k) {
      const auto [r, c] = (*jac_pattern_)[k];
      out(c) += jvals[k] * y(r);
    }
    return out;
  }

  VectorXd j_times(const std::vector<double>& jvals, const VectorXd& x, int meq) const {
    VectorXd out = VectorXd::Zero(meq);
    for (std::size_t k = 0; k < jvals.size(); ++k) {
      const auto [r, c] = (*jac_pattern_)[k];
      out(r) += jvals[k] * x(c);
    }
    return out;
  }

  // Zero pivots can appear late in the solve, when z/s spans many decades;
  // the regularization is then raised and the factorization retried.
  bool factorize(const LinearInequalities& G, const std::vector<double>& hvals,
                 const std::vector<double>& jvals, const VectorXd& w, int n, int meq) {
    for (double boost = 1.0; boost <= 1e6; boost *= 100.0) {
      double* v = kkt_.valuePtr();
      std::fill(v, v + kkt_.nonZeros(), 0.0);
      std::size_t k = 0;
      for (double hv : hvals) v[slots_[k++]] += hv;
      for (int r = 0; r < G.rows(); ++r) {
        thread_local std::vector<std::pair<int, double>> row;
        row.clear();
        G.for_row(r, [&](int c, double g) { row.emplace_back(c, g); });
        for (std::size_t a = 0; a < row.size(); ++a)
          for (std::size_t b = 0; b <= a; ++b) v[slots_[k++]] += w(r) * row[a].second * row[b].second;
      }
      for (double jv : jvals) v[slots_[k++]] += jv;
      reg_.resize(n + meq);
      for (int i = 0; i < n + meq; ++i) {
        reg_(i) = boost * (i < n ? settings_.primal_reg : -settings_.dual_reg);
        v[slots_[k++]] += reg_(i);
      }
      ldlt_.factorize(kkt_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solves the regularized system, then refines against the unregularized one.
  VectorXd kkt_solve(const VectorXd& rhs) const {
    VectorXd sol = ldlt_.solve(rhs);
    for (int r = 0; r < settings_.refinement_steps; ++r) {
      const VectorXd resid = rhs - (kkt_.selfadjointView<Eigen::Lower>() * sol - reg_.cwiseProduct(sol));
      sol += ldlt_.solve(resid);
    }
    return sol;
  }

  Direction direction(const LinearInequalities& G, const VectorXd& w, const IpmIterate& it, const VectorXd& rd,
                      const VectorXd& rp, const VectorXd& ri, const VectorXd& rc, int n,
                      int meq) const {
    const VectorXd rc_over_s = rc.cwiseQuotient(it.s);
    VectorXd rhs(n + meq);
    rhs.head(n) = -rd - G.multiply_transpose(w.cwiseProduct(ri) - rc_over_s);
    rhs.tail(meq) = -rp;
    const VectorXd sol = kkt_solve(rhs);
    Direction d;
    d.dx = sol.head(n);
    d.dy = sol.tail(meq);
    d.dz = w.cwiseProduct(G.multiply(d.dx) + ri) - rc_over_s;
    d.ds = -(rc + it.s.cwiseProduct(d.dz)).cwiseQuotient(it.z);
    return d;
  }

  IpmSettings settings_;
  std::vector<std::pair<int, int>> coords_;
  std::vector<int> slots_;
  SpMat kkt_;
  VectorXd reg_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  const Pattern* jac_pattern_ = nullptr;
};

}  // namespace whmpc::mpc
