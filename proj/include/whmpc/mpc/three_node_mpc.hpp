#pragma once

// Three-node MPC: a smooth NLP over both element powers.
//
//   min  sum_j  k c_j (p1_j + p2_j) + lambda [T_min - Tu_j]_+^2
//   s.t. (Tu, Tm, Tl)_{j+1} = three_node_step(..., Qd_j),  initial state = measured,
//        Tl <= Tm <= Tu,  Tu <= T_max,  Tu >= T_in + guard     (j = 1..N)
//        0 <= p1, p2 <= p_max,  p1 + p2 <= p_max (non-simultaneous)
//
// The valve makes the outflow depend on 1 / (Tu - T_in), so the dynamics are
// nonlinear in Tu. The Lagrangian Hessian of each step is a 3x3 block in
// (Tu, Tm, Tl); it is projected onto the PSD cone before being handed to the
// interior-point solver.

#include <Eigen/Eigenvalues>

#include <span>

#include "whmpc/core/errors.hpp"
#include "whmpc/models/three_node.hpp"
#include "whmpc/mpc/horizon.hpp"
#include "whmpc/mpc/interior_point.hpp"

namespace whmpc::mpc {

/// Repairs a measured state so that Tl <= Tm <= Tu holds at the initial step.
inline tank::NodeTemps repair_ordering(tank::NodeTemps t) {
  t.middle = std::min(t.middle, t.upper);
  t.lower = std::min(t.lower, t.middle);
  return t;
}

class ThreeNodeProgram {
 public:
  ThreeNodeProgram(const tank::NodeTemps& measured, std::span<const double> prices,
                   std::span<const double> forecast, const models::ThreeNodeParams& params,
                   const HorizonSpec& spec)
      : N_(spec.steps()), T0_(measured), m_(params), spec_(spec) {
    if (static_cast<int>(prices.size()) < N_ || static_cast<int>(forecast.size()) < N_)
      throw std::invalid_argument("three-node MPC: prices and forecast must cover the horizon");
    qd_.assign(forecast.begin(), forecast.begin() + N_);
    price_.resize(N_);
    for (int j = 0; j < N_; ++j) price_[j] = spec.energy_price_factor() * 1000.0 * (prices[j] + spec.price_floor);
    const double gap0 = std::max(0.0, spec.T_min - T0_.upper);
    constant_ = spec.comfort_weight * gap0 * gap0;
    h_[0] = spec.control_step / m_.C_u;
    h_[1] = spec.control_step / m_.C_m;
    h_[2] = spec.control_step / m_.C_l;
    build_structure();
  }

  int N() const { return N_; }
  int num_variables() const { return 6 * N_ - 1; }
  int num_equalities() const { return 3 * N_; }
  const LinearInequalities& inequalities() const { return ineq_; }
  const Pattern& jacobian_pattern() const { return jac_pattern_; }
  const Pattern& hessian_pattern() const { return hess_pattern_; }

  // node 0 = upper, 1 = middle, 2 = lower; j = 1..N
  int T(int node, int j) const { return node * N_ + j - 1; }
  int u1(int j) const { return 3 * N_ + j; }
  int u2(int j) const { return 4 * N_ + j; }
  int s(int j) const { return 5 * N_ + j - 1; }

  double objective(const VectorXd& x) const {
    double f = constant_;
    for (int j = 0; j < N_; ++j) f += price_[j] * (x(u1(j)) + x(u2(j)));
    for (int j = 1; j < N_; ++j) f += spec_.comfort_weight * x(s(j)) * x(s(j));
    return f;
  }

  void gradient(const VectorXd& x, VectorXd& g) const {
    g = VectorXd::Zero(num_variables());
    for (int j = 0; j < N_; ++j) g(u1(j)) = g(u2(j)) = price_[j];
    for (int j = 1; j < N_; ++j) g(s(j)) = 2.0 * spec_.comfort_weight * x(s(j));
  }

  void equalities(const VectorXd& x, VectorXd& c) const {
    c.resize(3 * N_);
    for (int j = 0; j < N_; ++j) {
      const tank::NodeTemps t = state(x, j);
      const tank::NodeTemps q = rates(t, 1000.0 * x(u1(j)), 1000.0 * x(u2(j)), qd_[j]);
      c(j) = x(T(0, j + 1)) - t.upper - h_[0] * q.upper;
      c(N_ + j) = x(T(1, j + 1)) - t.middle - h_[1] * q.middle;
      c(2 * N_ + j) = x(T(2, j + 1)) - t.lower - h_[2] * q.lower;
    }
  }

  void jacobian_values(const VectorXd& x, std::vector<double>& v) const {
    v.clear();
    v.reserve(jac_pattern_.size());
    for (int j = 0; j < N_; ++j) {
      const tank::NodeTemps t = state(x, j);
      const Eigen::Matrix3d dq = rate_jacobian(t, qd_[j]);
      for (int node = 0; node < 3; ++node) {
        v.push_back(1.0);
        if (j > 0)
          for (int k = 0; k < 3; ++k) v.push_back((node == k ? -1.0 : 0.0) - h_[node] * dq(node, k));
        if (node < 2) v.push_back(-h_[node] * 1000.0);
      }
    }
  }

  void hessian_values(const VectorXd& x, const VectorXd& y, std::vector<double>& v) const {
    v.clear();
    v.reserve(hess_pattern_.size());
    for (int j = 1; j < N_; ++j) v.push_back(2.0 * spec_.comfort_weight);
    for (int j = 1; j < N_; ++j) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(constraint_hessian(x, y, j));
      const Eigen::Matrix3d psd = eig.eigenvectors() *
                                  eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                                  eig.eigenvectors().transpose();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c <= r; ++c) v.push_back(psd(r, c));
    }
  }

  /// Hessian of y'c(x) with respect to (Tu, Tm, Tl) at step j (1..N-1), before convexification.
  Eigen::Matrix3d constraint_hessian(const VectorXd& x, const VectorXd& y, int j) const {
    const std::array<Eigen::Matrix3d, 3> d2 = rate_hessians(state(x, j), qd_[j]);
    Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
    for (int node = 0; node < 3; ++node) b -= y(node * N_ + j) * h_[node] * d2[node];
    return b;
  }

  /// Forward simulation of a light two-element plan, with the upper node held above the guard.
  VectorXd neutral_start() const {
    VectorXd x = VectorXd::Zero(num_variables());
    const double u0 = 0.1 * spec_.p_max / 1000.0;
    tank::NodeTemps t = T0_;
    const double floor = m_.T_in + spec_.valve_guard + 0.5;
    for (int j = 0; j < N_; ++j) {
      x(u1(j)) = u0;
      x(u2(j)) = u0;
      const tank::NodeTemps q = rates(t, 1000.0 * u0, 1000.0 * u0, qd_[j]);
      t = {t.upper + h_[0] * q.upper, t.middle + h_[1] * q.middle, t.lower + h_[2] * q.lower};
      t.upper = std::clamp(t.upper, floor, spec_.T_max - 0.5);
      t = repair_ordering(t);
      x(T(0, j + 1)) = t.upper;
      x(T(1, j + 1)) = t.middle;
      x(T(2, j + 1)) = t.lower;
      if (j + 1 < N_) x(s(j + 1)) = std::max(0.0, spec_.T_min - t.upper) + 0.1;
    }
    return x;
  }

  std::vector<int> variable_blocks() const { return {N_, N_, N_, N_, N_, N_ - 1}; }
  std::vector<int> equality_blocks() const { return {N_, N_, N_}; }
  std::vector<int> inequality_blocks() const { return ineq_blocks_; }

  tank::NodeTemps state(const VectorXd& x, int j) const {
    if (j == 0) return T0_;
    return {x(T(0, j)), x(T(1, j)), x(T(2, j))};
  }

 private:
  tank::NodeTemps rates(const tank::NodeTemps& t, double p1, double p2, double qd) const {
    // evaluated without the singularity check; the guard bound keeps Tu away from T_in
    const double lift = std::max(t.upper - m_.T_in, 1e-3);
    const double f = qd / lift;
    return {p2 + m_.U_u * (m_.T_a - t.upper) + (f + m_.K_um) * (t.middle - t.upper),
            p1 + m_.U_m * (m_.T_a - t.middle) + f * (t.lower - t.middle) +
                m_.K_um * (t.upper - t.middle) + m_.K_ml * (t.lower - t.middle),
            m_.U_l * (m_.T_a - t.lower) + f * (m_.T_in - t.lower) + m_.K_ml * (t.middle - t.lower)};
  }

  // d(rate_node)/d(Tu, Tm, Tl)
  Eigen::Matrix3d rate_jacobian(const tank::NodeTemps& t, double qd) const {
    const double d = std::max(t.upper - m_.T_in, 1e-3);
    const double f = qd / d, g = qd / (d * d);
    Eigen::Matrix3d J;
    J << -m_.U_u - g * (t.middle - m_.T_in) - m_.K_um, f + m_.K_um, 0.0,
        -g * (t.lower - t.middle) + m_.K_um, -m_.U_m - f - m_.K_um - m_.K_ml, f + m_.K_ml,
        -g * (m_.T_in - t.lower), m_.K_ml, -m_.U_l - f - m_.K_ml;
    return J;
  }

  std::array<Eigen::Matrix3d, 3> rate_hessians(const tank::NodeTemps& t, double qd) const {
    const double d = std::max(t.upper - m_.T_in, 1e-3);
    const double g = qd / (d * d), k = 2.0 * qd / (d * d * d);
    std::array<Eigen::Matrix3d, 3> H;
    H[0] << k * (t.middle - m_.T_in), -g, 0.0, -g, 0.0, 0.0, 0.0, 0.0, 0.0;
    H[1] << k * (t.lower - t.middle), g, -g, g, 0.0, 0.0, -g, 0.0, 0.0;
    H[2] << k * (m_.T_in - t.lower), 0.0, g, 0.0, 0.0, 0.0, g, 0.0, 0.0;
    return H;
  }

  void build_structure() {
    const double umax = spec_.p_max / 1000.0;
    ineq_ = LinearInequalities(num_variables());
    auto block = [&](int before) { ineq_blocks_.push_back(ineq_.rows() - before); };
    int mark = ineq_.rows();
    for (int j = 0; j < N_; ++j) ineq_.add({{u1(j), -1.0}}, 0.0);
    block(mark), mark = ineq_.rows();
    for (int j = 0; j < N_; ++j) ineq_.add({{u1(j), 1.0}}, umax);
    block(mark), mark = ineq_.rows();
    for (int j = 0; j < N_; ++j) ineq_.add({{u2(j), -1.0}}, 0.0);
    block(mark), mark = ineq_.rows();
    for (int j = 0; j < N_; ++j) ineq_.add({{u2(j), 1.0}}, umax);
    block(mark), mark = ineq_.rows();
    if (spec_.non_simultaneous) {
      for (int j = 0; j < N_; ++j) ineq_.add({{u1(j), 1.0}, {u2(j), 1.0}}, umax);
      block(mark), mark = ineq_.rows();
    }
    for (int j = 1; j < N_; ++j) ineq_.add({{s(j), -1.0}}, 0.0);
    block(mark), mark = ineq_.rows();
    for (int j = 1; j < N_; ++j) ineq_.add({{s(j), -1.0}, {T(0, j), -1.0}}, -spec_.T_min);
    block(mark), mark = ineq_.rows();
    for (int j = 1; j <= N_; ++j) ineq_.add({{T(0, j), 1.0}}, spec_.T_max);
    block(mark), mark = ineq_.rows();
    for (int j = 1; j <= N_; ++j) ineq_.add({{T(1, j), 1.0}, {T(0, j), -1.0}}, 0.0);
    block(mark), mark = ineq_.rows();
    for (int j = 1; j <= N_; ++j) ineq_.add({{T(2, j), 1.0}, {T(1, j), -1.0}}, 0.0);
    block(mark), mark = ineq_.rows();
    for (int j = 1; j <= N_; ++j) ineq_.add({{T(0, j), -1.0}}, -(m_.T_in + spec_.valve_guard));
    block(mark);

    for (int j = 0; j < N_; ++j) {
      for (int node = 0; node < 3; ++node) {
        const int row = node * N_ + j;
        jac_pattern_.emplace_back(row, T(node, j + 1));
        if (j > 0)
          for (int k = 0; k < 3; ++k) jac_pattern_.emplace_back(row, T(k, j));
        if (node == 0) jac_pattern_.emplace_back(row, u2(j));
        if (node == 1) jac_pattern_.emplace_back(row, u1(j));
      }
    }
    for (int j = 1; j < N_; ++j) hess_pattern_.emplace_back(s(j), s(j));
    for (int j = 1; j < N_; ++j)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c <= r; ++c) hess_pattern_.emplace_back(T(r, j), T(c, j));
  }

  int N_;
  tank::NodeTemps T0_;
  models::ThreeNodeParams m_;
  HorizonSpec spec_;
  std::array<double, 3> h_{};
  double constant_ = 0.0;
  std::vector<double> qd_, price_;
  LinearInequalities ineq_;
  std::vector<int> ineq_blocks_;
  Pattern jac_pattern_, hess_pattern_;
};

inline MpcSolution solve_three_node(const tank::NodeTemps& measured, std::span<const double> prices,
                                    std::span<const double> forecast,
                                    const models::ThreeNodeParams& params, const HorizonSpec& spec,
                                    const MpcSolution* warm_start = nullptr,
                                    const IpmSettings& settings = {}) {
  spec.validate();
  params.validate();
  if (!(measured.upper > params.T_in))
    throw DegenerateValve("three-node MPC: measured upper temperature at or below inlet");
  detail::Stopwatch clock;
  const tank::NodeTemps start = repair_ordering(measured);
  const ThreeNodeProgram prog(start, prices, forecast, params, spec);
  IpmResult r = detail::solve_program(prog, warm_start, settings);

  MpcSolution sol;
  sol.status = detail::status_of(r);
  sol.iterations = r.iterations;
  sol.kkt_residual = r.kkt_residual;
  sol.solve_time = clock.seconds();
  if (sol.status == SolverStatus::Failed)
    throw SolverFailure("three-node MPC: solver did not converge (residual " +
                        std::to_string(r.kkt_residual) + ")");
  const VectorXd& x = r.iterate.x;
  const int N = prog.N();
  sol.nodes.resize(N + 1);
  for (int j = 0; j <= N; ++j) sol.nodes[j] = prog.state(x, j);
  sol.p_lower.resize(N);
  sol.p_upper.resize(N);
  for (int j = 0; j < N; ++j) {
    sol.p_lower[j] = std::clamp(1000.0 * x(prog.u1(j)), 0.0, spec.p_max);
    sol.p_upper[j] = std::clamp(1000.0 * x(prog.u2(j)), 0.0, spec.p_max);
  }
  sol.objective = r.objective;
  sol.iterate = std::move(r.iterate);
  return sol;
}

}  // namespace whmpc::mpc
