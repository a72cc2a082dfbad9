#pragma once

// One-node MPC: a convex QP over the lower-element power.
//
//   min  sum_j  k c_j p_j + lambda [T_min - T_j]_+^2
//   s.t. T_{j+1} = one_node_step(T_j, p_j, Qd_j),  T_0 = measured,
//        0 <= p_j <= p_max,  T_j <= T_max   (j = 0..N-1)
//
// The hinge penalty is carried by slacks s_j >= 0, s_j >= T_min - T_j. Powers
// are expressed in kW inside the program; temperatures in K.

#include <span>
#include <stdexcept>

#include "whmpc/core/errors.hpp"
#include "whmpc/models/one_node.hpp"
#include "whmpc/mpc/horizon.hpp"
#include "whmpc/mpc/interior_point.hpp"

namespace whmpc::mpc {

class OneNodeProgram {
 public:
  OneNodeProgram(double measured_T, std::span<const double> prices,
                 std::span<const double> forecast, const models::OneNodeParams& params,
                 const HorizonSpec& spec)
      : N_(spec.steps()), T0_(measured_T), params_(params), spec_(spec) {
    if (static_cast<int>(prices.size()) < N_ || static_cast<int>(forecast.size()) < N_)
      throw std::invalid_argument("one-node MPC: prices and forecast must cover the horizon");
    const double dt = spec.control_step;
    decay_ = 1.0 - dt * params.U / params.C;
    gain_ = dt * 1000.0 / params.C;
    drift_.resize(N_);
    price_.resize(N_);
    for (int j = 0; j < N_; ++j) {
      drift_[j] = dt / params.C * (params.U * params.T_a - forecast[j]);
      price_[j] = spec.energy_price_factor() * 1000.0 * (prices[j] + spec.price_floor);
    }
    const double gap0 = std::max(0.0, spec.T_min - T0_);
    constant_ = spec.comfort_weight * gap0 * gap0;
    build_structure();
  }

  int N() const { return N_; }
  int num_variables() const { return 3 * N_ - 1; }
  int num_equalities() const { return N_; }
  const LinearInequalities& inequalities() const { return ineq_; }
  const Pattern& jacobian_pattern() const { return jac_pattern_; }
  const Pattern& hessian_pattern() const { return hess_pattern_; }

  int T(int j) const { return j - 1; }        // j = 1..N
  int u(int j) const { return N_ + j; }       // j = 0..N-1
  int s(int j) const { return 2 * N_ + j - 1; }  // j = 1..N-1

  double objective(const VectorXd& x) const {
    double f = constant_;
    for (int j = 0; j < N_; ++j) f += price_[j] * x(u(j));
    for (int j = 1; j < N_; ++j) f += spec_.comfort_weight * x(s(j)) * x(s(j));
    return f;
  }

  void gradient(const VectorXd& x, VectorXd& g) const {
    g = VectorXd::Zero(num_variables());
    for (int j = 0; j < N_; ++j) g(u(j)) = price_[j];
    for (int j = 1; j < N_; ++j) g(s(j)) = 2.0 * spec_.comfort_weight * x(s(j));
  }

  void equalities(const VectorXd& x, VectorXd& c) const {
    c.resize(N_);
    for (int j = 0; j < N_; ++j) {
      const double tj = j == 0 ? T0_ : x(T(j));
      c(j) = x(T(j + 1)) - decay_ * tj - gain_ * x(u(j)) - drift_[j];
    }
  }

  void jacobian_values(const VectorXd&, std::vector<double>& v) const { v = jac_values_; }

  void hessian_values(const VectorXd&, const VectorXd&, std::vector<double>& v) const {
    v.assign(hess_pattern_.size(), 2.0 * spec_.comfort_weight);
  }

  /// States simulated forward under a constant quarter-power plan.
  VectorXd neutral_start() const {
    VectorXd x = VectorXd::Zero(num_variables());
    const double u0 = 0.25 * spec_.p_max / 1000.0;
    double t = T0_;
    for (int j = 0; j < N_; ++j) {
      x(u(j)) = u0;
      t = decay_ * t + gain_ * u0 + drift_[j];
      x(T(j + 1)) = t;
      if (j + 1 < N_) x(s(j + 1)) = std::max(0.0, spec_.T_min - t) + 0.1;
    }
    return x;
  }

  std::vector<int> variable_blocks() const { return {N_, N_, N_ - 1}; }
  std::vector<int> equality_blocks() const { return {N_}; }
  std::vector<int> inequality_blocks() const { return {N_, N_, N_ - 1, N_ - 1, N_ - 1}; }

 private:
  void build_structure() {
    const double umax = spec_.p_max / 1000.0;
    ineq_ = LinearInequalities(num_variables());
    for (int j = 0; j < N_; ++j) ineq_.add({{u(j), -1.0}}, 0.0);
    for (int j = 0; j < N_; ++j) ineq_.add({{u(j), 1.0}}, umax);
    for (int j = 1; j < N_; ++j) ineq_.add({{s(j), -1.0}}, 0.0);
    for (int j = 1; j < N_; ++j) ineq_.add({{s(j), -1.0}, {T(j), -1.0}}, -spec_.T_min);
    for (int j = 1; j < N_; ++j) ineq_.add({{T(j), 1.0}}, spec_.T_max);

    for (int j = 0; j < N_; ++j) {
      jac_pattern_.emplace_back(j, T(j + 1));
      jac_values_.push_back(1.0);
      if (j > 0) {
        jac_pattern_.emplace_back(j, T(j));
        jac_values_.push_back(-decay_);
      }
      jac_pattern_.emplace_back(j, u(j));
      jac_values_.push_back(-gain_);
    }
    for (int j = 1; j < N_; ++j) hess_pattern_.emplace_back(s(j), s(j));
  }

  int N_;
  double T0_;
  models::OneNodeParams params_;
  HorizonSpec spec_;
  double decay_ = 1.0, gain_ = 0.0, constant_ = 0.0;
  std::vector<double> drift_, price_;
  LinearInequalities ineq_;
  Pattern jac_pattern_, hess_pattern_;
  std::vector<double> jac_values_;
};

namespace detail {

template <class Program>
IpmIterate warm_or_neutral(const Program& prog, const MpcSolution* warm) {
  const int n = prog.num_variables();
  const int meq = prog.num_equalities();
  const int mi = prog.inequalities().rows();
  if (warm && sizes_match(warm->iterate, n, meq, mi)) {
    IpmIterate it;
    it.x = shift_blocks(warm->iterate.x, prog.variable_blocks());
    it.y = shift_blocks(warm->iterate.y, prog.equality_blocks());
    it.z = shift_blocks(warm->iterate.z, prog.inequality_blocks());
    it.s = shift_blocks(warm->iterate.s, prog.inequality_blocks());
    return it;
  }
  IpmIterate it;
  it.x = prog.neutral_start();
  return it;
}

// Solves from the warm start, retrying from the neutral point if that fails.
template <class Program>
IpmResult solve_program(const Program& prog, const MpcSolution* warm, const IpmSettings& settings) {
  InteriorPointSolver<Program> solver(settings);
  IpmResult r = solver.solve(prog, warm_or_neutral(prog, warm));
  if (!r.ok() && warm) {
    IpmIterate fresh;
    fresh.x = prog.neutral_start();
    IpmResult retry = solver.solve(prog, std::move(fresh));
    retry.iterations += r.iterations;
    r = std::move(retry);
  }
  return r;
}

}  // namespace detail

inline MpcSolution solve_one_node(double measured_T, std::span<const double> prices,
                                  std::span<const double> forecast,
                                  const models::OneNodeParams& params, const HorizonSpec& spec,
                                  const MpcSolution* warm_start = nullptr,
                                  const IpmSettings& settings = {}) {
  spec.validate();
  params.validate();
  detail::Stopwatch clock;
  const OneNodeProgram prog(measured_T, prices, forecast, params, spec);
  IpmResult r = detail::solve_program(prog, warm_start, settings);

  MpcSolution sol;
  sol.status = detail::status_of(r);
  sol.iterations = r.iterations;
  sol.kkt_residual = r.kkt_residual;
  sol.solve_time = clock.seconds();
  if (sol.status == SolverStatus::Failed)
    throw SolverFailure("one-node MPC: solver did not converge (residual " +
                        std::to_string(r.kkt_residual) + ")");
  const VectorXd& x = r.iterate.x;
  const int N = prog.N();
  sol.tank.resize(N + 1);
  sol.tank[0] = measured_T;
  sol.p_lower.resize(N);
  sol.p_upper.assign(N, 0.0);
  for (int j = 0; j < N; ++j) {
    sol.tank[j + 1] = x(prog.T(j + 1));
    sol.p_lower[j] = std::clamp(1000.0 * x(prog.u(j)), 0.0, spec.p_max);
  }
  sol.objective = r.objective;
  sol.iterate = std::move(r.iterate);
  return sol;
}

}  // namespace whmpc::mpc
