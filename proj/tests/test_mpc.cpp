#include <gtest/gtest.h>

#include <random>

#include "oracles/instances.hpp"
#include "whmpc/mpc/duty_cycle.hpp"

using namespace whmpc;
using namespace whmpc::mpc;

namespace {

const tank::PlantParams kPlant;

HorizonSpec short_spec(int n) {
  HorizonSpec s;
  s.horizon = s.control_step * n;
  return s;
}

std::vector<double> daily_draws(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> q(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const int hour = (j / 6) % 24;
    const bool busy = (hour >= 6 && hour <= 9) || (hour >= 18 && hour <= 22);
    if (u(rng) < (busy ? 0.5 : 0.05)) q[j] = 3000.0 * u(rng);
  }
  return q;
}

std::vector<double> tou_like(int n) {
  std::vector<double> c(n);
  for (int j = 0; j < n; ++j) c[j] = (j % 144 >= 96 && j % 144 < 126) ? 0.6 : 0.35;
  return c;
}

}  // namespace

TEST(Lockout, StrictThreshold) {
  const HorizonSpec s;
  EXPECT_TRUE(over_temp_lockout(fahrenheit_to_kelvin(151.0), s));
  EXPECT_FALSE(over_temp_lockout(s.T_max, s));
  EXPECT_FALSE(over_temp_lockout(fahrenheit_to_kelvin(120.0), s));
}

TEST(DutyCycle, FromFirstStepPowers) {
  const HorizonSpec s;
  MpcSolution sol;
  sol.p_lower = {2250.0, 0.0};
  sol.p_upper = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(to_duty_cycle(sol, s).alpha1, 0.5);
  sol.p_upper = {2250.0, 0.0};
  const DutyCycle d = to_duty_cycle(sol, s);
  EXPECT_DOUBLE_EQ(d.alpha1, 0.5);
  EXPECT_DOUBLE_EQ(d.alpha2, 0.5);
  sol.p_lower = {0.0};
  sol.p_upper = {0.0};
  EXPECT_EQ(to_duty_cycle(sol, s).alpha1 + to_duty_cycle(sol, s).alpha2, 0.0);
}

TEST(DutyCycle, ScheduleSplitsInterval) {
  const HorizonSpec s;
  for (int k = 0; k < 60; ++k) {
    const tank::ElementCommand c = schedule_elements({0.5, 0.5}, k, s);
    EXPECT_EQ(c.lower_on, k < 30);
    EXPECT_EQ(c.upper_on, k >= 30);
    EXPECT_EQ(schedule_elements({0.0, 1.0}, k, s), (tank::ElementCommand{false, true}));
    EXPECT_EQ(schedule_elements({1.0, 0.0}, k, s), (tank::ElementCommand{true, false}));
  }
  EXPECT_THROW(schedule_elements({0.5, 0.5}, 60, s), std::out_of_range);
}

TEST(DutyCycle, RealizedPowerWithinOneQuantum) {
  const HorizonSpec s;
  const double quantum = s.p_max * 10.0 / s.control_step;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    MpcSolution sol;
    const double total = s.p_max * u(rng);
    const double share = u(rng);
    sol.p_lower = {total * share};
    sol.p_upper = {total * (1.0 - share)};
    const DutyCycle d = to_duty_cycle(sol, s);
    double e1 = 0.0, e2 = 0.0;
    for (int k = 0; k < 60; ++k) {
      const tank::ElementCommand c = schedule_elements(d, k, s);
      ASSERT_FALSE(c.lower_on && c.upper_on);
      e1 += c.lower_on ? s.p_max * 10.0 : 0.0;
      e2 += c.upper_on ? s.p_max * 10.0 : 0.0;
    }
    EXPECT_LE(std::abs(e1 / s.control_step - sol.p_lower[0]), quantum + 1e-9);
    EXPECT_LE(std::abs(e2 / s.control_step - sol.p_upper[0]), quantum + 1e-9);
  }
}

TEST(OneNodeMpc, FreeEnergyHeatsAtFullPower) {
  const HorizonSpec s = short_spec(12);
  const auto m = models::OneNodeParams::nominal(kPlant);
  const std::vector<double> prices(12, 0.0), draws(12, 0.0);
  const MpcSolution sol = solve_one_node(s.T_min - 8.0, prices, draws, m, s);
  EXPECT_NEAR(sol.p_lower[0], s.p_max, 1e-3 * s.p_max);
  EXPECT_NEAR(sol.p_lower[1], s.p_max, 1e-3 * s.p_max);
  // reaches T_min and stops pushing well above it
  EXPECT_GE(sol.tank[4], s.T_min - 1e-3);
  EXPECT_LT(sol.tank[12], s.T_min + 1.0);
}

TEST(OneNodeMpc, AtUpperBoundStaysOff) {
  const HorizonSpec s = short_spec(24);
  const auto m = models::OneNodeParams::nominal(kPlant);
  const MpcSolution sol =
      solve_one_node(s.T_max, tou_like(24), std::vector<double>(24, 0.0), m, s);
  for (double p : sol.p_lower) EXPECT_LT(p, 1e-3 * s.p_max);
  EXPECT_DOUBLE_EQ(sol.tank[0], s.T_max);
}

TEST(OneNodeMpc, ToyStepPricesMatchGrid) {
  oracle::OneNodeToy t = oracle::random_one_node(1);
  t.lambda = 100.0;
  t.price = {1.0, 1.0, 0.0, 1.0};
  t.qd = {0.0, 0.0, 12000.0, 0.0};
  t.T0 = t.t_min + 0.5;
  const double grid = t.search();
  const MpcSolution sol = oracle::solve(t);
  EXPECT_LE(sol.objective, grid + 1e-9);
  EXPECT_LE(std::abs(sol.objective - grid), 0.01 * std::abs(grid));
  EXPECT_NEAR(sol.p_lower[2], t.p_max, 1e-3 * t.p_max);  // free step used fully
}

TEST(OneNodeMpc, RandomToysMatchGrid) {
  for (std::uint64_t seed = 100; seed < 106; ++seed) {
    const oracle::OneNodeToy t = oracle::random_one_node(seed);
    const double grid = t.search();
    const MpcSolution sol = oracle::solve(t);
    EXPECT_LE(sol.objective, grid + 1e-6 * std::abs(grid)) << "seed " << seed;
    EXPECT_LE(std::abs(sol.objective - grid), 0.01 * std::abs(grid)) << "seed " << seed;
  }
}

TEST(OneNodeMpc, StartIndependentAndWarmStartInvariant) {
  const int n = 144;
  const HorizonSpec s = short_spec(n);
  const auto m = models::OneNodeParams::nominal(kPlant);
  const auto q = daily_draws(3, 2 * n);
  const auto c = tou_like(2 * n);
  const MpcSolution a = solve_one_node(s.T_min + 2.0, {c.data(), (size_t)n}, {q.data(), (size_t)n}, m, s);
  // a very different (but equally valid) starting point from the previous answer
  const MpcSolution b = solve_one_node(s.T_min + 2.0, {c.data() + 1, (size_t)n},
                                       {q.data() + 1, (size_t)n}, m, s);
  const MpcSolution cold = solve_one_node(a.tank[1], {c.data() + 1, (size_t)n},
                                          {q.data() + 1, (size_t)n}, m, s);
  const MpcSolution warm = solve_one_node(a.tank[1], {c.data() + 1, (size_t)n},
                                          {q.data() + 1, (size_t)n}, m, s, &b);
  EXPECT_NEAR(warm.objective, cold.objective, 1e-6 * std::abs(cold.objective));
}

TEST(OneNodeMpc, PriceMonotonicity) {
  const auto m = models::OneNodeParams::nominal(kPlant);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 12;
    HorizonSpec s = short_spec(n);
    s.comfort_weight = 0.1 + u(rng);
    std::vector<double> q(n);
    for (auto& v : q) v = 2500.0 * u(rng);
    const int k = static_cast<int>(u(rng) * (n - 1));
    double last = std::numeric_limits<double>::infinity();
    for (double price : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      std::vector<double> c(n, 0.0);
      c[k] = price;
      const MpcSolution sol = solve_one_node(s.T_min - 1.0, c, q, m, s);
      EXPECT_LE(sol.p_lower[k], last + 1e-3);
      last = sol.p_lower[k];
    }
  }
}

TEST(OneNodeMpc, SolutionInvariants) {
  const int n = 144;
  const HorizonSpec s = short_spec(n);
  const auto m = models::OneNodeParams::nominal(kPlant);
  const MpcSolution sol = solve_one_node(s.T_min + 1.0, tou_like(n), daily_draws(4, n), m, s);
  EXPECT_NE(sol.status, SolverStatus::Failed);
  EXPECT_LE(sol.kkt_residual, 1e-6);
  EXPECT_DOUBLE_EQ(sol.tank[0], s.T_min + 1.0);
  for (int j = 0; j < n; ++j) {
    EXPECT_GE(sol.p_lower[j], 0.0);
    EXPECT_LE(sol.p_lower[j], s.p_max);
    EXPECT_EQ(sol.p_upper[j], 0.0);
  }
  for (int j = 1; j < n; ++j) EXPECT_LE(sol.tank[j], s.T_max + 1e-6);
}

TEST(OneNodeMpc, ShortInputsRejected) {
  const HorizonSpec s = short_spec(10);
  const auto m = models::OneNodeParams::nominal(kPlant);
  EXPECT_THROW(solve_one_node(330.0, std::vector<double>(5, 0.1), std::vector<double>(10, 0.0), m, s),
               std::invalid_argument);
}

TEST(ThreeNodeMpc, ZeroPricesNoDeficitNearZeroPower) {
  const HorizonSpec s = short_spec(12);
  const auto m = models::ThreeNodeParams::nominal(kPlant);
  const MpcSolution sol = solve_three_node({s.T_min, s.T_min, s.T_min}, std::vector<double>(12, 0.0),
                                           std::vector<double>(12, 0.0), m, s);
  // only standby losses need replacing
  for (int j = 0; j < 12; ++j) EXPECT_LT(sol.p_lower[j] + sol.p_upper[j], 50.0);
}

TEST(ThreeNodeMpc, UpperElementPreferredForUpperDeficit) {
  const HorizonSpec s = short_spec(2);
  const auto m = models::ThreeNodeParams::nominal(kPlant);
  const tank::NodeTemps t0{s.T_min - 3.0, s.T_min - 3.0, s.T_min - 10.0};
  const std::vector<double> c{0.3, 0.3}, q{0.0, 0.0};
  const MpcSolution sol = solve_three_node(t0, c, q, m, s);
  EXPECT_GT(sol.p_upper[0], 1000.0);
  EXPECT_LT(sol.p_lower[0], 1.0);

  // single-element strategies of equal energy, evaluated by hand
  auto objective = [&](double p1, double p2) {
    const auto t1 = models::three_node_step(t0, p1, p2, 0.0, m, s.control_step);
    const double gap = std::max(0.0, s.T_min - t1.upper);
    const double gap0 = std::max(0.0, s.T_min - t0.upper);
    return (c[0] + s.price_floor) * (p1 + p2) * s.control_step / 3.6e6 +
           s.comfort_weight * (gap * gap + gap0 * gap0);
  };
  EXPECT_LT(objective(0.0, 3000.0), objective(3000.0, 0.0));
  EXPECT_LE(sol.objective, objective(0.0, 3000.0) + 1e-6);
}

TEST(ThreeNodeMpc, RandomToysMatchGrid) {
  for (std::uint64_t seed = 200; seed < 203; ++seed) {
    const oracle::ThreeNodeToy t = oracle::random_three_node(seed);
    const double grid = t.search();
    const MpcSolution sol = oracle::solve(t);
    EXPECT_LE(std::abs(sol.objective - grid), 0.01 * std::abs(grid)) << "seed " << seed;
  }
}

TEST(ThreeNodeMpc, OrderingRepairAndInvariants) {
  const int n = 144;
  const HorizonSpec s = short_spec(n);
  const auto m = models::ThreeNodeParams::nominal(kPlant);
  const tank::NodeTemps inverted{s.T_min + 1.0, s.T_min + 3.0, s.T_min + 4.0};
  const MpcSolution sol = solve_three_node(inverted, tou_like(n), daily_draws(5, n), m, s);
  EXPECT_LE(sol.kkt_residual, 1e-6);
  EXPECT_DOUBLE_EQ(sol.nodes[0].upper, inverted.upper);
  EXPECT_DOUBLE_EQ(sol.nodes[0].middle, inverted.upper);
  EXPECT_DOUBLE_EQ(sol.nodes[0].lower, inverted.upper);
  for (int j = 0; j < n; ++j) {
    EXPECT_GE(sol.p_lower[j], 0.0);
    EXPECT_GE(sol.p_upper[j], 0.0);
    EXPECT_LE(sol.p_lower[j] + sol.p_upper[j], s.p_max * (1 + 1e-6));
  }
  for (int j = 1; j <= n; ++j) {
    EXPECT_LE(sol.nodes[j].middle, sol.nodes[j].upper + 1e-6);
    EXPECT_LE(sol.nodes[j].lower, sol.nodes[j].middle + 1e-6);
    EXPECT_LE(sol.nodes[j].upper, s.T_max + 1e-6);
  }
}

TEST(ThreeNodeMpc, DegenerateValveRejected) {
  const HorizonSpec s = short_spec(4);
  const auto m = models::ThreeNodeParams::nominal(kPlant);
  EXPECT_THROW(solve_three_node({m.T_in, m.T_in, m.T_in}, std::vector<double>(4, 0.1),
                                std::vector<double>(4, 0.0), m, s),
               DegenerateValve);
}

TEST(ThreeNodeMpc, DerivativesMatchFiniteDifferences) {
  const int n = 6;
  const HorizonSpec s = short_spec(n);
  const auto m = models::ThreeNodeParams::nominal(kPlant);
  std::vector<double> qd(n, 2000.0);
  const ThreeNodeProgram prog({330.0, 325.0, 310.0}, tou_like(n), qd, m, s);
  VectorXd x = prog.neutral_start();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < x.size(); ++i) x(i) += 0.3 * g(rng);
  VectorXd y(prog.num_equalities());
  for (int i = 0; i < y.size(); ++i) y(i) = g(rng);

  // Jacobian
  std::vector<double> jv;
  prog.jacobian_values(x, jv);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(prog.num_equalities(), prog.num_variables());
  for (std::size_t k = 0; k < jv.size(); ++k)
    J(prog.jacobian_pattern()[k].first, prog.jacobian_pattern()[k].second) += jv[k];
  const double h = 1e-6;
  for (int i = 0; i < prog.num_variables(); ++i) {
    VectorXd xp = x, xm = x, cp, cm;
    xp(i) += h;
    xm(i) -= h;
    prog.equalities(xp, cp);
    prog.equalities(xm, cm);
    const VectorXd fd = (cp - cm) / (2 * h);
    for (int r = 0; r < prog.num_equalities(); ++r) EXPECT_NEAR(J(r, i), fd(r), 1e-6) << r << "," << i;
  }

  // second derivatives of y'c through the Jacobian
  auto grad_yc = [&](const VectorXd& xx) {
    std::vector<double> v;
    prog.jacobian_values(xx, v);
    VectorXd out = VectorXd::Zero(prog.num_variables());
    for (std::size_t k = 0; k < v.size(); ++k)
      out(prog.jacobian_pattern()[k].second) += v[k] * y(prog.jacobian_pattern()[k].first);
    return out;
  };
  for (int j = 1; j < n; ++j) {
    const Eigen::Matrix3d b = prog.constraint_hessian(x, y, j);
    for (int c = 0; c < 3; ++c) {
      VectorXd xp = x, xm = x;
      xp(prog.T(c, j)) += h;
      xm(prog.T(c, j)) -= h;
      const VectorXd fd = (grad_yc(xp) - grad_yc(xm)) / (2 * h);
      for (int r = 0; r < 3; ++r) EXPECT_NEAR(b(r, c), fd(prog.T(r, j)), 1e-5);
    }
  }
}

TEST(ThreeNodeMpc, WarmStartKeepsObjective) {
  const int n = 144;
  const HorizonSpec s = short_spec(n);
  const auto m = models::ThreeNodeParams::nominal(kPlant);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto q = daily_draws(20 + seed, 2 * n);
    const auto c = tou_like(2 * n);
    const tank::NodeTemps t0{s.T_min + 2.0, s.T_min - 1.0, s.T_min - 15.0};
    const MpcSolution first = solve_three_node(t0, {c.data(), (size_t)n}, {q.data(), (size_t)n}, m, s);
    const tank::NodeTemps t1 = first.nodes[1];
    const MpcSolution cold =
        solve_three_node(t1, {c.data() + 1, (size_t)n}, {q.data() + 1, (size_t)n}, m, s);
    const MpcSolution warm =
        solve_three_node(t1, {c.data() + 1, (size_t)n}, {q.data() + 1, (size_t)n}, m, s, &first);
    EXPECT_LE(std::abs(warm.objective - cold.objective), 1e-3 * std::abs(cold.objective));
  }
}
