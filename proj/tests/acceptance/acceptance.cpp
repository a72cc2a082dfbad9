// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles/instances.hpp"
#include "whmpc.hpp"

using namespace whmpc;
using namespace whmpc::harness;

namespace {

constexpr int kHomes = 8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every report produced by any scenario run, for the cross-run limits.
struct Ledger {
  std::vector<MetricsReport> all;
  std::vector<MetricsReport> one_node, three_node;

  void add(const MetricsReport& r) {
    all.push_back(r);
    if (r.controller == to_string(Controller::OneNodeMpc)) one_node.push_back(r);
    if (r.controller == to_string(Controller::ThreeNodeMpc)) three_node.push_back(r);
  }
};

std::vector<MetricsReport> run_all(const std::vector<ScenarioConfig>& cfgs, Ledger& ledger, bool baseline) {
  BatchOptions b;
  b.with_baseline = baseline;
  std::vector<MetricsReport> out;
  for (BatchItem& it : run_batch(cfgs, b)) {
    if (!it.result) throw std::runtime_error(it.config.name + ": " + it.error);
    ledger.add(it.result->report);
    out.push_back(it.result->report);
  }
  return out;
}

ScenarioConfig home(std::uint64_t h, Controller c, const std::string& prices) {
  ScenarioConfig cfg;
  cfg.draw_seed = h;
  cfg.controller = c;
  cfg.prices = prices;
  cfg.sensors = c == Controller::OneNodeMpc ? tank::SensorLayout::OneNode5 : tank::SensorLayout::ThreeNode6;
  cfg.name = fmt("home%d-%s-%s", static_cast<int>(h), std::string(to_string(c)).c_str(), prices.c_str());
  return cfg;
}

ScenarioConfig perfect(ScenarioConfig c) {
  c.estimation = Estimation::PerfectMeasurement;
  c.forecast = {draws::ForecastKind::Perfect, 0.9};
  return c;
}

// ------------------------------------------------------------------ 1

Outcome energy_closure(Ledger& ledger) {
  std::vector<ScenarioConfig> cfgs;
  for (int h = 1; h <= kHomes; ++h) {
    ScenarioConfig c = home(h, Controller::Thermostat, "tou");
    c.warmup_days = 14;  // 14 + 14 days, all under the thermostat
    c.mpc_days = 14;
    c.metric_exclusion_days = 0;
    c.name = fmt("closure-home%d", h);
    cfgs.push_back(c);
  }
  const auto reps = run_all(cfgs, ledger, false);
  double worst = 0.0, slowest = 0.0;
  for (const auto& r : reps) {
    worst = std::max(worst, r.energy_closure_residual);
    slowest = std::max(slowest, r.run_time_s);
  }
  return {worst <= 1e-3 && slowest < 10.0,
          fmt("worst residual %.2e of throughput (limit 1e-3); slowest home-month %.2f s (limit 10 s)", worst, slowest)};
}

// ------------------------------------------------------------------ 2

Outcome estimator_round_trip() {
  const tank::PlantParams plant;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dt = 600.0;
  double worst_rel = 0.0, worst_zero = 0.0;
  auto draw = [&] { return u(rng) < 0.4 ? 0.0 : 100.0 + 5900.0 * u(rng); };
  auto track = [&](double est, double qd, double scale) {
    if (qd > 0.0)
      worst_rel = std::max(worst_rel, std::abs(est - qd) / qd);
    else
      worst_zero = std::max(worst_zero, std::abs(est) / scale);
  };

  // one-node world: four weeks under a thermostat-like policy
  const auto m1 = models::OneNodeParams::nominal(plant);
  double t = fahrenheit_to_kelvin(120.0);
  bool on = false;
  for (int i = 0; i < 28 * 144; ++i) {
    on = t < fahrenheit_to_kelvin(120.0) || (on && t < fahrenheit_to_kelvin(150.0));
    const double p = on ? plant.p_max : 0.0, qd = draw();
    const double next = models::one_node_step(t, p, qd, m1, dt);
    track(draws::estimate_draw_one_node(t, next, p, m1, dt), qd, p + 1.0);
    t = next;
  }

  // three-node world with random element powers
  const auto m3 = models::ThreeNodeParams::nominal(plant);
  tank::NodeTemps n{fahrenheit_to_kelvin(125.0), fahrenheit_to_kelvin(115.0), fahrenheit_to_kelvin(90.0)};
  for (int i = 0; i < 28 * 144; ++i) {
    const bool upper = n.upper < fahrenheit_to_kelvin(135.0);
    const double p1 = upper ? 0.0 : plant.p_max * u(rng), p2 = upper ? plant.p_max * u(rng) : 0.0;
    const double qd = std::min(draw(), 4000.0);
    const tank::NodeTemps next = models::three_node_step(n, p1, p2, qd, m3, dt);
    track(draws::estimate_draw_three_node(n, next, p1, p2, m3, dt), qd, p1 + p2 + 1.0);
    n = next;
    // keep the world in the valve's operating range
    if (n.upper < fahrenheit_to_kelvin(115.0) || n.upper > fahrenheit_to_kelvin(150.0))
      n = {fahrenheit_to_kelvin(125.0), fahrenheit_to_kelvin(115.0), fahrenheit_to_kelvin(90.0)};
  }
  return {worst_rel <= 1e-9 && worst_zero <= 1e-9,
          fmt("worst relative error %.2e on draws, %.2e (of power) on draw-free steps (limit 1e-9)", worst_rel,
              worst_zero)};
}

// ------------------------------------------------------------------ 3

Outcome sensor_ordering(Ledger& ledger) {
  std::vector<ScenarioConfig> cfgs;
  for (int h = 1; h <= kHomes; ++h)
    for (tank::SensorLayout l : tank::kAllSensorLayouts) {
      ScenarioConfig c = home(h, Controller::Thermostat, "tou");
      c.sensors = l;
      c.name = fmt("rmse-home%d-%s", h, std::string(tank::to_string(l)).c_str());
      cfgs.push_back(c);
    }
  const auto reps = run_all(cfgs, ledger, false);
  int ordered = 0;
  std::ostringstream os;
  for (int h = 0; h < kHomes; ++h) {
    double r[5];
    for (int k = 0; k < 5; ++k) r[k] = reps[h * 5 + k].rmse_kw;
    const bool ok = r[0] > r[1] && r[1] > r[2] && r[3] > r[4];
    ordered += ok;
    os << fmt(" h%d[%.3f>%.3f>%.3f|%.3f>%.3f]%s", h + 1, r[0], r[1], r[2], r[3], r[4], ok ? "" : "x");
  }
  return {ordered >= 7, fmt("%d/8 homes ordered (need 7); kW:", ordered) + os.str()};
}

// ------------------------------------------------------------------ 4, 7, 8

struct CostRuns {
  std::vector<MetricsReport> three_dyn, three_tou, one_dyn, one_tou;
};

CostRuns cost_runs(Ledger& ledger) {
  std::vector<ScenarioConfig> cfgs;
  for (int h = 1; h <= kHomes; ++h)
    for (const char* p : {"dynamic", "tou"})
      for (Controller c : {Controller::ThreeNodeMpc, Controller::OneNodeMpc}) cfgs.push_back(perfect(home(h, c, p)));
  const auto reps = run_all(cfgs, ledger, true);
  CostRuns out;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const bool dyn = cfgs[i].prices == "dynamic", three = cfgs[i].controller == Controller::ThreeNodeMpc;
    (three ? (dyn ? out.three_dyn : out.three_tou) : (dyn ? out.one_dyn : out.one_tou)).push_back(reps[i]);
  }
  return out;
}

double mean_rel(const std::vector<MetricsReport>& v) {
  double s = 0.0;
  for (const auto& r : v) s += r.relative_cost;
  return s / static_cast<double>(v.size());
}

double worst_rel(const std::vector<MetricsReport>& v) {
  double w = 0.0;
  for (const auto& r : v) w = std::max(w, r.relative_cost);
  return w;
}

Outcome mpc_beats_thermostat(const CostRuns& c) {
  const double dyn = worst_rel(c.three_dyn), tou = worst_rel(c.three_tou);
  const double m3d = mean_rel(c.three_dyn), m1d = mean_rel(c.one_dyn);
  const double m3t = mean_rel(c.three_tou), m1t = mean_rel(c.one_tou);
  bool positive = true;
  for (const auto* v : {&c.three_dyn, &c.three_tou, &c.one_dyn, &c.one_tou})
    for (const auto& r : *v) positive = positive && r.relative_cost > 0.0;
  const bool pass = positive && dyn < 0.9 && tou < 1.0 && m3d <= m1d && m3t <= m1t;
  return {pass, fmt("three-node worst relative cost dynamic %.3f (<0.9), TOU %.3f (<1.0); cohort means three/one-node "
                    "dynamic %.3f/%.3f, TOU %.3f/%.3f",
                    dyn, tou, m3d, m1d, m3t, m1t)};
}

Outcome hard_limits(const Ledger& ledger) {
  const mpc::HorizonSpec spec;
  const tank::PlantParams plant;
  const double quantum = spec.p_max * plant.sim_step / spec.control_step;
  double top = 0.0, duty = 0.0;
  int mpc_runs = 0;
  for (const auto& r : ledger.all) {
    top = std::max(top, r.max_top_temp_k);
    if (r.controller != to_string(Controller::Thermostat)) {
      duty = std::max(duty, r.max_duty_error_w);
      ++mpc_runs;
    }
  }
  return {top <= spec.T_max + 2.0 && duty <= quantum + 1e-9 && mpc_runs > 0,
          fmt("%zu runs: max top %.2f K vs limit %.2f K; max duty error %.2f W vs %.1f W over %d MPC runs",
              ledger.all.size(), top, spec.T_max + 2.0, duty, quantum, mpc_runs)};
}

Outcome solve_time(const Ledger& ledger) {
  auto mean = [](const std::vector<MetricsReport>& v) {
    double t = 0.0;
    long n = 0;
    for (const auto& r : v) {
      t += r.mean_solve_time_s * r.solves;
      n += r.solves;
    }
    return n ? t / n : 0.0;
  };
  const double t3 = mean(ledger.three_node), t1 = mean(ledger.one_node);
  return {!ledger.three_node.empty() && !ledger.one_node.empty() && t3 < 1.0 && t1 < 0.05,
          fmt("mean solve three-node %.4f s (<1.0), one-node %.4f s (<0.05)", t3, t1)};
}

// ------------------------------------------------------------------ 5

Outcome brute_force() {
  double worst1 = 0.0, worst3 = 0.0;
  int n1 = 0, n3 = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const oracle::OneNodeToy a = oracle::random_one_node(seed);
    const double g1 = a.search();
    worst1 = std::max(worst1, std::abs(oracle::solve(a).objective - g1) / std::abs(g1));
    ++n1;
    const oracle::ThreeNodeToy b = oracle::random_three_node(seed);
    const double g3 = b.search();
    worst3 = std::max(worst3, std::abs(oracle::solve(b).objective - g3) / std::abs(g3));
    ++n3;
  }
  return {worst1 <= 0.01 && worst3 <= 0.01,
          fmt("%d one-node, %d three-node N=4 instances; worst |gap| to 50-level grid search %.3f%% / %.3f%%", n1,
              n3, 100 * worst1, 100 * worst3)};
}

// ------------------------------------------------------------------ 6

Outcome quantile_trend(Ledger& ledger) {
  const std::vector<double> qs = {0.6, 0.7, 0.8, 0.9};
  std::vector<ScenarioConfig> cfgs;
  for (double q : qs) {
    ScenarioConfig c = home(1, Controller::ThreeNodeMpc, "tou");
    c.estimation = Estimation::ModelInversion;
    c.forecast = {draws::ForecastKind::HistoricalQuantile, q};
    c.name = fmt("quantile-%.1f", q);
    cfgs.push_back(c);
  }
  const auto reps = run_all(cfgs, ledger, false);
  bool monotone = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    os << fmt(" q%.1f=%.4f", qs[i], reps[i].cold_draw_fraction);
    if (i > 0 && reps[i].cold_draw_fraction > reps[i - 1].cold_draw_fraction + 0.005) monotone = false;
  }
  const double last = reps.back().cold_draw_fraction;
  return {monotone && last <= 0.01,
          "home 1, three-node estimate+quantile, TOU; cold-draw fraction" + os.str() +
              fmt(" (non-increasing within 0.005: %s; q0.9 <= 0.01: %s)", monotone ? "yes" : "no",
                  last <= 0.01 ? "yes" : "no")};
}

// ------------------------------------------------------------------ 9

Outcome forecast_properties() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int histories = 0;
  bool ok = true;
  std::string why;
  for (int trial = 0; trial < 40 && ok; ++trial, ++histories) {
    draws::DrawHistory h;
    const int days = 1 + trial % 28;
    for (long s = 0; s < days * 144L; ++s) {
      const double x = u(rng);
      // sparse, heavy-tailed, occasionally negative estimates
      h.push(s, x < 0.6 ? (u(rng) - 0.5) * 200.0 : 12000.0 * std::pow(u(rng), 3));
    }
    const long start = days * 144L;
    std::vector<double> prev(144, -1.0);
    for (double q : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0}) {
      const auto f = draws::forecast(h, {draws::ForecastKind::HistoricalQuantile, q}, nullptr, start, 144).values;
      for (int k = 0; k < 144; ++k) {
        if (f[k] < 0.0) ok = false, why = fmt("negative quantile forecast, trial %d", trial);
        if (f[k] < prev[k]) ok = false, why = fmt("quantile decreased in q, trial %d bin %d", trial, k);
        prev[k] = f[k];
      }
    }
    for (double v : draws::forecast(h, {draws::ForecastKind::HistoricalMean, 0.9}, nullptr, start, 144).values)
      if (v < 0.0) ok = false, why = fmt("negative mean forecast, trial %d", trial);
  }
  int constants = 0;
  for (double c : {0.0, 1.0 / 3.0, 123.456789, 4500.0, 1e-7, 7777.7}) {
    draws::DrawHistory h;
    for (long s = 0; s < 28 * 144; ++s) h.push(s, c);
    for (double v : draws::forecast(h, {draws::ForecastKind::HistoricalMean, 0.9}, nullptr, 28 * 144, 144).values)
      if (v != c) ok = false, why = fmt("mean of constant %.17g gave %.17g", c, v);
    ++constants;
  }
  return {ok, ok ? fmt("%d random histories x 12 quantiles x 144 bins monotone and non-negative; %d constant "
                       "histories reproduced exactly",
                       histories, constants)
                 : why};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> sel(only.begin(), only.end());
  auto want = [&](int k) { return sel.empty() || sel.count(k); };

  const char* titles[] = {"",
                          "energy closure",
                          "estimator round trip",
                          "sensor-ordering reproduction",
                          "MPC beats thermostat",
                          "brute-force optimality",
                          "quantile-comfort trend",
                          "lockout and comfort hard limits",
                          "solve-time budget",
                          "forecast correctness"};
  Ledger ledger;
  int failed = 0;
  auto report = [&](int k, const std::function<Outcome()>& f) {
    if (!want(k)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("CRITERION %d %s: %s -- %s\n", k, o.pass ? "PASS" : "FAIL", titles[k], o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, [&] { return energy_closure(ledger); });
  report(2, [&] { return estimator_round_trip(); });
  report(3, [&] { return sensor_ordering(ledger); });
  CostRuns costs;
  const bool need_costs = want(4) || want(7) || want(8);
  if (need_costs) {
    try {
      costs = cost_runs(ledger);
    } catch (const std::exception& e) {
      std::printf("cost runs failed: %s\n", e.what());
    }
  }
  report(4, [&] { return mpc_beats_thermostat(costs); });
  report(5, [&] { return brute_force(); });
  report(6, [&] { return quantile_trend(ledger); });
  report(7, [&] { return hard_limits(ledger); });
  report(8, [&] { return solve_time(ledger); });
  report(9, [&] { return forecast_properties(); });
  return failed ? 1 : 0;
}
