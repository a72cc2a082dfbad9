#pragma once

// Closed-loop experiment: thermostat warm-up (filling the draw history and the
// identification log), then the configured controller, with metrics taken over
// the final mpc_days - metric_exclusion_days days.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "whmpc/draws/estimation.hpp"
#include "whmpc/draws/forecast.hpp"
#include "whmpc/harness/config.hpp"
#include "whmpc/harness/draw_trace.hpp"
#include "whmpc/harness/metrics.hpp"
#include "whmpc/harness/prices.hpp"
#include "whmpc/models/identification.hpp"
#include "whmpc/mpc/duty_cycle.hpp"
#include "whmpc/mpc/one_node_mpc.hpp"
#include "whmpc/mpc/three_node_mpc.hpp"
#include "whmpc/tank/thermostat.hpp"

namespace whmpc::harness {

enum class StepMode : std::uint8_t { Thermostat, Mpc, Lockout, Fallback };

inline std::string_view to_string(StepMode m) {
  switch (m) {
    case StepMode::Thermostat: return "thermostat";
    case StepMode::Mpc: return "mpc";
    case StepMode::Lockout: return "lockout";
    case StepMode::Fallback: return "fallback";
  }
  return "?";
}

/// One control step of the closed loop.
struct StepRecord {
  long step = 0;
  double price = 0.0;                  // $/kWh
  std::array<double, 3> measured{};    // scalar in [0], or upper, middle, lower
  double p1_cmd = 0.0, p2_cmd = 0.0;   // W, optimizer's first-step powers (MPC steps)
  double p1 = 0.0, p2 = 0.0;           // W, realized averages
  double qd_true = 0.0;                // W, plant ledger
  double qd_est = 0.0;                 // W, model-inversion estimate
  double qd_forecast = 0.0;            // W, first forecast value used (MPC steps)
  double mixed_liters = 0.0;
  double cold_liters = 0.0;
  double max_top_temp = 0.0;           // K
  double cost = 0.0;                   // $
  StepMode mode = StepMode::Thermostat;
  bool interlocked = false;            // over-temperature rule cut a commanded substep
  double solve_time = 0.0;             // s
  int iterations = 0;
};

struct SubstepRecord {
  double time = 0.0;          // s, end of substep
  double top_temp = 0.0;      // K
  double mean_temp = 0.0;     // K
  bool lower_on = false, upper_on = false;
  double mixed_liters = 0.0;
  double delivered_temp = 0.0;  // K
};

struct ControlModels {
  models::OneNodeParams one;
  models::ThreeNodeParams three;
  ModelSource source = ModelSource::Nominal;
  std::string note;
};

struct ScenarioLog {
  std::vector<StepRecord> steps;
  std::vector<SubstepRecord> substeps;  // only with RunOptions::record_substeps
  models::IdentificationLog identification;
  std::vector<bool> draw_free;
  ControlModels models;
};

struct RunOptions {
  bool record_substeps = false;
};

struct ScenarioResult {
  MetricsReport report;
  ScenarioLog log;
};

namespace detail {

inline std::vector<double> reading_vector(const tank::SensorReading& r) {
  if (const double* t = std::get_if<double>(&r)) return {*t};
  const auto& n = std::get<tank::NodeTemps>(r);
  return {n.upper, n.middle, n.lower};
}

/// Identification pairs whose whole interval lies between 1 and 5 am.
inline std::vector<bool> night_mask(std::size_t records, int steps_per_day) {
  std::vector<bool> mask(records, false);
  const int begin = steps_per_day / 24, end = 5 * steps_per_day / 24;
  for (std::size_t i = 0; i < records; ++i) {
    const int tod = static_cast<int>(i % static_cast<std::size_t>(steps_per_day));
    mask[i] = tod >= begin && tod + 1 <= end;
  }
  return mask;
}

inline ControlModels fit_models(const ScenarioConfig& c, const models::IdentificationLog& log,
                                const std::vector<bool>& mask) {
  ControlModels m;
  m.one = models::OneNodeParams::nominal(c.plant);
  m.three = models::ThreeNodeParams::nominal(c.plant, c.coupling);
  if (c.model == ModelSource::Nominal) return m;
  try {
    if (tank::is_three_node(c.sensors))
      m.three = models::identify_three_node(log, mask, c.plant.ambient_temp, c.plant.inlet_temp,
                                            c.plant.total_capacitance());
    else
      m.one = models::identify_one_node(log, mask, c.plant.ambient_temp);
    m.source = ModelSource::Identified;
  } catch (const IdentificationInfeasible& e) {
    m.note = std::string("identification failed, using nominal model: ") + e.what();
  }
  return m;
}

/// Hottest installed sensor: the configured ones plus the two thermostat
/// sensors (7 and 8), which every tank carries.
inline double interlock_temp(const tank::TankState& s, const tank::SensorConfig& c) {
  double t = std::max(tank::sensor_temp(s, c, 7), tank::sensor_temp(s, c, 8));
  for (const auto& a : c.states)
    for (auto [id, w] : a.terms) t = std::max(t, tank::sensor_temp(s, c, id));
  return t;
}

inline double estimate(const ControlModels& m, const models::IdentificationRecord& a,
                       const models::IdentificationRecord& b, double dt) {
  if (a.state.size() == 1) return draws::estimate_draw_one_node(a.state[0], b.state[0], a.p1 + a.p2, m.one, dt);
  return draws::estimate_draw_three_node({a.state[0], a.state[1], a.state[2]},
                                         {b.state[0], b.state[1], b.state[2]}, a.p1, a.p2, m.three, dt);
}

}  // namespace detail

/// The draw trace a config refers to, covering at least the simulated days.
inline DrawTrace load_trace(const ScenarioConfig& c) {
  DrawTrace t = c.draw_file.empty()
                    ? generate_synthetic_draws(c.draw_seed, c.total_days() + 1, c.effective_profile())
                    : read_trace_file(c.draw_file);
  if (t.liters.size() * static_cast<std::size_t>(t.resolution) <
      static_cast<std::size_t>(c.total_days()) * static_cast<std::size_t>(kSecondsPerDay))
    throw IngestionError("draw trace shorter than warmup_days + mpc_days");
  if (std::abs(t.resolution / c.plant.sim_step - std::round(t.resolution / c.plant.sim_step)) > 1e-9)
    throw IngestionError("draw trace resolution must be a multiple of sim_step");
  return t;
}

/// Exogenous draw power per control step, W: mixed volume times the lift from
/// inlet to setpoint. Equals the plant's draw energy whenever the outlet is at
/// or above the setpoint. Zero past the end of the trace.
inline draws::DrawSeries exogenous_draws(const ScenarioConfig& c, const DrawTrace& t, long steps) {
  draws::DrawSeries s;
  s.step = c.horizon.control_step;
  s.values.assign(static_cast<std::size_t>(steps), 0.0);
  const double lift = c.plant.rho_cp() * (c.plant.mix_setpoint - c.plant.inlet_temp);
  const long per = std::lround(s.step / t.resolution);
  for (long i = 0; i < steps; ++i)
    for (long k = i * per; k < (i + 1) * per && k < static_cast<long>(t.liters.size()); ++k)
      s.values[static_cast<std::size_t>(i)] += liters_to_cubic_meters(t.liters[static_cast<std::size_t>(k)]);
  for (double& v : s.values) v *= lift / s.step;
  return s;
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
  const auto wall = std::chrono::steady_clock::now();
  cfg.validate();
  const tank::SensorConfig sensors = tank::SensorConfig::make(cfg.sensors);
  sensors.validate(cfg.plant);
  const DrawTrace trace = load_trace(cfg);
  const PriceProfile price_profile = ingest_price(cfg.prices, cfg.horizon.control_step);
  if (static_cast<int>(price_profile.usd_per_kwh.size()) != cfg.steps_per_day())
    throw IngestionError("prices: profile does not span one day");
  const mpc::PricePath prices = price_profile.path();

  const mpc::HorizonSpec& spec = cfg.horizon;
  const tank::PlantParams& plant = cfg.plant;
  const double dt = spec.control_step;
  const int spd = cfg.steps_per_day();
  const int n_sub = cfg.substeps_per_step();
  const int N = spec.steps();
  const long warm_steps = static_cast<long>(cfg.warmup_days) * spd;
  const long total = cfg.total_steps();
  const long window_begin = warm_steps + static_cast<long>(cfg.metric_exclusion_days) * spd;
  const draws::DrawSeries exo = exogenous_draws(cfg, trace, total + N);

  ScenarioResult res;
  ScenarioLog& log = res.log;
  MetricsReport& rep = res.report;
  log.steps.resize(static_cast<std::size_t>(total));
  log.identification.step = dt;
  if (opt.record_substeps) log.substeps.reserve(static_cast<std::size_t>(total * n_sub));

  tank::TankState state = tank::TankState::uniform(plant, cfg.initial_temp);
  const tank::TankState initial = state;
  tank::ThermostatState thermo;
  draws::DrawHistory history(cfg.history_days * spd, spd);
  std::optional<mpc::MpcSolution> warm;
  double solve_time_sum = 0.0;
  long substep_index = 0;

  auto record_reading = [&](long i) {
    const auto v = detail::reading_vector(tank::read_sensors(state, sensors));
    StepRecord& r = log.steps[static_cast<std::size_t>(i)];
    std::copy(v.begin(), v.end(), r.measured.begin());
    log.identification.records.push_back({static_cast<double>(i) * dt, v, 0.0, 0.0});
    return tank::read_sensors(state, sensors);
  };

  // Advances the plant through one control interval. `command(k)` is asked
  // for each substep; null means the thermostat decides.
  auto run_interval = [&](long i, auto&& command) {
    StepRecord& r = log.steps[static_cast<std::size_t>(i)];
    r.step = i;
    r.price = prices.at(i);
    double e_lower = 0.0, e_upper = 0.0, e_draw = 0.0;
    r.max_top_temp = state.top_temp();
    for (int k = 0; k < n_sub; ++k, ++substep_index) {
      thermo = tank::thermostat_step(tank::thermostat_sensing(state, sensors), thermo, spec.T_min, spec.T_max);
      const std::optional<tank::ElementCommand> forced = command(k);
      tank::ElementCommand cmd = forced ? *forced : thermo.command();
      // optimizer commands stay subject to the over-temperature rule between control steps
      if (forced && (cmd.lower_on || cmd.upper_on) &&
          mpc::over_temp_lockout(detail::interlock_temp(state, sensors), spec)) {
        cmd = {};
        r.interlocked = true;
      }
      tank::StepFlows f;
      state = tank::step_plant(state, plant, cmd, trace.substep_volume(substep_index, plant.sim_step), &f);
      if (cmd.lower_on) e_lower += plant.p_max * plant.sim_step;
      if (cmd.upper_on) e_upper += plant.p_max * plant.sim_step;
      e_draw += f.draw_energy;
      const double liters = cubic_meters_to_liters(f.mixed_volume);
      r.mixed_liters += liters;
      if (liters > 0.0 && is_cold(f.delivered_temp, plant.mix_setpoint)) r.cold_liters += liters;
      r.max_top_temp = std::max(r.max_top_temp, state.top_temp());
      if (opt.record_substeps) {
        double mean = 0.0;
        for (double t : state.layer_temps) mean += t;
        log.substeps.push_back({state.clock, state.top_temp(), mean / plant.num_layers, cmd.lower_on,
                                cmd.upper_on, liters, f.delivered_temp});
      }
    }
    r.p1 = e_lower / dt;
    r.p2 = e_upper / dt;
    r.qd_true = e_draw / dt;
    r.cost = r.price * (e_lower + e_upper) / kJoulesPerKwh;
    auto& rec = log.identification.records[static_cast<std::size_t>(i)];
    rec.p1 = r.p1;
    rec.p2 = r.p2;
  };
  auto thermostat_only = [](int) { return std::optional<tank::ElementCommand>{}; };

  // warm-up
  for (long i = 0; i < warm_steps; ++i) {
    record_reading(i);
    run_interval(i, thermostat_only);
  }

  // models from the warm-up, then the warm-up draw history
  {
    models::IdentificationLog idlog = log.identification;
    idlog.records.push_back({static_cast<double>(warm_steps) * dt,
                             detail::reading_vector(tank::read_sensors(state, sensors)), 0.0, 0.0});
    log.draw_free = detail::night_mask(idlog.records.size(), spd);
    log.models = detail::fit_models(cfg, idlog, log.draw_free);
    for (long i = 0; i < warm_steps; ++i) {
      StepRecord& r = log.steps[static_cast<std::size_t>(i)];
      r.qd_est = detail::estimate(log.models, idlog.records[static_cast<std::size_t>(i)],
                                  idlog.records[static_cast<std::size_t>(i + 1)], dt);
      history.push(i, cfg.estimation == Estimation::ModelInversion ? r.qd_est : r.qd_true);
    }
  }

  // controller phase
  tank::TankState window_start = state;
  for (long i = warm_steps; i < total; ++i) {
    if (i == window_begin) window_start = state;
    const tank::SensorReading reading = record_reading(i);
    StepRecord& r = log.steps[static_cast<std::size_t>(i)];

    if (cfg.controller == Controller::Thermostat) {
      r.mode = StepMode::Thermostat;
      run_interval(i, thermostat_only);
    } else if (mpc::over_temp_lockout(tank::lockout_temp(reading), spec)) {
      r.mode = StepMode::Lockout;
      ++rep.lockout_steps;
      run_interval(i, [](int) { return std::optional<tank::ElementCommand>(tank::ElementCommand{}); });
    } else {
      std::vector<double> fc;
      try {
        fc = draws::forecast(history, cfg.forecast, &exo, i, N).values;
      } catch (const ForecastUnavailable&) {
        fc.assign(static_cast<std::size_t>(N), 0.0);
        ++rep.forecast_unavailable_steps;
      }
      r.qd_forecast = fc.front();
      const std::vector<double> c = prices.window(i, N);
      std::optional<mpc::MpcSolution> sol;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        ++rep.solves;
        const mpc::MpcSolution* ws = warm ? &*warm : nullptr;
        if (cfg.controller == Controller::OneNodeMpc)
          sol = mpc::solve_one_node(std::get<double>(reading), c, fc, log.models.one, spec, ws);
        else
          sol = mpc::solve_three_node(std::get<tank::NodeTemps>(reading), c, fc, log.models.three, spec, ws);
      } catch (const SolverFailure&) {
        ++rep.solver_failures;
      } catch (const DegenerateValve&) {
        ++rep.solver_failures;
      }
      // wall clock per attempt, failures included
      r.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      solve_time_sum += r.solve_time;
      rep.max_solve_time_s = std::max(rep.max_solve_time_s, r.solve_time);
      if (sol) {
        r.mode = StepMode::Mpc;
        r.iterations = sol->iterations;
        r.p1_cmd = sol->p_lower.front();
        r.p2_cmd = sol->p_upper.front();
        const mpc::DutyCycle duty = mpc::to_duty_cycle(*sol, spec);
        run_interval(i, [&](int k) {
          return std::optional<tank::ElementCommand>(mpc::schedule_elements(duty, k, spec, plant.sim_step));
        });
        if (r.interlocked)
          ++rep.interlock_steps;
        else
          rep.max_duty_error_w =
              std::max({rep.max_duty_error_w, std::abs(r.p1 - duty.alpha1 * spec.p_max),
                        std::abs(r.p2 - duty.alpha2 * spec.p_max)});
        warm = std::move(sol);
      } else {
        r.mode = StepMode::Fallback;
        run_interval(i, thermostat_only);
      }
    }

    // estimate for step i, now that the next reading is known
    const auto next = detail::reading_vector(tank::read_sensors(state, sensors));
    models::IdentificationRecord after{static_cast<double>(i + 1) * dt, next, 0.0, 0.0};
    r.qd_est = detail::estimate(log.models, log.identification.records[static_cast<std::size_t>(i)], after, dt);
    history.push(i, cfg.estimation == Estimation::ModelInversion ? r.qd_est : r.qd_true);
  }

  // metrics
  rep.scenario = cfg.name;
  rep.controller = std::string(to_string(cfg.controller));
  rep.window_begin_step = window_begin;
  rep.window_end_step = total;
  rep.model_source = std::string(to_string(log.models.source));
  rep.notes = log.models.note;
  double e_elem = 0.0, e_draw = 0.0;
  draws::DrawSeries est, truth;
  est.start_step = truth.start_step = window_begin;
  est.step = truth.step = dt;
  for (long i = 0; i < total; ++i) {
    const StepRecord& r = log.steps[static_cast<std::size_t>(i)];
    rep.max_top_temp_k = std::max(rep.max_top_temp_k, r.max_top_temp);
    if (i < window_begin) continue;
    rep.total_cost_usd += r.cost;
    e_elem += (r.p1 + r.p2) * dt;
    e_draw += r.qd_true * dt;
    rep.delivered_liters += r.mixed_liters;
    rep.cold_liters += r.cold_liters;
    if (r.cold_liters > 0.0) ++rep.runout_events;
    est.values.push_back(r.qd_est);
    truth.values.push_back(r.qd_true);
  }
  rep.element_energy_kwh = e_elem / kJoulesPerKwh;
  rep.draw_energy_kwh = e_draw / kJoulesPerKwh;
  rep.normalized_cost = rep.draw_energy_kwh > 0.0 ? rep.total_cost_usd / rep.draw_energy_kwh : 0.0;
  rep.cold_draw_fraction = rep.delivered_liters > 0.0 ? rep.cold_liters / rep.delivered_liters : 0.0;
  rep.rmse_kw = draws::hourly_rmse(est, truth);
  rep.mean_solve_time_s = rep.solves > 0 ? solve_time_sum / rep.solves : 0.0;

  rep.standby_loss_kwh = (state.energy_lost_ambient - window_start.energy_lost_ambient) / kJoulesPerKwh;
  rep.stored_energy_change_kwh = (state.stored_energy(plant) - window_start.stored_energy(plant)) / kJoulesPerKwh;
  const double d_stored = state.stored_energy(plant) - initial.stored_energy(plant);
  const double through = state.energy_in_elements + state.energy_out_draws + std::abs(state.energy_lost_ambient);
  rep.energy_closure_residual =
      std::abs(d_stored - (state.energy_in_elements - state.energy_out_draws - state.energy_lost_ambient)) /
      (through + 1.0);
  rep.run_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall).count();
  return res;
}

/// The thermostat run paired with a scenario: same plant, trace and prices.
inline ScenarioConfig baseline_of(ScenarioConfig c) {
  c.controller = Controller::Thermostat;
  c.name += "-baseline";
  return c;
}

inline void attach_baseline(MetricsReport& r, const MetricsReport& baseline) {
  r.baseline_normalized_cost = baseline.normalized_cost;
  r.relative_cost = baseline.normalized_cost > 0.0 ? r.normalized_cost / baseline.normalized_cost : 0.0;
}

}  // namespace whmpc::harness
