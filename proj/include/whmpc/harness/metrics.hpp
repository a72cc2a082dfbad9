#pragma once

#include <span>
#include <string>
#include <tuple>

#include "whmpc/core/units.hpp"

namespace whmpc::harness {

/// Deliveries at least 10 °F below the mixing setpoint count as cold.
inline constexpr double kColdMarginK = fahrenheit_delta_to_kelvin(10.0);

inline bool is_cold(double delivered_temp, double setpoint) { return delivered_temp <= setpoint - kColdMarginK; }

struct Delivery {
  double volume = 0.0;       // any volume unit
  double temperature = 0.0;  // K
};

/// Volume-weighted fraction of deliveries that are cold; 0 with no volume.
inline double cold_draw_fraction(std::span<const Delivery> log, double setpoint) {
  double total = 0.0, cold = 0.0;
  for (const Delivery& d : log) {
    total += d.volume;
    if (is_cold(d.temperature, setpoint)) cold += d.volume;
  }
  return total > 0.0 ? cold / total : 0.0;
}

struct MetricsReport {
  std::string scenario;
  std::string controller;
  long window_begin_step = 0;   // first control step in the metric window
  long window_end_step = 0;     // one past the last
  double total_cost_usd = 0.0;
  double element_energy_kwh = 0.0;
  double draw_energy_kwh = 0.0;         // energy embodied in drawn water, relative to T_in
  double standby_loss_kwh = 0.0;        // ambient loss over the window
  double stored_energy_change_kwh = 0.0; // tank energy at window end minus window start
  double normalized_cost = 0.0;         // $ per kWh of drawn-water energy
  double baseline_normalized_cost = 0.0;
  double relative_cost = 0.0;           // normalized cost / thermostat baseline; 0 if no baseline
  double delivered_liters = 0.0;
  double cold_liters = 0.0;
  double cold_draw_fraction = 0.0;
  int runout_events = 0;                // control steps with any cold delivery
  double rmse_kw = 0.0;                 // hourly draw-estimate RMSE of the model-inversion estimator
  int solves = 0;
  int solver_failures = 0;
  int lockout_steps = 0;
  int interlock_steps = 0;              // MPC steps where the over-temperature rule cut a commanded substep
  int forecast_unavailable_steps = 0;
  double max_top_temp_k = 0.0;          // over the whole run
  double max_duty_error_w = 0.0;        // realized vs commanded average power, MPC steps without interlock
  double energy_closure_residual = 0.0; // relative to energy throughput, whole run
  std::string model_source;             // identified or nominal (after any fallback)
  std::string notes;
  // wall-clock, excluded from equality
  double mean_solve_time_s = 0.0;  // over all solve attempts
  double max_solve_time_s = 0.0;
  double run_time_s = 0.0;

  /// Equality over the deterministic fields.
  bool same_results(const MetricsReport& o) const {
    auto key = [](const MetricsReport& r) {
      return std::tie(r.scenario, r.controller, r.window_begin_step, r.window_end_step, r.total_cost_usd,
                      r.element_energy_kwh, r.draw_energy_kwh, r.standby_loss_kwh, r.stored_energy_change_kwh,
                      r.normalized_cost, r.baseline_normalized_cost, r.relative_cost, r.delivered_liters,
                      r.cold_liters, r.cold_draw_fraction, r.runout_events, r.rmse_kw, r.solves,
                      r.solver_failures, r.lockout_steps, r.interlock_steps, r.forecast_unavailable_steps,
                      r.max_top_temp_k, r.max_duty_error_w, r.energy_closure_residual, r.model_source, r.notes);
    };
    return key(*this) == key(o);
  }
};

}  // namespace whmpc::harness
