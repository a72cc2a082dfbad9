#pragma once

// Scenario description and its key = value file format. Unknown keys are
// rejected so typos do not silently fall back to defaults.

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "whmpc/core/errors.hpp"
#include "whmpc/draws/forecast.hpp"
#include "whmpc/harness/draw_trace.hpp"
#include "whmpc/mpc/horizon.hpp"
#include "whmpc/tank/plant.hpp"
#include "whmpc/tank/sensors.hpp"

namespace whmpc::harness {

enum class Controller { Thermostat, OneNodeMpc, ThreeNodeMpc };
enum class Estimation { PerfectMeasurement, ModelInversion };
enum class ModelSource { Identified, Nominal };

inline std::string_view to_string(Controller c) {
  switch (c) {
    case Controller::Thermostat: return "thermostat";
    case Controller::OneNodeMpc: return "one_node_mpc";
    case Controller::ThreeNodeMpc: return "three_node_mpc";
  }
  return "?";
}
inline std::string_view to_string(Estimation e) {
  return e == Estimation::PerfectMeasurement ? "perfect_measurement" : "model_inversion";
}
inline std::string_view to_string(ModelSource m) { return m == ModelSource::Identified ? "identified" : "nominal"; }

inline Controller parse_controller(std::string_view s) {
  if (s == "thermostat") return Controller::Thermostat;
  if (s == "one_node_mpc") return Controller::OneNodeMpc;
  if (s == "three_node_mpc") return Controller::ThreeNodeMpc;
  throw std::invalid_argument("unknown controller '" + std::string(s) + "'");
}
inline Estimation parse_estimation(std::string_view s) {
  if (s == "perfect_measurement" || s == "perfect") return Estimation::PerfectMeasurement;
  if (s == "model_inversion" || s == "estimate") return Estimation::ModelInversion;
  throw std::invalid_argument("unknown estimation '" + std::string(s) + "'");
}
inline ModelSource parse_model_source(std::string_view s) {
  if (s == "identified") return ModelSource::Identified;
  if (s == "nominal") return ModelSource::Nominal;
  throw std::invalid_argument("unknown model source '" + std::string(s) + "'");
}

struct ScenarioConfig {
  std::string name = "scenario";
  Controller controller = Controller::ThreeNodeMpc;
  tank::SensorLayout sensors = tank::SensorLayout::ThreeNode6;
  Estimation estimation = Estimation::ModelInversion;
  draws::ForecastMethod forecast{draws::ForecastKind::HistoricalQuantile, 0.9};
  ModelSource model = ModelSource::Identified;
  double coupling = 0.5;          // W/K, three-node inter-node conduction for the nominal model
  std::string prices = "tou";     // built-in id or CSV path
  std::string draw_file;          // empty: synthetic generator
  std::uint64_t draw_seed = 1;
  DrawProfile draw_profile = DrawProfile::for_home(1);
  bool home_profile = true;       // derive the draw profile from draw_seed
  int warmup_days = 28;
  int mpc_days = 28;
  int metric_exclusion_days = 2;
  int history_days = 28;
  mpc::HorizonSpec horizon;
  tank::PlantParams plant;
  double initial_temp = fahrenheit_to_kelvin(120.0);

  int steps_per_day() const { return static_cast<int>(std::lround(kSecondsPerDay / horizon.control_step)); }
  int substeps_per_step() const { return static_cast<int>(std::lround(horizon.control_step / plant.sim_step)); }
  int total_days() const { return warmup_days + mpc_days; }
  long total_steps() const { return static_cast<long>(total_days()) * steps_per_day(); }
  DrawProfile effective_profile() const { return home_profile ? DrawProfile::for_home(draw_seed) : draw_profile; }

  void validate() const {
    horizon.validate();
    plant.validate();
    forecast.validate();
    if (std::abs(horizon.control_step / plant.sim_step - substeps_per_step()) > 1e-9)
      throw std::invalid_argument("config: sim_step must divide the control step");
    if (std::abs(kSecondsPerDay / horizon.control_step - steps_per_day()) > 1e-9)
      throw std::invalid_argument("config: control step must divide one day");
    if (warmup_days < 1) throw std::invalid_argument("config: need at least one warm-up day");
    if (mpc_days < 1 || metric_exclusion_days < 0 || metric_exclusion_days >= mpc_days)
      throw std::invalid_argument("config: need 0 <= metric_exclusion_days < mpc_days");
    if (history_days < 1) throw std::invalid_argument("config: history_days must be >= 1");
    if (controller == Controller::OneNodeMpc && tank::is_three_node(sensors))
      throw std::invalid_argument("config: one_node_mpc needs a 1node sensor layout");
    if (controller == Controller::ThreeNodeMpc && !tank::is_three_node(sensors))
      throw std::invalid_argument("config: three_node_mpc needs a 3node sensor layout");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw std::invalid_argument("config: '" + key + "' expects an integer");
  return static_cast<int>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false");
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  using C = ScenarioConfig;
  using S = const std::string&;
  static const std::map<std::string, Setter> m = {
      {"name", [](C& c, S, S v) { c.name = v; }},
      {"controller", [](C& c, S, S v) { c.controller = parse_controller(v); }},
      {"sensors", [](C& c, S, S v) { c.sensors = tank::parse_sensor_layout(v); }},
      {"estimation", [](C& c, S, S v) { c.estimation = parse_estimation(v); }},
      {"forecast", [](C& c, S, S v) { c.forecast.kind = draws::parse_forecast_kind(v); }},
      {"quantile", [](C& c, S k, S v) { c.forecast.quantile = to_double(k, v); }},
      {"model", [](C& c, S, S v) { c.model = parse_model_source(v); }},
      {"coupling_w_per_k", [](C& c, S k, S v) { c.coupling = to_double(k, v); }},
      {"prices", [](C& c, S, S v) { c.prices = v; }},
      {"draws", [](C& c, S, S v) { c.draw_file = v == "synthetic" ? "" : v; }},
      {"draw_seed", [](C& c, S k, S v) { c.draw_seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"home_profile", [](C& c, S k, S v) { c.home_profile = to_bool(k, v); }},
      {"events_per_day", [](C& c, S k, S v) { c.draw_profile.events_per_day = to_double(k, v); }},
      {"median_event_liters", [](C& c, S k, S v) { c.draw_profile.median_liters = to_double(k, v); }},
      {"event_volume_sigma", [](C& c, S k, S v) { c.draw_profile.volume_sigma = to_double(k, v); }},
      {"draw_flow_lpm", [](C& c, S k, S v) { c.draw_profile.flow_lpm = to_double(k, v); }},
      {"draw_intensity_scale", [](C& c, S k, S v) { c.draw_profile.intensity_scale = to_double(k, v); }},
      {"warmup_days", [](C& c, S k, S v) { c.warmup_days = to_int(k, v); }},
      {"mpc_days", [](C& c, S k, S v) { c.mpc_days = to_int(k, v); }},
      {"metric_exclusion_days", [](C& c, S k, S v) { c.metric_exclusion_days = to_int(k, v); }},
      {"history_days", [](C& c, S k, S v) { c.history_days = to_int(k, v); }},
      {"control_step_s", [](C& c, S k, S v) { c.horizon.control_step = to_double(k, v); }},
      {"horizon_hours", [](C& c, S k, S v) { c.horizon.horizon = to_double(k, v) * kSecondsPerHour; }},
      {"comfort_weight", [](C& c, S k, S v) { c.horizon.comfort_weight = to_double(k, v); }},
      {"t_min_f", [](C& c, S k, S v) { c.horizon.T_min = fahrenheit_to_kelvin(to_double(k, v)); }},
      {"t_max_f", [](C& c, S k, S v) { c.horizon.T_max = fahrenheit_to_kelvin(to_double(k, v)); }},
      {"p_max_w", [](C& c, S k, S v) { c.horizon.p_max = c.plant.p_max = to_double(k, v); }},
      {"non_simultaneous", [](C& c, S k, S v) { c.horizon.non_simultaneous = to_bool(k, v); }},
      {"valve_guard_k", [](C& c, S k, S v) { c.horizon.valve_guard = to_double(k, v); }},
      {"initial_temp_f", [](C& c, S k, S v) { c.initial_temp = fahrenheit_to_kelvin(to_double(k, v)); }},
      {"num_layers", [](C& c, S k, S v) { c.plant.num_layers = to_int(k, v); }},
      {"tank_volume_m3", [](C& c, S k, S v) { c.plant.tank_volume = to_double(k, v); }},
      {"tank_height_m", [](C& c, S k, S v) { c.plant.tank_height = to_double(k, v); }},
      {"ua_total_w_per_k", [](C& c, S k, S v) { c.plant.ua_total = to_double(k, v); }},
      {"diffusion_coeff", [](C& c, S k, S v) { c.plant.diffusion_coeff = to_double(k, v); }},
      {"lower_element_layer", [](C& c, S k, S v) { c.plant.lower_element_layer = to_int(k, v); }},
      {"upper_element_layer", [](C& c, S k, S v) { c.plant.upper_element_layer = to_int(k, v); }},
      {"ambient_f", [](C& c, S k, S v) { c.plant.ambient_temp = fahrenheit_to_kelvin(to_double(k, v)); }},
      {"inlet_f", [](C& c, S k, S v) { c.plant.inlet_temp = fahrenheit_to_kelvin(to_double(k, v)); }},
      {"setpoint_f", [](C& c, S k, S v) { c.plant.mix_setpoint = fahrenheit_to_kelvin(to_double(k, v)); }},
      {"sim_step_s", [](C& c, S k, S v) { c.plant.sim_step = to_double(k, v); }},
  };
  return m;
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value) {
  const auto& m = detail::setters();
  const auto it = m.find(key);
  if (it == m.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second(c, key, value);
}

/// Parses `key = value` lines; `#` starts a comment.
inline ScenarioConfig parse_config(std::istream& in, ScenarioConfig c = {}) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(n) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("config: cannot open '" + path + "'");
  return parse_config(in);
}

/// Writes every setting in the file format; parse_config reads it back.
inline void write_config(std::ostream& out, const ScenarioConfig& c) {
  out.precision(12);
  auto f = [](double k) { return kelvin_to_fahrenheit(k); };
  out << "name = " << c.name << '\n'
      << "controller = " << to_string(c.controller) << '\n'
      << "sensors = " << tank::to_string(c.sensors) << '\n'
      << "estimation = " << to_string(c.estimation) << '\n'
      << "forecast = " << draws::to_string(c.forecast.kind) << '\n'
      << "quantile = " << c.forecast.quantile << '\n'
      << "model = " << to_string(c.model) << '\n'
      << "coupling_w_per_k = " << c.coupling << '\n'
      << "prices = " << c.prices << '\n'
      << "draws = " << (c.draw_file.empty() ? "synthetic" : c.draw_file) << '\n'
      << "draw_seed = " << c.draw_seed << '\n'
      << "home_profile = " << (c.home_profile ? "true" : "false") << '\n'
      << "events_per_day = " << c.draw_profile.events_per_day << '\n'
      << "median_event_liters = " << c.draw_profile.median_liters << '\n'
      << "event_volume_sigma = " << c.draw_profile.volume_sigma << '\n'
      << "draw_flow_lpm = " << c.draw_profile.flow_lpm << '\n'
      << "draw_intensity_scale = " << c.draw_profile.intensity_scale << '\n'
      << "warmup_days = " << c.warmup_days << '\n'
      << "mpc_days = " << c.mpc_days << '\n'
      << "metric_exclusion_days = " << c.metric_exclusion_days << '\n'
      << "history_days = " << c.history_days << '\n'
      << "control_step_s = " << c.horizon.control_step << '\n'
      << "horizon_hours = " << c.horizon.horizon / kSecondsPerHour << '\n'
      << "comfort_weight = " << c.horizon.comfort_weight << '\n'
      << "t_min_f = " << f(c.horizon.T_min) << '\n'
      << "t_max_f = " << f(c.horizon.T_max) << '\n'
      << "p_max_w = " << c.horizon.p_max << '\n'
      << "non_simultaneous = " << (c.horizon.non_simultaneous ? "true" : "false") << '\n'
      << "valve_guard_k = " << c.horizon.valve_guard << '\n'
      << "initial_temp_f = " << f(c.initial_temp) << '\n'
      << "num_layers = " << c.plant.num_layers << '\n'
      << "tank_volume_m3 = " << c.plant.tank_volume << '\n'
      << "tank_height_m = " << c.plant.tank_height << '\n'
      << "ua_total_w_per_k = " << c.plant.ua_total << '\n'
      << "diffusion_coeff = " << c.plant.diffusion_coeff << '\n'
      << "lower_element_layer = " << c.plant.lower_element_layer << '\n'
      << "upper_element_layer = " << c.plant.upper_element_layer << '\n'
      << "ambient_f = " << f(c.plant.ambient_temp) << '\n'
      << "inlet_f = " << f(c.plant.inlet_temp) << '\n'
      << "setpoint_f = " << f(c.plant.mix_setpoint) << '\n'
      << "sim_step_s = " << c.plant.sim_step << '\n';
}

}  // namespace whmpc::harness
