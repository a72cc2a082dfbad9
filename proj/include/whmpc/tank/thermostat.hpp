#pragma once

#include "whmpc/tank/plant.hpp"
#include "whmpc/tank/sensors.hpp"

namespace whmpc::tank {

/// Contact state of the two element thermostats. A thermostat can be calling
/// for heat while its element is held off by the upper-priority interlock.
struct ThermostatState {
  bool lower_demand = false;
  bool upper_demand = false;

  ElementCommand command() const { return {lower_demand && !upper_demand, upper_demand}; }
};

/// Hysteresis step for the dual-element thermostat. `measured` follows the
/// 3node-3 sensing: `upper` is sensor 8 (above the upper element) and `middle`
/// is sensor 7 (above the lower element), which drives the lower thermostat.
inline ThermostatState thermostat_step(const NodeTemps& measured, ThermostatState prev,
                                       double t_min, double t_max) {
  auto band = [&](double sensed, bool was_on) {
    if (sensed <= t_min) return true;
    if (sensed >= t_max) return false;
    return was_on;
  };
  return {band(measured.middle, prev.lower_demand), band(measured.upper, prev.upper_demand)};
}

/// Reads the thermostat's two sensors using the 3node-3 layout of `sensors`.
inline NodeTemps thermostat_sensing(const TankState& s, const SensorConfig& sensors) {
  SensorConfig cfg = SensorConfig::make(SensorLayout::ThreeNode3);
  cfg.sensor_layer = sensors.sensor_layer;
  return std::get<NodeTemps>(read_sensors(s, cfg));
}

}  // namespace whmpc::tank
