#pragma once

// Layered (1-D stratified) tank used as the ground-truth plant.
//
// Layers have equal volume, index 0 is the bottom. One sim step applies, in
// order: mixing valve -> plug-flow advection -> element heating -> ambient loss
// -> inter-layer diffusion -> buoyancy mixing. Every operator is conservative
// and its energy is booked into the ledgers of TankState, so the stored-energy
// change over any interval closes against the ledgers to round-off.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "whmpc/core/errors.hpp"
#include "whmpc/core/units.hpp"

namespace whmpc::tank {

struct PlantParams {
  int num_layers = 20;
  double tank_volume = 0.189271;    // m^3 (50 gal)
  double tank_height = 1.2;         // m, used for surface-area and diffusion geometry
  double ua_total = 2.0;            // W/K, split across layers by surface area
  double diffusion_coeff = 2.0;     // W/(m K), effective vertical conductivity
  double p_max = 4500.0;            // W per element
  int lower_element_layer = 3;
  int upper_element_layer = 13;
  double ambient_temp = fahrenheit_to_kelvin(70.0);
  double inlet_temp = fahrenheit_to_kelvin(68.0);
  double mix_setpoint = fahrenheit_to_kelvin(120.0);
  double density = 1000.0;          // kg/m^3
  double specific_heat = 4184.0;    // J/(kg K)
  double sim_step = 10.0;           // s

  double rho_cp() const { return density * specific_heat; }
  double layer_volume() const { return tank_volume / num_layers; }
  double layer_capacitance() const { return rho_cp() * layer_volume(); }
  double total_capacitance() const { return rho_cp() * tank_volume; }
  double radius() const { return std::sqrt(tank_volume / (std::numbers::pi * tank_height)); }

  /// Conductance between adjacent layers, W/K.
  double interlayer_conductance() const {
    const double r = radius();
    return diffusion_coeff * std::numbers::pi * r * r / (tank_height / num_layers);
  }

  /// Per-layer insulation conductance; the end layers carry the top/bottom discs.
  std::vector<double> layer_ua() const {
    const double r = radius();
    const double side = 2.0 * std::numbers::pi * r * tank_height / num_layers;
    const double disc = std::numbers::pi * r * r;
    std::vector<double> area(num_layers, side);
    area.front() += disc;
    area.back() += disc;
    const double total = 2.0 * disc + side * num_layers;
    std::vector<double> ua(num_layers);
    for (int k = 0; k < num_layers; ++k) ua[k] = ua_total * area[k] / total;
    return ua;
  }

  void validate() const {
    if (num_layers < 3) throw std::invalid_argument("plant: num_layers must be >= 3");
    if (!(0 <= lower_element_layer && lower_element_layer < upper_element_layer &&
          upper_element_layer < num_layers))
      throw std::invalid_argument("plant: element layers must satisfy 0 <= lower < upper < M");
    for (double v : {tank_volume, tank_height, ua_total, diffusion_coeff, p_max, ambient_temp,
                     inlet_temp, mix_setpoint, density, specific_heat, sim_step})
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("plant: physical parameters must be positive and finite");
  }
};

struct TankState {
  std::vector<double> layer_temps;  // K, index 0 = bottom
  double clock = 0.0;               // s
  double energy_in_elements = 0.0;  // J
  double energy_out_draws = 0.0;    // J
  double energy_lost_ambient = 0.0; // J

  static TankState uniform(const PlantParams& p, double temp) {
    TankState s;
    s.layer_temps.assign(p.num_layers, temp);
    return s;
  }

  double top_temp() const { return layer_temps.back(); }

  /// Absolute stored energy, J (reference 0 K).
  double stored_energy(const PlantParams& p) const {
    double sum = 0.0;
    for (double t : layer_temps) sum += t;
    return p.layer_capacitance() * sum;
  }
};

struct ElementCommand {
  bool lower_on = false;
  bool upper_on = false;

  friend bool operator==(const ElementCommand&, const ElementCommand&) = default;
};

/// Per-step flow bookkeeping reported by step_plant.
struct StepFlows {
  double mixed_volume = 0.0;    // m^3 delivered downstream of the valve
  double outlet_volume = 0.0;   // m^3 drawn from the tank
  double outlet_temp = 0.0;     // K, top layer at the start of the step
  double delivered_temp = 0.0;  // K, mixed water temperature
  double draw_energy = 0.0;     // J removed by the draw (relative to inlet)
  double element_energy = 0.0;  // J
};

/// Thermostatic mixing valve: tank outlet volume needed to deliver `mixed_volume`.
inline double valve_outlet_volume(double mixed_volume, double outlet_temp, const PlantParams& p) {
  if (outlet_temp >= p.mix_setpoint)
    return mixed_volume * (p.mix_setpoint - p.inlet_temp) / (outlet_temp - p.inlet_temp);
  return mixed_volume;
}

inline double valve_delivered_temp(double outlet_temp, const PlantParams& p) {
  return outlet_temp >= p.mix_setpoint ? p.mix_setpoint : outlet_temp;
}

/// Average rate of energy removal by a draw of `draw_volume_out` over one `duration`.
inline double compute_draw_energy(const TankState& before, double draw_volume_out,
                                  const PlantParams& p, double duration) {
  if (draw_volume_out <= 0.0) return 0.0;
  return p.rho_cp() * draw_volume_out * (before.top_temp() - p.inlet_temp) / duration;
}

inline double compute_draw_energy(const TankState& before, double draw_volume_out,
                                  const PlantParams& p) {
  return compute_draw_energy(before, draw_volume_out, p, p.sim_step);
}

namespace detail {

// Upwind plug flow by `fraction` of one layer volume (0 <= fraction <= 1).
// Returns the energy (J, relative to inlet) that left through the top.
inline double advect(std::vector<double>& t, double fraction, const PlantParams& p) {
  const double removed = p.layer_capacitance() * fraction * (t.back() - p.inlet_temp);
  for (std::size_t k = t.size(); k-- > 0;) {
    const double below = k == 0 ? p.inlet_temp : t[k - 1];
    t[k] += fraction * (below - t[k]);
  }
  return removed;
}

// Pool-adjacent-violators on equal-volume layers: merges any run where a lower
// layer is warmer than the one above into its mean until the profile is monotone.
inline void resolve_buoyancy(std::vector<double>& t) {
  struct Block {
    double sum;
    int count;
    double mean() const { return sum / count; }
  };
  std::vector<Block> blocks;
  blocks.reserve(t.size());
  for (double v : t) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  std::size_t k = 0;
  for (const Block& b : blocks) {
    const double m = b.mean();
    for (int i = 0; i < b.count; ++i) t[k++] = m;
  }
}

}  // namespace detail

/// Advances the plant by one sim_step.
inline TankState step_plant(const TankState& state, const PlantParams& p, ElementCommand cmd,
                            double draw_volume_mixed, StepFlows* flows = nullptr) {
  if (draw_volume_mixed < 0.0) throw std::invalid_argument("step_plant: negative draw volume");
  const int m = p.num_layers;
  const double dt = p.sim_step;
  const double c_layer = p.layer_capacitance();
  TankState next = state;
  std::vector<double>& t = next.layer_temps;

  StepFlows f;
  f.mixed_volume = draw_volume_mixed;
  f.outlet_temp = state.top_temp();
  f.delivered_temp = valve_delivered_temp(f.outlet_temp, p);

  // (a) valve, (b) plug flow
  if (draw_volume_mixed > 0.0) {
    f.outlet_volume = valve_outlet_volume(draw_volume_mixed, f.outlet_temp, p);
    const double layers_moved = f.outlet_volume / p.layer_volume();
    const int chunks = std::max(1, static_cast<int>(std::ceil(layers_moved)));
    for (int c = 0; c < chunks; ++c) f.draw_energy += detail::advect(t, layers_moved / chunks, p);
  }

  // (c) elements
  auto heat = [&](int layer) {
    t[layer] += p.p_max * dt / c_layer;
    f.element_energy += p.p_max * dt;
  };
  if (cmd.lower_on) heat(p.lower_element_layer);
  if (cmd.upper_on) heat(p.upper_element_layer);

  // (d) ambient
  const std::vector<double> ua = p.layer_ua();
  double lost = 0.0;
  for (int k = 0; k < m; ++k) {
    const double q = ua[k] * (t[k] - p.ambient_temp) * dt;
    t[k] -= q / c_layer;
    lost += q;
  }

  // (e) diffusion, fluxes from the pre-diffusion profile
  const double g = p.interlayer_conductance() * dt / c_layer;
  std::vector<double> flux(m - 1);
  for (int k = 0; k + 1 < m; ++k) flux[k] = g * (t[k + 1] - t[k]);
  for (int k = 0; k + 1 < m; ++k) {
    t[k] += flux[k];
    t[k + 1] -= flux[k];
  }

  // (f) buoyancy
  detail::resolve_buoyancy(t);

  for (double v : t)
    if (!std::isfinite(v))
      throw SimulationDiverged("step_plant: non-finite layer temperature at t=" +
                               std::to_string(state.clock));

  next.clock = state.clock + dt;
  next.energy_in_elements += f.element_energy;
  next.energy_out_draws += f.draw_energy;
  next.energy_lost_ambient += lost;
  if (flows) *flows = f;
  return next;
}

}  // namespace whmpc::tank
