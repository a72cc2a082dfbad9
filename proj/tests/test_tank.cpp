#include <gtest/gtest.h>

#include <random>

#include "whmpc/tank/plant.hpp"
#include "whmpc/tank/sensors.hpp"
#include "whmpc/tank/thermostat.hpp"

using namespace whmpc;
using namespace whmpc::tank;

namespace {

PlantParams plant() { return PlantParams{}; }

TankState stratified(const PlantParams& p, double bottom_f, double top_f) {
  TankState s;
  for (int k = 0; k < p.num_layers; ++k)
    s.layer_temps.push_back(
        fahrenheit_to_kelvin(bottom_f + (top_f - bottom_f) * k / (p.num_layers - 1)));
  return s;
}

double closure_residual(const TankState& a, const TankState& b, const PlantParams& p) {
  const double d_stored = b.stored_energy(p) - a.stored_energy(p);
  const double e_in = b.energy_in_elements - a.energy_in_elements;
  const double e_draw = b.energy_out_draws - a.energy_out_draws;
  const double e_amb = b.energy_lost_ambient - a.energy_lost_ambient;
  // inlet water replaces outlet water; draw energy is booked relative to T_in
  return std::abs(d_stored - (e_in - e_draw - e_amb));
}

}  // namespace

TEST(Plant, AmbientEquilibriumIsFixedPoint) {
  PlantParams p = plant();
  const TankState s0 = TankState::uniform(p, p.ambient_temp);
  const TankState s1 = step_plant(s0, p, {}, 0.0);
  EXPECT_EQ(s1.layer_temps, s0.layer_temps);
  EXPECT_DOUBLE_EQ(s1.clock, p.sim_step);
}

TEST(Plant, ValveScalesOutletVolumeWhenTankIsHot) {
  PlantParams p = plant();
  const double out = valve_outlet_volume(1.0e-3, fahrenheit_to_kelvin(150.0), p);
  EXPECT_NEAR(out * 1e3, (120.0 - 68.0) / (150.0 - 68.0), 1e-12);
  EXPECT_NEAR(out * 1e3, 0.634, 5e-4);

  TankState s = TankState::uniform(p, fahrenheit_to_kelvin(150.0));
  StepFlows f;
  step_plant(s, p, {}, 1.0e-3, &f);
  EXPECT_NEAR(f.outlet_volume, out, 1e-15);
  EXPECT_DOUBLE_EQ(f.delivered_temp, p.mix_setpoint);
}

TEST(Plant, ValveFullyOpenBelowSetpoint) {
  PlantParams p = plant();
  TankState s = TankState::uniform(p, fahrenheit_to_kelvin(110.0));
  StepFlows f;
  step_plant(s, p, {}, 1.0e-3, &f);
  EXPECT_DOUBLE_EQ(f.outlet_volume, 1.0e-3);
  EXPECT_DOUBLE_EQ(f.delivered_temp, s.top_temp());
}

TEST(Plant, DrawEnergyArithmetic) {
  PlantParams p = plant();
  const TankState s = TankState::uniform(p, fahrenheit_to_kelvin(150.0));
  const double lift = (150.0 - 68.0) * 5.0 / 9.0;
  const double expect = 1000.0 * 4184.0 * (0.634e-3 / 600.0) * lift;
  EXPECT_NEAR(compute_draw_energy(s, 0.634e-3, p, 600.0), expect, 1e-9);
  EXPECT_NEAR(expect, 201.0, 1.0);
  EXPECT_EQ(compute_draw_energy(s, 0.0, p, 600.0), 0.0);
  const TankState cold = TankState::uniform(p, p.inlet_temp);
  EXPECT_EQ(compute_draw_energy(cold, 1e-3, p, 600.0), 0.0);
}

TEST(Plant, DrawEnergyIndependentOfOutletTempAboveSetpoint) {
  PlantParams p = plant();
  for (double f_top : {120.0, 130.0, 145.0, 160.0}) {
    const TankState s = TankState::uniform(p, fahrenheit_to_kelvin(f_top));
    const double v = valve_outlet_volume(2e-3, s.top_temp(), p);
    EXPECT_NEAR(compute_draw_energy(s, v, p, 60.0),
                p.rho_cp() * 2e-3 * (p.mix_setpoint - p.inlet_temp) / 60.0, 1e-9);
  }
}

TEST(Plant, EnergyClosureAndOrderingUnderRandomOperation) {
  PlantParams p = plant();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TankState s = stratified(p, 70.0, 135.0);
  const TankState start = s;
  for (int i = 0; i < 20000; ++i) {
    const ElementCommand cmd{u(rng) < 0.3, u(rng) < 0.2};
    const double v = u(rng) < 0.1 ? u(rng) * 2e-3 : 0.0;
    const TankState next = step_plant(s, p, cmd, v);
    EXPECT_LE(closure_residual(s, next, p),
              1e-3 * (next.energy_in_elements - s.energy_in_elements + next.energy_out_draws -
                      s.energy_out_draws + std::abs(next.energy_lost_ambient - s.energy_lost_ambient) + 1.0));
    for (int k = 0; k + 1 < p.num_layers; ++k) ASSERT_LE(next.layer_temps[k], next.layer_temps[k + 1]);
    EXPECT_GE(next.energy_in_elements, s.energy_in_elements);
    EXPECT_GE(next.energy_out_draws, s.energy_out_draws);
    s = next;
  }
  const double through = s.energy_in_elements + s.energy_out_draws + std::abs(s.energy_lost_ambient);
  EXPECT_LE(closure_residual(start, s, p), 1e-6 * through);
}

TEST(Plant, LargeDrawIsSubdividedAndConservesEnergy) {
  PlantParams p = plant();
  const TankState s = TankState::uniform(p, fahrenheit_to_kelvin(140.0));
  StepFlows f;
  const TankState n = step_plant(s, p, {}, 3.5 * p.layer_volume(), &f);
  EXPECT_LE(closure_residual(s, n, p), 1e-6 * f.draw_energy);
  EXPECT_NEAR(n.layer_temps.front(), p.inlet_temp, 0.5);
}

TEST(Plant, BuoyancyMergesInversions) {
  std::vector<double> t{300, 310, 305, 320, 315, 314};
  detail::resolve_buoyancy(t);
  EXPECT_DOUBLE_EQ(t[1], 307.5);
  EXPECT_DOUBLE_EQ(t[2], 307.5);
  EXPECT_NEAR(t[3], (320.0 + 315 + 314) / 3.0, 1e-12);
  EXPECT_NEAR(t[5], t[3], 1e-12);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) EXPECT_LE(t[k], t[k + 1]);
}

TEST(Plant, NonFiniteStateRaises) {
  PlantParams p = plant();
  TankState s = TankState::uniform(p, 330.0);
  s.layer_temps[5] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step_plant(s, p, {}, 0.0), SimulationDiverged);
  EXPECT_THROW(step_plant(s, p, {}, -1.0), std::invalid_argument);
}

TEST(Plant, StandbyLossIsPlausible) {
  PlantParams p = plant();
  TankState s = TankState::uniform(p, fahrenheit_to_kelvin(125.0));
  const int steps = static_cast<int>(kSecondsPerDay / p.sim_step);
  for (int i = 0; i < steps; ++i) s = step_plant(s, p, {}, 0.0);
  const double kwh = s.energy_lost_ambient / kJoulesPerKwh;
  // 2 W/K across ~30 K for a day
  EXPECT_GT(kwh, 1.0);
  EXPECT_LT(kwh, 1.6);
}

TEST(Sensors, UniformTankReadsUniform) {
  PlantParams p = plant();
  const TankState s = TankState::uniform(p, 330.0);
  for (SensorLayout l : kAllSensorLayouts) {
    const SensorConfig c = SensorConfig::make(l);
    c.validate(p);
    const SensorReading r = read_sensors(s, c);
    if (is_three_node(l)) {
      const NodeTemps n = std::get<NodeTemps>(r);
      EXPECT_DOUBLE_EQ(n.upper, 330.0);
      EXPECT_DOUBLE_EQ(n.middle, 330.0);
      EXPECT_DOUBLE_EQ(n.lower, 330.0);
    } else {
      EXPECT_NEAR(std::get<double>(r), 330.0, 1e-12);
    }
  }
}

TEST(Sensors, TableAggregations) {
  PlantParams p = plant();
  TankState s = TankState::uniform(p, 300.0);
  SensorConfig two = SensorConfig::make(SensorLayout::OneNode2);
  s.layer_temps[two.sensor_layer[7]] = 320.0;
  s.layer_temps[two.sensor_layer[8]] = 330.0;
  EXPECT_DOUBLE_EQ(std::get<double>(read_sensors(s, two)), 325.0);

  SensorConfig six = SensorConfig::make(SensorLayout::ThreeNode6);
  TankState t = TankState::uniform(p, 300.0);
  t.layer_temps[six.sensor_layer[2]] = 310.0;
  t.layer_temps[six.sensor_layer[3]] = 312.0;
  t.layer_temps[six.sensor_layer[4]] = 314.0;
  EXPECT_NEAR(std::get<NodeTemps>(read_sensors(t, six)).middle, 312.0, 1e-12);
}

TEST(Sensors, ParseAndValidate) {
  EXPECT_EQ(parse_sensor_layout("1node-5"), SensorLayout::OneNode5);
  EXPECT_EQ(parse_sensor_layout("3node-6"), SensorLayout::ThreeNode6);
  EXPECT_THROW(parse_sensor_layout("2node-4"), std::invalid_argument);
  SensorConfig c = SensorConfig::make(SensorLayout::OneNode1);
  c.sensor_layer[7] = 40;
  EXPECT_THROW(c.validate(plant()), std::invalid_argument);
}

TEST(Thermostat, BothAboveMaxTurnsOff) {
  const double lo = fahrenheit_to_kelvin(120), hi = fahrenheit_to_kelvin(150);
  const NodeTemps m{fahrenheit_to_kelvin(151), fahrenheit_to_kelvin(151), 300};
  const ThermostatState st = thermostat_step(m, {true, true}, lo, hi);
  EXPECT_EQ(st.command(), (ElementCommand{false, false}));
}

TEST(Thermostat, UpperHasPriority) {
  const double lo = fahrenheit_to_kelvin(120), hi = fahrenheit_to_kelvin(150);
  const NodeTemps m{fahrenheit_to_kelvin(118), fahrenheit_to_kelvin(118), 300};
  const ThermostatState st = thermostat_step(m, {}, lo, hi);
  EXPECT_EQ(st.command(), (ElementCommand{false, true}));
  EXPECT_TRUE(st.lower_demand);
}

TEST(Thermostat, HoldsInsideDeadband) {
  const double lo = fahrenheit_to_kelvin(120), hi = fahrenheit_to_kelvin(150);
  const NodeTemps m{fahrenheit_to_kelvin(140), fahrenheit_to_kelvin(140), 300};
  EXPECT_TRUE(thermostat_step(m, {false, true}, lo, hi).command().upper_on);
  EXPECT_FALSE(thermostat_step(m, {false, false}, lo, hi).command().upper_on);
  // lower resumes once the upper is satisfied
  const NodeTemps after{fahrenheit_to_kelvin(150), fahrenheit_to_kelvin(130), 300};
  EXPECT_EQ(thermostat_step(after, {true, true}, lo, hi).command(), (ElementCommand{true, false}));
}
