#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "whmpc/tank/plant.hpp"

namespace whmpc::tank {

/// Upper, middle and lower node temperatures, K.
struct NodeTemps {
  double upper = 0.0;
  double middle = 0.0;
  double lower = 0.0;

  friend bool operator==(const NodeTemps&, const NodeTemps&) = default;
};

enum class SensorLayout { OneNode1, OneNode2, OneNode5, ThreeNode3, ThreeNode6 };

inline constexpr std::array<SensorLayout, 5> kAllSensorLayouts = {
    SensorLayout::OneNode1, SensorLayout::OneNode2, SensorLayout::OneNode5,
    SensorLayout::ThreeNode3, SensorLayout::ThreeNode6};

inline std::string_view to_string(SensorLayout s) {
  switch (s) {
    case SensorLayout::OneNode1: return "1node-1";
    case SensorLayout::OneNode2: return "1node-2";
    case SensorLayout::OneNode5: return "1node-5";
    case SensorLayout::ThreeNode3: return "3node-3";
    case SensorLayout::ThreeNode6: return "3node-6";
  }
  return "?";
}

inline SensorLayout parse_sensor_layout(std::string_view name) {
  for (SensorLayout s : kAllSensorLayouts)
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown sensor configuration '" + std::string(name) + "'");
}

inline bool is_three_node(SensorLayout s) {
  return s == SensorLayout::ThreeNode3 || s == SensorLayout::ThreeNode6;
}

/// One averaged state: weights over physical sensor ids 1..8.
struct SensorAverage {
  std::vector<std::pair<int, double>> terms;
};

struct SensorConfig {
  SensorLayout layout = SensorLayout::ThreeNode3;
  // sensor id (1..8) -> plant layer; entry 0 unused
  std::array<int, 9> sensor_layer{-1, 1, 4, 8, 11, 15, 18, 4, 14};
  // one entry for one-node layouts; upper, middle, lower for three-node layouts
  std::vector<SensorAverage> states;

  static SensorConfig make(SensorLayout layout) {
    SensorConfig c;
    c.layout = layout;
    auto mean = [](std::initializer_list<int> ids) {
      SensorAverage a;
      for (int id : ids) a.terms.emplace_back(id, 1.0 / static_cast<double>(ids.size()));
      return a;
    };
    switch (layout) {
      case SensorLayout::OneNode1: c.states = {mean({7})}; break;
      case SensorLayout::OneNode2: c.states = {mean({7, 8})}; break;
      case SensorLayout::OneNode5: c.states = {mean({2, 3, 4, 5, 6})}; break;
      case SensorLayout::ThreeNode3: c.states = {mean({8}), mean({7}), mean({1})}; break;
      case SensorLayout::ThreeNode6: c.states = {mean({5, 6}), mean({2, 3, 4}), mean({1})}; break;
    }
    return c;
  }

  void validate(const PlantParams& p) const {
    if (states.size() != (is_three_node(layout) ? 3u : 1u))
      throw std::invalid_argument("sensor config: wrong number of states for layout");
    for (const auto& s : states) {
      double sum = 0.0;
      for (auto [id, w] : s.terms) {
        if (id < 1 || id > 8) throw std::invalid_argument("sensor config: sensor id out of range");
        if (sensor_layer[id] < 0 || sensor_layer[id] >= p.num_layers)
          throw std::invalid_argument("sensor config: sensor mapped outside the tank");
        if (w < 0.0) throw std::invalid_argument("sensor config: negative weight");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("sensor config: weights must sum to 1");
    }
  }
};

using SensorReading = std::variant<double, NodeTemps>;

inline double sensor_temp(const TankState& s, const SensorConfig& c, int id) {
  return s.layer_temps.at(c.sensor_layer.at(id));
}

inline double aggregate(const TankState& s, const SensorConfig& c, const SensorAverage& a) {
  double v = 0.0;
  for (auto [id, w] : a.terms) v += w * sensor_temp(s, c, id);
  return v;
}

inline SensorReading read_sensors(const TankState& s, const SensorConfig& c) {
  if (c.states.size() == 1) return aggregate(s, c, c.states[0]);
  return NodeTemps{aggregate(s, c, c.states[0]), aggregate(s, c, c.states[1]),
                   aggregate(s, c, c.states[2])};
}

/// The state used for over-temperature lockout: the scalar, or the upper node.
inline double lockout_temp(const SensorReading& r) {
  if (const double* t = std::get_if<double>(&r)) return *t;
  return std::get<NodeTemps>(r).upper;
}

}  // namespace whmpc::tank
