#pragma once

#include <stdexcept>

#include "whmpc/tank/plant.hpp"

namespace whmpc::models {

/// Fully-mixed tank: C dT/dt = p + U (T_a - T) - Q_d.
struct OneNodeParams {
  double C = 0.0;    // J/K
  double U = 0.0;    // W/K
  double T_a = 0.0;  // K

  static OneNodeParams nominal(const tank::PlantParams& p) {
    return {p.total_capacitance(), p.ua_total, p.ambient_temp};
  }

  void validate() const {
    if (!(C > 0.0)) throw std::invalid_argument("one-node: C must be positive");
    if (!(U >= 0.0)) throw std::invalid_argument("one-node: U must be non-negative");
  }
};

/// Forward-Euler step; p and qd are averages over the step, in W.
inline double one_node_step(double T, double p, double qd, const OneNodeParams& m, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("one_node_step: dt must be positive");
  return T + dt / m.C * (p + m.U * (m.T_a - T) - qd);
}

}  // namespace whmpc::models
