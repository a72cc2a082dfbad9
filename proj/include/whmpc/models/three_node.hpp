#pragma once

#include <stdexcept>
#include <string>

#include "whmpc/core/errors.hpp"
#include "whmpc/tank/plant.hpp"
#include "whmpc/tank/sensors.hpp"

namespace whmpc::models {

using tank::NodeTemps;

/// Three-node stratified model: upper (above the upper element), middle
/// (between the elements), lower (below the lower element).
///
/// With the mixing valve the tank outflow carries Q_d / (Tu - T_in) W/K of
/// heat-capacity flow; it pushes inlet water into the lower node, lower into
/// middle, middle into upper, and upper out of the tank. The lower element
/// (p1) heats the middle node and the upper element (p2) heats the upper node.
struct ThreeNodeParams {
  double C_u = 0.0, C_m = 0.0, C_l = 0.0;  // J/K
  double U_u = 0.0, U_m = 0.0, U_l = 0.0;  // W/K
  double K_um = 0.5;                       // W/K, upper <-> middle conduction
  double K_ml = 0.5;                       // W/K, middle <-> lower conduction
  double T_a = 0.0;                        // K
  double T_in = 0.0;                       // K

  double total_capacitance() const { return C_u + C_m + C_l; }

  /// Node sizes from the element positions of the layered plant.
  static ThreeNodeParams nominal(const tank::PlantParams& p, double coupling = 0.5) {
    const auto ua = p.layer_ua();
    ThreeNodeParams m;
    const double c = p.layer_capacitance();
    for (int k = 0; k < p.num_layers; ++k) {
      if (k < p.lower_element_layer) {
        m.C_l += c;
        m.U_l += ua[k];
      } else if (k < p.upper_element_layer) {
        m.C_m += c;
        m.U_m += ua[k];
      } else {
        m.C_u += c;
        m.U_u += ua[k];
      }
    }
    m.K_um = m.K_ml = coupling;
    m.T_a = p.ambient_temp;
    m.T_in = p.inlet_temp;
    return m;
  }

  void validate() const {
    if (!(C_u > 0.0 && C_m > 0.0 && C_l > 0.0))
      throw std::invalid_argument("three-node: capacitances must be positive");
    if (!(U_u >= 0.0 && U_m >= 0.0 && U_l >= 0.0 && K_um >= 0.0 && K_ml >= 0.0))
      throw std::invalid_argument("three-node: conductances must be non-negative");
  }
};

/// Net heat rate into each node, W.
inline NodeTemps three_node_heat_rates(const NodeTemps& T, double p1, double p2, double qd,
                                       const ThreeNodeParams& m) {
  const double lift = T.upper - m.T_in;
  if (!(lift > 0.0))
    throw DegenerateValve("three-node: upper node at or below inlet temperature (" +
                          std::to_string(T.upper) + " K)");
  const double flow = qd / lift;  // rho c_p v_out, W/K
  NodeTemps q;
  q.upper = p2 + m.U_u * (m.T_a - T.upper) + flow * (T.middle - T.upper) +
            m.K_um * (T.middle - T.upper);
  q.middle = p1 + m.U_m * (m.T_a - T.middle) + flow * (T.lower - T.middle) +
             m.K_um * (T.upper - T.middle) + m.K_ml * (T.lower - T.middle);
  q.lower = m.U_l * (m.T_a - T.lower) + flow * (m.T_in - T.lower) + m.K_ml * (T.middle - T.lower);
  return q;
}

inline NodeTemps three_node_step(const NodeTemps& T, double p1, double p2, double qd,
                                 const ThreeNodeParams& m, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("three_node_step: dt must be positive");
  const NodeTemps q = three_node_heat_rates(T, p1, p2, qd, m);
  return {T.upper + dt / m.C_u * q.upper, T.middle + dt / m.C_m * q.middle,
          T.lower + dt / m.C_l * q.lower};
}

}  // namespace whmpc::models
