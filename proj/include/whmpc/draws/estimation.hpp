#pragma once

// Draw estimation by inverting the control-model energy balance over one
// control step. Results may be negative under plant-model mismatch.

#include <stdexcept>

#include "whmpc/models/one_node.hpp"
#include "whmpc/models/three_node.hpp"

namespace whmpc::draws {

inline double estimate_draw_one_node(double T_prev, double T_now, double p1_prev,
                                     const models::OneNodeParams& m, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("estimate_draw_one_node: dt must be positive");
  return p1_prev + m.U * (m.T_a - T_prev) - m.C / dt * (T_now - T_prev);
}

/// Total-energy balance of the three nodes; advection and conduction are
/// internal and cancel, so only losses, element power and stored energy remain.
inline double estimate_draw_three_node(const tank::NodeTemps& prev, const tank::NodeTemps& now,
                                       double p1_prev, double p2_prev,
                                       const models::ThreeNodeParams& m, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("estimate_draw_three_node: dt must be positive");
  const double losses = m.U_u * (m.T_a - prev.upper) + m.U_m * (m.T_a - prev.middle) +
                        m.U_l * (m.T_a - prev.lower);
  const double stored = m.C_u * (now.upper - prev.upper) + m.C_m * (now.middle - prev.middle) +
                        m.C_l * (now.lower - prev.lower);
  return p1_prev + p2_prev + losses - stored / dt;
}

}  // namespace whmpc::draws
