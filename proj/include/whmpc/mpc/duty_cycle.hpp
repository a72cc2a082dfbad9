#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "whmpc/mpc/horizon.hpp"
#include "whmpc/tank/plant.hpp"

namespace whmpc::mpc {

/// True when the MPC must be skipped and both elements forced off.
inline bool over_temp_lockout(double measured_top, const HorizonSpec& spec) {
  return measured_top > spec.T_max;
}

inline DutyCycle to_duty_cycle(const MpcSolution& sol, const HorizonSpec& spec) {
  DutyCycle d;
  if (!sol.p_lower.empty()) d.alpha1 = std::clamp(sol.p_lower.front() / spec.p_max, 0.0, 1.0);
  if (!sol.p_upper.empty()) d.alpha2 = std::clamp(sol.p_upper.front() / spec.p_max, 0.0, 1.0);
  const double sum = d.alpha1 + d.alpha2;
  if (spec.non_simultaneous && sum > 1.0) {
    d.alpha1 /= sum;
    d.alpha2 /= sum;
  }
  return d;
}

/// Whole substeps each element is on within one control interval.
struct SubstepSplit {
  int lower = 0;
  int upper = 0;
};

inline SubstepSplit quantize_duty(const DutyCycle& duty, int substeps, bool non_simultaneous = true) {
  const double a1 = std::clamp(duty.alpha1, 0.0, 1.0) * substeps;
  const double a2 = std::clamp(duty.alpha2, 0.0, 1.0) * substeps;
  SubstepSplit k{static_cast<int>(std::lround(a1)), static_cast<int>(std::lround(a2))};
  if (non_simultaneous && k.lower + k.upper > substeps) {
    // take the excess from whichever element was rounded up the most
    if (k.lower - a1 >= k.upper - a2)
      k.lower = substeps - k.upper;
    else
      k.upper = substeps - k.lower;
  }
  return k;
}

inline int substeps_per_interval(const HorizonSpec& spec, double sim_step) {
  const long n = std::lround(spec.control_step / sim_step);
  if (n < 1 || std::abs(n * sim_step - spec.control_step) > 1e-9 * spec.control_step)
    throw std::invalid_argument("control step must be a whole number of simulation steps");
  return static_cast<int>(n);
}

/// Lower element first, then upper, then off. Without the non-simultaneous
/// rule the upper block slides back to overlap the lower one when needed.
inline tank::ElementCommand schedule_elements(const DutyCycle& duty, int substep,
                                              const HorizonSpec& spec, double sim_step = 10.0) {
  const int n = substeps_per_interval(spec, sim_step);
  if (substep < 0 || substep >= n) throw std::out_of_range("schedule_elements: substep outside interval");
  const SubstepSplit k = quantize_duty(duty, n, spec.non_simultaneous);
  const int upper_start = std::min(k.lower, n - k.upper);
  return {substep < k.lower, substep >= upper_start && substep < upper_start + k.upper};
}

}  // namespace whmpc::mpc
