#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "whmpc/core/units.hpp"
#include "whmpc/mpc/interior_point.hpp"
#include "whmpc/tank/sensors.hpp"

namespace whmpc::mpc {

struct HorizonSpec {
  double control_step = 600.0;    // s
  double horizon = kSecondsPerDay;  // s
  double comfort_weight = 100.0;  // $ per K^2 per step
  double T_min = fahrenheit_to_kelvin(120.0);
  double T_max = fahrenheit_to_kelvin(150.0);
  double p_max = 4500.0;          // W
  bool non_simultaneous = true;
  double valve_guard = 5.0;       // K, keeps the upper node above T_in + guard
  double price_floor = 1e-6;      // $/kWh added to every price so cost ties resolve to less energy

  int steps() const { return static_cast<int>(std::lround(horizon / control_step)); }

  void validate() const {
    if (!(control_step > 0.0) || !(horizon >= control_step))
      throw std::invalid_argument("horizon: need horizon >= control_step > 0");
    if (std::abs(horizon / control_step - steps()) > 1e-9)
      throw std::invalid_argument("horizon: horizon must be a whole number of control steps");
    if (!(comfort_weight > 0.0)) throw std::invalid_argument("horizon: comfort weight must be positive");
    if (!(T_min < T_max)) throw std::invalid_argument("horizon: T_min must be below T_max");
    if (!(p_max > 0.0)) throw std::invalid_argument("horizon: p_max must be positive");
    if (!(price_floor >= 0.0)) throw std::invalid_argument("horizon: price floor must be non-negative");
  }

  /// $ per W of average power held for one control step, at a price of 1 $/kWh.
  double energy_price_factor() const { return control_step / kJoulesPerKwh; }
};

/// One day of prices per control step, extended periodically.
struct PricePath {
  std::vector<double> usd_per_kwh;

  double at(long step) const {
    const long n = static_cast<long>(usd_per_kwh.size());
    return usd_per_kwh[static_cast<std::size_t>(((step % n) + n) % n)];
  }

  std::vector<double> window(long start, int count) const {
    std::vector<double> out(count);
    for (int j = 0; j < count; ++j) out[j] = at(start + j);
    return out;
  }
};

enum class SolverStatus { Optimal, Acceptable, Failed };

inline std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Acceptable: return "acceptable";
    case SolverStatus::Failed: return "failed";
  }
  return "?";
}

struct MpcSolution {
  std::vector<double> tank;             // one-node temperatures, K, j = 0..N
  std::vector<tank::NodeTemps> nodes;   // three-node temperatures, K, j = 0..N
  std::vector<double> p_lower;          // W, j = 0..N-1
  std::vector<double> p_upper;          // W, zero for the one-node controller
  double objective = 0.0;
  SolverStatus status = SolverStatus::Failed;
  int iterations = 0;
  double kkt_residual = 0.0;
  double solve_time = 0.0;              // s

  IpmIterate iterate;                   // raw solver point, reused as a warm start
};

struct DutyCycle {
  double alpha1 = 0.0;  // lower element
  double alpha2 = 0.0;  // upper element
};

namespace detail {

// Drops the first entry of each consecutive block and repeats the last one.
inline VectorXd shift_blocks(const VectorXd& v, const std::vector<int>& blocks) {
  VectorXd out = v;
  int off = 0;
  for (int len : blocks) {
    for (int k = 0; k + 1 < len; ++k) out(off + k) = v(off + k + 1);
    off += len;
  }
  return out;
}

inline bool sizes_match(const IpmIterate& it, int n, int meq, int mi) {
  return it.x.size() == n && it.y.size() == meq && it.z.size() == mi && it.s.size() == mi;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline SolverStatus status_of(const IpmResult& r) {
  if (r.status == IpmStatus::Converged) return SolverStatus::Optimal;
  if (r.status == IpmStatus::Acceptable) return SolverStatus::Acceptable;
  return SolverStatus::Failed;
}

}  // namespace detail

}  // namespace whmpc::mpc
