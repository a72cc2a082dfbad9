#pragma once

// Mixed-water draw traces at one-minute resolution: CSV ingestion and a
// synthetic generator (Poisson event arrivals with morning and evening peaks,
// log-normal event volumes, events spread at a fixed flow rate).

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "whmpc/core/errors.hpp"
#include "whmpc/core/units.hpp"

namespace whmpc::harness {

struct DrawTrace {
  double resolution = 60.0;     // s per entry
  std::vector<double> liters;   // mixed-water volume per entry

  double days() const { return static_cast<double>(liters.size()) * resolution / kSecondsPerDay; }
  double total_liters() const { return std::accumulate(liters.begin(), liters.end(), 0.0); }

  /// Mixed volume (m^3) for simulation substep `k` of length `sim_step`,
  /// spreading each entry uniformly over its substeps.
  double substep_volume(long k, double sim_step) const {
    const long per = std::lround(resolution / sim_step);
    const std::size_t entry = static_cast<std::size_t>(k / per);
    if (entry >= liters.size()) throw std::out_of_range("draw trace: substep beyond trace end");
    return liters_to_cubic_meters(liters[entry]) / static_cast<double>(per);
  }
};

inline void write_trace_csv(std::ostream& out, const DrawTrace& t) {
  out << "timestamp_s,volume_liters\n";
  out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < t.liters.size(); ++k)
    out << static_cast<long>(k) * static_cast<long>(t.resolution) << ',' << t.liters[k] << '\n';
}

/// CSV `timestamp_s,volume_liters` at 60 s spacing; gaps, negative or
/// non-finite volumes raise IngestionError.
inline DrawTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("timestamp_s,volume_liters", 0) != 0)
    throw IngestionError("draw trace: expected header 'timestamp_s,volume_liters'");
  DrawTrace t;
  double expect = 0.0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    double ts, v;
    char comma;
    if (!(row >> ts >> comma >> v) || comma != ',')
      throw IngestionError("draw trace: malformed row '" + line + "'");
    if (!first && std::abs(ts - expect) > 1e-6)
      throw IngestionError("draw trace: gap or disorder at timestamp " + std::to_string(ts));
    if (!std::isfinite(v) || v < 0.0) throw IngestionError("draw trace: negative or non-finite volume");
    first = false;
    expect = ts + t.resolution;
    t.liters.push_back(v);
  }
  if (t.liters.empty()) throw IngestionError("draw trace: no rows");
  return t;
}

inline DrawTrace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("draw trace: cannot open '" + path + "'");
  return read_trace_csv(in);
}

struct DrawProfile {
  double events_per_day = 14.0;
  double median_liters = 9.0;     // event volume median
  double volume_sigma = 0.9;      // log-normal shape
  double max_event_liters = 120.0;
  double flow_lpm = 6.0;          // mixed flow while an event runs
  double intensity_scale = 1.0;   // 0 gives an all-zero trace
  // relative arrival intensity per hour of day; zero from 1 to 5 am
  std::array<double, 24> hourly_shape = {0.2, 0.0, 0.0, 0.0, 0.0, 0.5, 2.5, 3.5, 2.5, 1.5, 1.0, 0.8,
                                         1.0, 0.8, 0.6, 0.6, 0.8, 1.2, 2.0, 2.5, 2.5, 2.0, 1.2, 0.5};

  /// Expected mixed volume per day, L (ignoring the event-size cap).
  double expected_daily_liters() const {
    return intensity_scale * events_per_day * median_liters * std::exp(0.5 * volume_sigma * volume_sigma);
  }

  /// Household variation for the default cohort, deterministic per seed.
  static DrawProfile for_home(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 7919 + 17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DrawProfile p;
    p.events_per_day = 10.0 + 8.0 * u(rng);
    p.median_liters = 7.0 + 4.0 * u(rng);
    return p;
  }
};

inline DrawTrace generate_synthetic_draws(std::uint64_t seed, int days, const DrawProfile& profile = {}) {
  if (days < 1) throw std::invalid_argument("generate_synthetic_draws: days must be >= 1");
  DrawTrace t;
  const int minutes = days * 1440;
  t.liters.assign(static_cast<std::size_t>(minutes), 0.0);
  const double shape_sum = std::accumulate(profile.hourly_shape.begin(), profile.hourly_shape.end(), 0.0);
  if (profile.intensity_scale <= 0.0 || shape_sum <= 0.0) return t;
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> volume(std::log(profile.median_liters), profile.volume_sigma);
  for (int m = 0; m < minutes; ++m) {
    const int hour = (m % 1440) / 60;
    const double rate =
        profile.intensity_scale * profile.events_per_day * profile.hourly_shape[hour] / shape_sum / 60.0;
    if (rate <= 0.0) continue;
    const int events = std::poisson_distribution<int>(rate)(rng);
    for (int e = 0; e < events; ++e) {
      double left = std::min(volume(rng), profile.max_event_liters);
      for (int k = m; k < minutes && left > 0.0; ++k) {
        const double v = std::min(left, profile.flow_lpm);
        t.liters[static_cast<std::size_t>(k)] += v;
        left -= v;
      }
    }
  }
  return t;
}

}  // namespace whmpc::harness
