#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "whmpc/core/errors.hpp"
#include "whmpc/mpc/horizon.hpp"

namespace whmpc::harness {

/// One day of per-control-step prices, $/kWh.
struct PriceProfile {
  std::string label;
  std::vector<double> usd_per_kwh;

  mpc::PricePath path() const { return {usd_per_kwh}; }
};

struct TouLevels {
  double peak = 0.60;
  double part_peak = 0.45;
  double off_peak = 0.35;
};

namespace detail {

inline int steps_per_hour(double control_step) {
  const double k = kSecondsPerHour / control_step;
  if (!(k >= 1.0) || std::abs(k - std::round(k)) > 1e-9)
    throw std::invalid_argument("prices: control step must divide one hour");
  return static_cast<int>(std::lround(k));
}

inline PriceProfile hold(std::string label, const std::array<double, 24>& hourly, double control_step) {
  const int k = steps_per_hour(control_step);
  PriceProfile p{std::move(label), {}};
  for (double v : hourly) p.usd_per_kwh.insert(p.usd_per_kwh.end(), k, v);
  return p;
}

}  // namespace detail

/// Peak 4-9 pm, part-peak 3-4 pm and 9 pm-midnight, off-peak otherwise.
inline PriceProfile tou_profile(double control_step = 600.0, TouLevels lv = {}) {
  std::array<double, 24> h;
  for (int i = 0; i < 24; ++i)
    h[i] = (i >= 16 && i < 21) ? lv.peak : (i == 15 || i >= 21) ? lv.part_peak : lv.off_peak;
  return detail::hold("tou", h, control_step);
}

/// Two-peak dynamic day: morning and evening peaks, near zero at midday.
inline PriceProfile dynamic_profile(double control_step = 600.0) {
  static constexpr std::array<double, 24> h = {
      0.20, 0.18, 0.17, 0.17, 0.19, 0.26, 0.38, 0.46, 0.40, 0.26, 0.12, 0.05,
      0.01, 0.01, 0.02, 0.06, 0.18, 0.36, 0.52, 0.60, 0.50, 0.38, 0.29, 0.23};
  return detail::hold("dynamic", h, control_step);
}

/// CSV `hour,usd_per_kwh` with hours 0..23 in order.
inline PriceProfile read_price_csv(std::istream& in, std::string label, double control_step = 600.0) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("hour,usd_per_kwh", 0) != 0)
    throw IngestionError("prices: expected header 'hour,usd_per_kwh'");
  std::array<double, 24> h{};
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    int hour;
    char comma;
    double v;
    if (!(row >> hour >> comma >> v) || comma != ',')
      throw IngestionError("prices: malformed row '" + line + "'");
    if (rows >= 24) throw IngestionError("prices: more than 24 rows");
    if (hour != rows) throw IngestionError("prices: hours must run 0..23 in order");
    if (!std::isfinite(v) || v < 0.0) throw IngestionError("prices: negative or non-finite price");
    h[rows++] = v;
  }
  if (rows != 24) throw IngestionError("prices: expected 24 rows, got " + std::to_string(rows));
  return detail::hold(std::move(label), h, control_step);
}

/// Built-in id (`tou`, `dynamic`) or a CSV path.
inline PriceProfile ingest_price(const std::string& id_or_path, double control_step = 600.0) {
  if (id_or_path == "tou") return tou_profile(control_step);
  if (id_or_path == "dynamic") return dynamic_profile(control_step);
  std::ifstream in(id_or_path);
  if (!in) throw IngestionError("prices: cannot open '" + id_or_path + "'");
  return read_price_csv(in, id_or_path, control_step);
}

}  // namespace whmpc::harness
