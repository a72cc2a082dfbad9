#pragma once

// Draw forecasters: perfect foresight, per-bin historical mean, and per-bin
// empirical quantile. Statistics are taken on raw (possibly negative)
// estimates; the resulting forecast is clamped at zero.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "whmpc/core/errors.hpp"
#include "whmpc/draws/history.hpp"
#include "whmpc/draws/series.hpp"

namespace whmpc::draws {

enum class ForecastKind { Perfect, HistoricalMean, HistoricalQuantile };

struct ForecastMethod {
  ForecastKind kind = ForecastKind::HistoricalMean;
  double quantile = 0.9;

  void validate() const {
    if (kind == ForecastKind::HistoricalQuantile && !(quantile > 0.0 && quantile <= 1.0))
      throw std::invalid_argument("forecast: quantile must lie in (0, 1]");
  }
};

inline std::string_view to_string(ForecastKind k) {
  switch (k) {
    case ForecastKind::Perfect: return "perfect";
    case ForecastKind::HistoricalMean: return "historical_mean";
    case ForecastKind::HistoricalQuantile: return "historical_quantile";
  }
  return "?";
}

inline ForecastKind parse_forecast_kind(std::string_view s) {
  if (s == "perfect") return ForecastKind::Perfect;
  if (s == "historical_mean" || s == "mean") return ForecastKind::HistoricalMean;
  if (s == "historical_quantile" || s == "quantile") return ForecastKind::HistoricalQuantile;
  throw std::invalid_argument("unknown forecast method '" + std::string(s) + "'");
}

/// Linear interpolation between order statistics: h = (n-1) q,
/// Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
inline double empirical_quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("empirical_quantile: no samples");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("empirical_quantile: q outside [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double h = (static_cast<double>(samples.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

/// Accumulates deviations from the first sample, so a constant history
/// returns that constant exactly.
inline double sample_mean(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("sample_mean: no samples");
  const double x0 = samples.front();
  double dev = 0.0;
  for (double x : samples) dev += x - x0;
  return x0 + dev / static_cast<double>(samples.size());
}

/// Unclamped per-bin statistic of the history (mean or quantile).
inline std::vector<double> bin_statistics(const DrawHistory& history, const ForecastMethod& method) {
  if (!history.has_full_day())
    throw ForecastUnavailable("forecast: need at least one full day of draw history");
  std::vector<double> out;
  for (const auto& bin : history.by_bin())
    out.push_back(method.kind == ForecastKind::HistoricalQuantile ? empirical_quantile(bin, method.quantile)
                                                                  : sample_mean(bin));
  return out;
}

/// N-step forecast starting at control step `start_step`. Perfect mode reads
/// `truth`, which must cover the window.
inline DrawSeries forecast(const DrawHistory& history, const ForecastMethod& method,
                           const DrawSeries* truth, long start_step, int horizon) {
  method.validate();
  DrawSeries out;
  out.start_step = start_step;
  out.values.resize(static_cast<std::size_t>(horizon));
  if (truth) out.step = truth->step;
  if (method.kind == ForecastKind::Perfect) {
    if (!truth) throw std::invalid_argument("forecast: perfect mode needs the true draw series");
    if (start_step < truth->start_step || start_step + horizon > truth->end_step())
      throw AlignmentError("forecast: true draw series does not cover the horizon");
    for (int j = 0; j < horizon; ++j)
      out.values[j] = std::max(0.0, truth->values[static_cast<std::size_t>(start_step - truth->start_step + j)]);
    return out;
  }
  const std::vector<double> stat = bin_statistics(history, method);
  for (int j = 0; j < horizon; ++j) out.values[j] = std::max(0.0, stat[history.bin_of_step(start_step + j)]);
  return out;
}

/// Hourly-mean RMSE between two aligned series, kW. Trailing partial hours
/// are ignored.
inline double hourly_rmse(const DrawSeries& estimates, const DrawSeries& truth) {
  if (estimates.start_step != truth.start_step || estimates.size() != truth.size() ||
      estimates.step != truth.step)
    throw AlignmentError("hourly_rmse: series are not aligned");
  const double per_hour = 3600.0 / truth.step;
  const std::size_t k = static_cast<std::size_t>(std::lround(per_hour));
  if (k == 0 || std::abs(per_hour - static_cast<double>(k)) > 1e-9)
    throw AlignmentError("hourly_rmse: step must divide one hour");
  const std::size_t hours = truth.size() / k;
  if (hours == 0) throw AlignmentError("hourly_rmse: need at least one full hour");
  double sq = 0.0;
  for (std::size_t h = 0; h < hours; ++h) {
    double e = 0.0;
    for (std::size_t i = h * k; i < (h + 1) * k; ++i) e += estimates.values[i] - truth.values[i];
    e /= static_cast<double>(k) * 1000.0;
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(hours));
}

}  // namespace whmpc::draws
