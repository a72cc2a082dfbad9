#pragma once

namespace whmpc {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kJoulesPerKwh = 3.6e6;
inline constexpr double kLitersPerCubicMeter = 1000.0;

constexpr double fahrenheit_to_kelvin(double f) { return (f - 32.0) * 5.0 / 9.0 + 273.15; }
constexpr double kelvin_to_fahrenheit(double k) { return (k - 273.15) * 9.0 / 5.0 + 32.0; }

/// Converts a temperature *difference* in Fahrenheit to Kelvin.
constexpr double fahrenheit_delta_to_kelvin(double df) { return df * 5.0 / 9.0; }

constexpr double liters_to_cubic_meters(double l) { return l / kLitersPerCubicMeter; }
constexpr double cubic_meters_to_liters(double m3) { return m3 * kLitersPerCubicMeter; }

}  // namespace whmpc
