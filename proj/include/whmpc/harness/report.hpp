#pragma once

// Report and log persistence. Field names in report.json, timeseries.csv and
// plotdata.csv are stable; see README for their meaning.

#include <cmath>
#include <filesystem>
#include <sstream>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "whmpc/core/errors.hpp"
#include "whmpc/harness/metrics.hpp"
#include "whmpc/harness/scenario.hpp"

namespace whmpc::harness {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(
    MetricsReport, scenario, controller, window_begin_step, window_end_step, total_cost_usd, element_energy_kwh,
    draw_energy_kwh, standby_loss_kwh, stored_energy_change_kwh, normalized_cost, baseline_normalized_cost,
    relative_cost, delivered_liters, cold_liters, cold_draw_fraction, runout_events, rmse_kw, solves,
    solver_failures, lockout_steps, interlock_steps, forecast_unavailable_steps, max_top_temp_k, max_duty_error_w,
    energy_closure_residual, model_source, notes, mean_solve_time_s, max_solve_time_s, run_time_s)

enum class ReportFormat { Json, Csv };

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out.precision(12);
  return out;
}

inline void check_written(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
}

}  // namespace detail

inline void write_report_json(std::ostream& out, const MetricsReport& r) { out << nlohmann::json(r).dump(2) << '\n'; }

inline MetricsReport read_report_json(std::istream& in) { return nlohmann::json::parse(in).get<MetricsReport>(); }

/// `field,value` rows in the JSON field order.
inline void write_report_csv(std::ostream& out, const MetricsReport& r) {
  const nlohmann::ordered_json j = nlohmann::ordered_json::parse(nlohmann::json(r).dump());
  out << "field,value\n";
  for (const auto& [k, v] : j.items()) out << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
}

inline void write_timeseries_csv(std::ostream& out, const ScenarioLog& log) {
  out << "step,mode,price_usd_per_kwh,measured_1,measured_2,measured_3,p1_cmd_w,p2_cmd_w,p1_w,p2_w,"
         "qd_true_w,qd_est_w,qd_forecast_w,mixed_liters,cold_liters,max_top_temp_k,cost_usd,interlocked,"
         "solve_time_s,iterations\n";
  for (const StepRecord& r : log.steps)
    out << r.step << ',' << to_string(r.mode) << ',' << r.price << ',' << r.measured[0] << ',' << r.measured[1]
        << ',' << r.measured[2] << ',' << r.p1_cmd << ',' << r.p2_cmd << ',' << r.p1 << ',' << r.p2 << ','
        << r.qd_true << ',' << r.qd_est << ',' << r.qd_forecast << ',' << r.mixed_liters << ',' << r.cold_liters
        << ',' << r.max_top_temp << ',' << r.cost << ',' << (r.interlocked ? 1 : 0) << ',' << r.solve_time << ','
        << r.iterations << '\n';
}

/// One row per simulated substep; needs RunOptions::record_substeps.
inline void write_plotdata_csv(std::ostream& out, const ScenarioLog& log, double control_step) {
  out << "time_s,step,price_usd_per_kwh,top_temp_k,mean_temp_k,lower_on,upper_on,mixed_liters,delivered_temp_k\n";
  for (const SubstepRecord& s : log.substeps) {
    const long step = static_cast<long>((s.time - 1e-9) / control_step);
    const double price = step < static_cast<long>(log.steps.size()) ? log.steps[step].price : 0.0;
    out << s.time << ',' << step << ',' << price << ',' << s.top_temp << ',' << s.mean_temp << ','
        << (s.lower_on ? 1 : 0) << ',' << (s.upper_on ? 1 : 0) << ',' << s.mixed_liters << ','
        << s.delivered_temp << '\n';
  }
}

/// `timestamp_s,<state>,p1_w,p2_w,draw_free`: one state column (`temp_k`) or
/// three (`temp_upper_k,temp_middle_k,temp_lower_k`).
inline void write_identification_csv(std::ostream& out, const models::IdentificationLog& log,
                                     const std::vector<bool>& draw_free) {
  if (draw_free.size() != log.records.size())
    throw std::invalid_argument("identification csv: mask length must match the log");
  const std::size_t n = log.records.empty() ? 1 : log.records.front().state.size();
  out << (n == 1 ? "timestamp_s,temp_k" : "timestamp_s,temp_upper_k,temp_middle_k,temp_lower_k")
      << ",p1_w,p2_w,draw_free\n";
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    out << r.timestamp;
    for (double t : r.state) out << ',' << t;
    out << ',' << r.p1 << ',' << r.p2 << ',' << (draw_free[i] ? 1 : 0) << '\n';
  }
}

struct IdentificationData {
  models::IdentificationLog log;
  std::vector<bool> draw_free;
};

/// Reads the layout above; `draw_free` may be omitted, in which case pairs
/// lying wholly between 1 and 5 am (by timestamp) are used. The log step is
/// taken from the first two timestamps.
inline IdentificationData read_identification_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("identification csv: empty input");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
  }
  const bool has_mask = !header.empty() && header.back() == "draw_free";
  const std::size_t n = header.size() - 3 - (has_mask ? 1 : 0);
  if (header.size() < 4 || header.front() != "timestamp_s" || (n != 1 && n != 3) ||
      header[n + 1] != "p1_w" || header[n + 2] != "p2_w")
    throw IngestionError("identification csv: unexpected header '" + line + "'");
  IdentificationData d;
  for (int row = 2; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    for (std::string cell; std::getline(ls, cell, ',');) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IngestionError("identification csv: bad number on row " + std::to_string(row));
      }
    }
    if (v.size() != header.size())
      throw IngestionError("identification csv: wrong column count on row " + std::to_string(row));
    d.log.records.push_back({v[0], std::vector<double>(v.begin() + 1, v.begin() + 1 + n), v[n + 1], v[n + 2]});
    if (has_mask) d.draw_free.push_back(v[n + 3] != 0.0);
  }
  if (d.log.records.size() < 2) throw IngestionError("identification csv: need at least two rows");
  d.log.step = d.log.records[1].timestamp - d.log.records[0].timestamp;
  if (!(d.log.step > 0.0)) throw IngestionError("identification csv: timestamps must increase");
  if (!has_mask)
    for (const auto& r : d.log.records) {
      const double tod = std::fmod(r.timestamp, kSecondsPerDay);
      d.draw_free.push_back(tod >= kSecondsPerHour - 1e-9 && tod + d.log.step <= 5 * kSecondsPerHour + 1e-9);
    }
  return d;
}

/// Writes report.json or report.csv, timeseries.csv, and plotdata.csv when
/// requested, into `dir` (created if missing).
inline void emit_report(const MetricsReport& r, const ScenarioLog& log, const std::filesystem::path& dir,
                        ReportFormat format, bool plot_data, double control_step) {
  std::filesystem::create_directories(dir);
  {
    const auto p = dir / (format == ReportFormat::Json ? "report.json" : "report.csv");
    auto out = detail::open_out(p);
    if (format == ReportFormat::Json)
      write_report_json(out, r);
    else
      write_report_csv(out, r);
    detail::check_written(out, p);
  }
  {
    const auto p = dir / "timeseries.csv";
    auto out = detail::open_out(p);
    write_timeseries_csv(out, log);
    detail::check_written(out, p);
  }
  if (plot_data) {
    if (log.substeps.empty()) throw std::invalid_argument("emit_report: plot data needs a run with recorded substeps");
    const auto p = dir / "plotdata.csv";
    auto out = detail::open_out(p);
    write_plotdata_csv(out, log, control_step);
    detail::check_written(out, p);
  }
}

}  // namespace whmpc::harness
