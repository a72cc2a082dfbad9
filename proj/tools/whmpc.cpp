// whmpc: scenario runner, quantile sweeps, synthetic draws, identification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "whmpc.hpp"

namespace fs = std::filesystem;
using namespace whmpc;
using namespace whmpc::harness;

namespace {

struct Common {
  std::vector<std::string> sets;  // key=value overrides
  std::string out = "results";
  unsigned workers = 0;
  std::string format = "json";
  bool plot_data = false;
  bool no_baseline = false;
};

void add_common(CLI::App* c, Common& o) {
  c->add_option("--set", o.sets, "Override a config key (key=value); repeatable");
  c->add_option("--out", o.out, "Output directory")->capture_default_str();
  c->add_option("--workers", o.workers, "Concurrent scenarios (0: all cores)")->capture_default_str();
  c->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  c->add_flag("--plot-data", o.plot_data, "Also write plotdata.csv (one row per simulated substep)");
  c->add_flag("--no-baseline", o.no_baseline, "Skip the thermostat baseline run");
}

ScenarioConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
  ScenarioConfig c = path.empty() ? ScenarioConfig{} : load_config(path);
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_setting(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  c.validate();
  return c;
}

std::string summary(const MetricsReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << r.scenario << ": " << r.controller << " cost $" << r.total_cost_usd
     << " norm " << r.normalized_cost << " $/kWh rel " << r.relative_cost << " cold " << r.cold_draw_fraction
     << " rmse " << r.rmse_kw << " kW failures " << r.solver_failures << "/" << r.solves << " mean solve "
     << std::setprecision(4) << r.mean_solve_time_s << " s";
  if (!r.notes.empty()) os << " [" << r.notes << "]";
  return os.str();
}

/// Runs the batch and writes each item into its directory; returns the exit code.
int execute(const std::vector<ScenarioConfig>& configs, const std::vector<fs::path>& dirs, const Common& o,
            std::vector<BatchItem>* out_items = nullptr) {
  BatchOptions b;
  b.jobs = o.workers;
  b.with_baseline = !o.no_baseline;
  b.run.record_substeps = o.plot_data;
  std::vector<BatchItem> items = run_batch(configs, b);
  int rc = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const BatchItem& it = items[i];
    if (!it.result) {
      std::cerr << configs[i].name << ": failed: " << it.error << '\n';
      rc = 1;
      continue;
    }
    emit_report(it.result->report, it.result->log, dirs[i], o.format == "json" ? ReportFormat::Json : ReportFormat::Csv,
                o.plot_data, configs[i].horizon.control_step);
    {
      std::ofstream cfg(dirs[i] / "scenario.cfg");
      write_config(cfg, configs[i]);
    }
    if (!it.result->log.draw_free.empty()) {
      std::ofstream id(dirs[i] / "identification.csv");
      id.precision(12);
      models::IdentificationLog warmup = it.result->log.identification;  // the records the models were fit on
      warmup.records.resize(it.result->log.draw_free.size());
      write_identification_csv(id, warmup, it.result->log.draw_free);
    }
    std::cout << summary(it.result->report) << '\n';
  }
  if (out_items) *out_items = std::move(items);
  return rc;
}

int cmd_run(const std::vector<std::string>& scenarios, const Common& o) {
  std::vector<ScenarioConfig> configs;
  std::vector<fs::path> dirs;
  std::set<std::string> names;
  for (const std::string& s : scenarios) {
    configs.push_back(load_with_overrides(s, o.sets));
    if (!names.insert(configs.back().name).second)
      throw std::invalid_argument("duplicate scenario name '" + configs.back().name + "'");
    dirs.push_back(scenarios.size() == 1 ? fs::path(o.out) : fs::path(o.out) / configs.back().name);
  }
  return execute(configs, dirs, o);
}

std::string q_label(double q) {
  std::ostringstream os;
  os << "q" << q;
  return os.str();
}

int cmd_sweep(const std::string& scenario, const std::vector<double>& quantiles, const std::vector<std::uint64_t>& seeds,
              const Common& o) {
  const ScenarioConfig base = load_with_overrides(scenario, o.sets);
  std::vector<ScenarioConfig> configs;
  std::vector<fs::path> dirs;
  const std::vector<std::uint64_t> homes = seeds.empty() ? std::vector<std::uint64_t>{base.draw_seed} : seeds;
  for (std::uint64_t h : homes)
    for (double q : quantiles) {
      ScenarioConfig c = base;
      c.draw_seed = h;
      c.forecast = {draws::ForecastKind::HistoricalQuantile, q};
      c.name = base.name + "-home" + std::to_string(h) + "-" + q_label(q);
      c.validate();
      dirs.push_back(fs::path(o.out) / c.name);
      configs.push_back(std::move(c));
    }
  std::vector<BatchItem> items;
  const int rc = execute(configs, dirs, o, &items);
  std::cout << "\nhome  quantile  relative_cost  cold_draw_fraction  solver_failures\n";
  for (const BatchItem& it : items) {
    if (!it.result) continue;
    const MetricsReport& r = it.result->report;
    std::cout << std::setw(4) << it.config.draw_seed << std::setw(10) << it.config.forecast.quantile << std::fixed
              << std::setprecision(4) << std::setw(15) << r.relative_cost << std::setw(20) << r.cold_draw_fraction
              << std::setw(17) << r.solver_failures << std::defaultfloat << '\n';
  }
  return rc;
}

int cmd_gen_draws(std::uint64_t seed, int days, const std::string& out, const std::vector<std::string>& sets) {
  ScenarioConfig c;
  c.draw_seed = seed;
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_setting(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  const DrawTrace t = generate_synthetic_draws(seed, days, c.effective_profile());
  if (out.empty() || out == "-") {
    write_trace_csv(std::cout, t);
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    write_trace_csv(f, t);
  }
  std::cerr << "generated " << days << " days, " << std::fixed << std::setprecision(1) << t.total_liters() / days
            << " L/day mean\n";
  return 0;
}

int cmd_identify(const std::string& path, double ambient_f, double inlet_f, double tank_m3) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  const IdentificationData d = read_identification_csv(in);
  tank::PlantParams p;
  p.tank_volume = tank_m3;
  const double ambient = fahrenheit_to_kelvin(ambient_f), inlet = fahrenheit_to_kelvin(inlet_f);
  nlohmann::ordered_json j;
  if (d.log.records.front().state.size() == 1) {
    const auto m = models::identify_one_node(d.log, d.draw_free, ambient);
    j = {{"model", "one_node"}, {"C_j_per_k", m.C}, {"U_w_per_k", m.U}, {"T_a_k", m.T_a}};
  } else {
    const auto m = models::identify_three_node(d.log, d.draw_free, ambient, inlet, p.total_capacitance());
    j = {{"model", "three_node"}, {"C_u_j_per_k", m.C_u}, {"C_m_j_per_k", m.C_m}, {"C_l_j_per_k", m.C_l},
         {"U_u_w_per_k", m.U_u}, {"U_m_w_per_k", m.U_m}, {"U_l_w_per_k", m.U_l}, {"K_um_w_per_k", m.K_um},
         {"K_ml_w_per_k", m.K_ml}, {"T_a_k", m.T_a}, {"T_in_k", m.T_in}};
  }
  j["records"] = d.log.records.size();
  j["step_s"] = d.log.step;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-interactive water heater simulation and MPC"};
  app.require_subcommand(1);

  Common run_opt;
  std::vector<std::string> run_scenarios;
  auto* run = app.add_subcommand("run", "Run scenarios and write reports");
  run->add_option("--scenario", run_scenarios, "Scenario config file; repeatable")->required()->check(CLI::ExistingFile);
  add_common(run, run_opt);

  Common sweep_opt;
  std::string sweep_scenario;
  std::vector<double> quantiles{0.6, 0.7, 0.8, 0.9};
  std::vector<std::uint64_t> sweep_homes;
  auto* sweep = app.add_subcommand("sweep", "Quantile sweep over one scenario (and optionally several homes)");
  sweep->add_option("--scenario", sweep_scenario, "Base scenario config (defaults if omitted)")
      ->check(CLI::ExistingFile);
  sweep->add_option("--quantiles", quantiles, "Forecast quantiles")
      ->delimiter(',')
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  sweep->add_option("--homes", sweep_homes, "Draw seeds, comma separated (default: the scenario's)")->delimiter(',');
  add_common(sweep, sweep_opt);

  std::uint64_t gen_seed = 1;
  int gen_days = 28;
  std::string gen_out;
  std::vector<std::string> gen_sets;
  auto* gen = app.add_subcommand("gen-draws", "Write a synthetic one-minute draw trace CSV");
  gen->add_option("--seed", gen_seed, "Home seed")->required();
  gen->add_option("--days", gen_days, "Trace length in days")->required()->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output file (default stdout)");
  gen->add_option("--set", gen_sets, "Draw profile override (key=value); repeatable");

  std::string id_log;
  double id_ambient_f = 70.0, id_inlet_f = 68.0, id_tank = tank::PlantParams{}.tank_volume;
  auto* ident = app.add_subcommand("identify", "Fit control-model parameters from an identification log CSV");
  ident->add_option("--log", id_log, "Identification CSV (as written by run)")->required()->check(CLI::ExistingFile);
  ident->add_option("--ambient-f", id_ambient_f, "Ambient temperature, F")->capture_default_str();
  ident->add_option("--inlet-f", id_inlet_f, "Inlet temperature, F")->capture_default_str();
  ident->add_option("--tank-volume-m3", id_tank, "Tank volume, m^3 (fixes total capacitance)")->capture_default_str();

  std::vector<std::string> show_sets;
  std::string show_scenario;
  auto* show = app.add_subcommand("config", "Print a complete scenario config (defaults plus overrides)");
  show->add_option("--scenario", show_scenario, "Scenario config file")->check(CLI::ExistingFile);
  show->add_option("--set", show_sets, "Override a config key (key=value); repeatable");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_scenarios, run_opt);
    if (*sweep) return cmd_sweep(sweep_scenario, quantiles, sweep_homes, sweep_opt);
    if (*gen) return cmd_gen_draws(gen_seed, gen_days, gen_out, gen_sets);
    if (*ident) return cmd_identify(id_log, id_ambient_f, id_inlet_f, id_tank);
    if (*show) {
      write_config(std::cout, load_with_overrides(show_scenario, show_sets));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
