#pragma once

// Batch execution: scenarios run on a worker pool; the thermostat baseline of
// each distinct configuration is simulated once and shared.

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "whmpc/harness/scenario.hpp"

namespace whmpc::harness {

struct BatchItem {
  ScenarioConfig config;
  std::optional<ScenarioResult> result;
  std::string error;  // non-empty when the run threw
  std::exception_ptr exception;
};

struct BatchOptions {
  unsigned jobs = 0;  // 0: hardware concurrency
  bool with_baseline = true;
  RunOptions run;
};

namespace detail {

/// Baseline identity: the serialized thermostat configuration without its name.
inline std::string baseline_key(const ScenarioConfig& c) {
  ScenarioConfig b = baseline_of(c);
  b.name.clear();
  std::ostringstream os;
  write_config(os, b);
  return os.str();
}

template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
  };
  if (jobs <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
}

}  // namespace detail

/// Runs every configuration; failures are recorded per item, never thrown.
/// Thermostat items serve as their own baseline (relative cost 1).
inline std::vector<BatchItem> run_batch(const std::vector<ScenarioConfig>& configs, const BatchOptions& opt = {}) {
  std::vector<BatchItem> items(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) items[i].config = configs[i];

  std::map<std::string, std::size_t> baseline_index;
  std::vector<ScenarioConfig> baselines;
  std::vector<std::size_t> item_baseline(configs.size(), SIZE_MAX);
  if (opt.with_baseline)
    for (std::size_t i = 0; i < configs.size(); ++i) {
      if (configs[i].controller == Controller::Thermostat) continue;
      const auto [it, added] = baseline_index.try_emplace(detail::baseline_key(configs[i]), baselines.size());
      if (added) baselines.push_back(baseline_of(configs[i]));
      item_baseline[i] = it->second;
    }

  std::vector<std::optional<MetricsReport>> base_reports(baselines.size());
  std::vector<std::string> base_errors(baselines.size());
  const std::size_t total = baselines.size() + items.size();
  detail::parallel_for(total, opt.jobs, [&](std::size_t t) {
    try {
      if (t < baselines.size()) {
        base_reports[t] = run_scenario(baselines[t]).report;
      } else {
        BatchItem& it = items[t - baselines.size()];
        it.result = run_scenario(it.config, opt.run);
      }
    } catch (const std::exception& e) {
      if (t < baselines.size()) {
        base_errors[t] = e.what();
      } else {
        items[t - baselines.size()].error = e.what();
        items[t - baselines.size()].exception = std::current_exception();
      }
    }
  });

  for (std::size_t i = 0; i < items.size(); ++i) {
    BatchItem& it = items[i];
    if (!it.result) continue;
    MetricsReport& r = it.result->report;
    if (it.config.controller == Controller::Thermostat && opt.with_baseline) {
      attach_baseline(r, r);
    } else if (item_baseline[i] != SIZE_MAX) {
      const std::size_t b = item_baseline[i];
      if (base_reports[b])
        attach_baseline(r, *base_reports[b]);
      else
        r.notes += (r.notes.empty() ? "" : "; ") + std::string("baseline failed: ") + base_errors[b];
    }
  }
  return items;
}

/// Single scenario plus its baseline; throws on failure.
inline ScenarioResult run_with_baseline(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
  BatchOptions b;
  b.run = opt;
  std::vector<BatchItem> items = run_batch({cfg}, b);
  if (!items[0].result) std::rethrow_exception(items[0].exception);
  return std::move(*items[0].result);
}

}  // namespace whmpc::harness
