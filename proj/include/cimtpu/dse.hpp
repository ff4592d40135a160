#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <atomic>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/multidevice.hpp"

namespace cimtpu {

// Evaluation concurrency cap: CIMTPU_THREADS, else hardware concurrency.
inline unsigned evaluation_threads() {
  if (const char* env = std::getenv("CIMTPU_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

struct SweepWorkload {
  ModelConfig model;
  InferenceParams params;
  std::uint32_t dit_steps = 50;
};

// Device-count scaling is reported for both pure tensor and pure pipeline
// parallelism at 2 and 4 devices (the per-count split is a free choice).
inline std::vector<ParallelismPlan> device_scaling_plans() {
  return {{1, 1}, {2, 1}, {1, 2}, {4, 1}, {1, 4}};
}

struct SweepRow {
  std::string config_name;
  bool feasible = true;
  std::string error;
  double latency_s = 0;
  double throughput = 0;  // tokens/s (LLM) or images/s (DiT)
  Joules mxu_energy_j = 0;       // peak-power x runtime proxy
  Joules mxu_activity_j = 0;     // MAC-count energy
  Joules total_energy_j = 0;
  std::uint64_t peak_macs_per_cycle = 0;
  double area_proxy = 0;  // relative MAC area, CIM credited 2.02x density
};

struct SweepTable {
  std::string workload;
  ParallelismPlan plan;
  std::vector<SweepRow> rows;  // grid order
};

inline double mac_area_proxy(const TpuConfig& cfg) {
  const double density_advantage = cfg.is_cim() ? 2.02 : 1.0;
  return double(peak_macs_per_cycle_total(cfg)) / density_advantage;
}

inline SweepRow evaluate_sweep_point(const TpuConfig& cfg, const SweepWorkload& w,
                                     const ParallelismPlan& plan) {
  SweepRow row;
  row.config_name = cfg.name;
  row.peak_macs_per_cycle = peak_macs_per_cycle_total(cfg);
  row.area_proxy = mac_area_proxy(cfg);
  try {
    const EndToEndReport rep =
        w.model.family == ModelFamily::LLM
            ? llm_end_to_end(w.model, w.params, plan, cfg)
            : dit_end_to_end(w.model, w.params, plan, cfg, w.dit_steps);
    row.latency_s = rep.latency_s;
    row.throughput = w.model.family == ModelFamily::LLM ? rep.tokens_per_s : rep.images_per_s;
    row.mxu_energy_j = rep.mxu_power_time_j;
    row.mxu_activity_j = rep.energy.mxu_j;
    row.total_energy_j = rep.energy.total();
  } catch (const std::exception& e) {
    row.feasible = false;
    row.error = e.what();
  }
  return row;
}

// Evaluates every configuration in the grid. Infeasible points stay in the
// table, flagged with their error. Rows keep grid order regardless of the
// evaluation concurrency.
inline SweepTable sweep(const std::vector<TpuConfig>& grid, const SweepWorkload& w,
                        const ParallelismPlan& plan) {
  if (grid.empty()) throw std::invalid_argument("sweep needs a nonempty grid");
  SweepTable table;
  table.workload = w.model.name;
  table.plan = plan;
  table.rows.resize(grid.size());

  const unsigned threads = std::min<unsigned>(evaluation_threads(), grid.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      table.rows[i] = evaluate_sweep_point(grid[i], w, plan);
    return table;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1))
        table.rows[i] = evaluate_sweep_point(grid[i], w, plan);
    });
  }
  for (auto& th : pool) th.join();
  return table;
}

// Non-dominated rows on (latency, MXU energy), keeping table order. Infeasible
// rows never enter the front.
inline std::vector<SweepRow> pareto_front(const SweepTable& table) {
  std::vector<SweepRow> front;
  for (const auto& a : table.rows) {
    if (!a.feasible) continue;
    bool dominated = false;
    for (const auto& b : table.rows) {
      if (!b.feasible || &a == &b) continue;
      const bool no_worse = b.latency_s <= a.latency_s && b.mxu_energy_j <= a.mxu_energy_j;
      const bool strictly_better = b.latency_s < a.latency_s || b.mxu_energy_j < a.mxu_energy_j;
      if (no_worse && strictly_better) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(a);
  }
  return front;
}

struct BaselineRatios {
  std::string config_name;
  bool feasible = true;
  double latency_ratio = 0;     // row / baseline: < 1 is faster
  double throughput_ratio = 0;  // row / baseline: > 1 is faster
  double mxu_energy_ratio = 0;  // row / baseline: < 1 uses less MXU energy
  double total_energy_ratio = 0;
  double peak_macs_ratio = 0;
  double area_ratio = 0;
};

inline std::vector<BaselineRatios> compare_to_baseline(const SweepTable& table,
                                                       const SweepRow& baseline) {
  if (!baseline.feasible) throw std::invalid_argument("baseline row is infeasible");
  std::vector<BaselineRatios> out;
  for (const auto& row : table.rows) {
    BaselineRatios r;
    r.config_name = row.config_name;
    r.feasible = row.feasible;
    if (row.feasible) {
      r.latency_ratio = row.latency_s / baseline.latency_s;
      r.throughput_ratio = baseline.throughput ? row.throughput / baseline.throughput : 0.0;
      r.mxu_energy_ratio = row.mxu_energy_j / baseline.mxu_energy_j;
      r.total_energy_ratio = row.total_energy_j / baseline.total_energy_j;
      r.peak_macs_ratio = double(row.peak_macs_per_cycle) / double(baseline.peak_macs_per_cycle);
      r.area_ratio = row.area_proxy / baseline.area_proxy;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace cimtpu
