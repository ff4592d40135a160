#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cimtpu/units.hpp"

namespace cimtpu {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Conventional weight-stationary systolic array of MAC units.
struct DigitalSystolic {
  std::uint32_t rows = 128;
  std::uint32_t cols = 128;
  friend bool operator==(const DigitalSystolic&, const DigitalSystolic&) = default;
};

// Systolic grid of weight-stationary bit-serial CIM cores with
// output-stationary dataflow and compute-overlapped weight loading.
//
// Each core stores core_inputs x core_weight_cols bitcells; with weight_bits
// per weight that is core_inputs x n_core() resident weights. A wave covers
// active_outputs_per_wave output channels over wave_cycles cycles, so one core
// sustains core_inputs * active_outputs_per_wave / wave_cycles MACs per cycle.
struct CimGrid {
  std::uint32_t grid_rows = 16;
  std::uint32_t grid_cols = 8;
  std::uint32_t core_inputs = 128;
  std::uint32_t core_weight_cols = 256;
  std::uint32_t weight_bits = 8;
  std::uint32_t wave_cycles = 8;
  std::uint32_t active_outputs_per_wave = 8;
  std::uint32_t input_bus_bits = 32;
  std::uint32_t weight_io_bytes_per_cycle = 32;  // per core column
  std::uint32_t fp_pre_cycles = 2;               // BF16 exponent align, per fold
  std::uint32_t fp_post_cycles = 2;              // BF16 shift/accumulate/round, per fold

  std::uint32_t n_core() const { return core_weight_cols / weight_bits; }
  std::uint64_t k_capacity() const { return std::uint64_t(grid_rows) * core_inputs; }
  std::uint64_t n_capacity() const { return std::uint64_t(grid_cols) * n_core(); }
  std::uint64_t cores() const { return std::uint64_t(grid_rows) * grid_cols; }

  friend bool operator==(const CimGrid&, const CimGrid&) = default;
};

using MxuKind = std::variant<DigitalSystolic, CimGrid>;

struct VpuConfig {
  std::uint32_t lanes = 8 * 128;
  // Per-chunk (one lane-wide issue) cycle costs.
  std::uint32_t c_add = 1;
  std::uint32_t c_mul = 1;
  std::uint32_t c_cmp = 1;
  std::uint32_t c_exp = 4;
  std::uint32_t c_tanh = 4;
  std::uint32_t c_div = 4;
  std::uint32_t c_rsqrt = 4;

  friend bool operator==(const VpuConfig&, const VpuConfig&) = default;
};

// Activity-based energy coefficients. MAC energies follow the measured
// 0.77 / 7.26 TOPS/W of the two MXU implementations at 2 OPs per MAC; the
// per-byte memory costs are placeholder constants for breakdown reporting.
struct EnergyTable {
  Joules mac_energy_digital = 2.597e-12;
  Joules mac_energy_cim = 0.2755e-12;
  Joules vpu_lane_op_energy = 0.5e-12;  // per lane per busy cycle
  Joules vmem_energy_per_byte = 0.10e-12;
  Joules cmem_energy_per_byte = 0.30e-12;
  Joules hbm_energy_per_byte = 4.0e-12;
  Joules ici_energy_per_byte = 10.0e-12;

  friend bool operator==(const EnergyTable&, const EnergyTable&) = default;
};

struct TpuConfig {
  std::string name = "tpuv4i-baseline";
  double frequency_hz = 1.05e9;
  std::uint32_t mxu_count = 4;
  MxuKind mxu = DigitalSystolic{};
  VpuConfig vpu;
  Bytes vmem_bytes = 16ull << 20;   // 16 MiB
  Bytes cmem_bytes = 128ull << 20;  // 128 MiB
  Bytes hbm_bytes = 8ull << 30;     // 8 GiB
  double hbm_bw = 614e9;            // bytes/s
  double oci_bw = 1024e9;           // bytes/s, CMEM<->VMEM (assumption, not published)
  std::uint32_t ici_links = 2;
  double ici_link_bw = 100e9;       // bytes/s per link
  Bytes dram_burst_bytes = 64;      // coalescing granularity
  EnergyTable energy;
  // Notes about values that were assumed rather than taken from a source.
  std::vector<std::string> assumptions;

  bool is_cim() const { return std::holds_alternative<CimGrid>(mxu); }

  double hbm_bytes_per_cycle() const { return hbm_bw / frequency_hz; }
  double oci_bytes_per_cycle() const { return oci_bw / frequency_hz; }
  double ici_link_bytes_per_cycle() const { return ici_link_bw / frequency_hz; }

  friend bool operator==(const TpuConfig&, const TpuConfig&) = default;
};

inline void validate(const TpuConfig& cfg) {
  auto fail = [](const std::string& what) { throw ConfigError("config invariant violated: " + what); };
  if (cfg.frequency_hz <= 0) fail("frequency must be > 0 (frequency_hz)");
  if (cfg.mxu_count < 1) fail("mxu_count must be >= 1 (mxu_count)");
  if (cfg.vmem_bytes == 0) fail("capacity must be > 0 (vmem_bytes)");
  if (cfg.cmem_bytes == 0) fail("capacity must be > 0 (cmem_bytes)");
  if (cfg.hbm_bytes == 0) fail("capacity must be > 0 (hbm_bytes)");
  if (!(cfg.vmem_bytes < cfg.cmem_bytes)) fail("vmem_bytes < cmem_bytes");
  if (!(cfg.cmem_bytes < cfg.hbm_bytes)) fail("cmem_bytes < hbm_bytes");
  if (cfg.hbm_bw <= 0) fail("bandwidth must be > 0 (hbm_bw)");
  if (cfg.oci_bw <= 0) fail("bandwidth must be > 0 (oci_bw)");
  if (cfg.ici_links > 0 && cfg.ici_link_bw <= 0) fail("bandwidth must be > 0 (ici_link_bw)");
  if (cfg.dram_burst_bytes == 0) fail("dram_burst_bytes must be > 0");
  if (cfg.vpu.lanes < 1) fail("vpu lanes must be >= 1 (vpu.lanes)");
  for (auto c : {cfg.vpu.c_add, cfg.vpu.c_mul, cfg.vpu.c_cmp, cfg.vpu.c_exp, cfg.vpu.c_tanh,
                 cfg.vpu.c_div, cfg.vpu.c_rsqrt}) {
    if (c < 1) fail("vpu op costs must be >= 1 (vpu)");
  }
  const auto& e = cfg.energy;
  for (auto j : {e.mac_energy_digital, e.mac_energy_cim, e.vpu_lane_op_energy, e.vmem_energy_per_byte,
                 e.cmem_energy_per_byte, e.hbm_energy_per_byte, e.ici_energy_per_byte}) {
    if (j < 0) fail("energy entries must be >= 0 (energy)");
  }
  if (const auto* d = std::get_if<DigitalSystolic>(&cfg.mxu)) {
    if (d->rows < 1 || d->cols < 1) fail("systolic rows/cols must be >= 1 (mxu)");
  } else {
    const auto& g = std::get<CimGrid>(cfg.mxu);
    if (g.grid_rows < 1 || g.grid_cols < 1) fail("cim grid dims must be >= 1 (mxu)");
    if (g.core_inputs < 1 || g.core_weight_cols < 1) fail("cim core dims must be >= 1 (mxu)");
    if (g.weight_bits < 1) fail("weight_bits must be >= 1 (mxu)");
    if (g.core_weight_cols % g.weight_bits != 0) fail("core_weight_cols divisible by weight_bits (mxu)");
    if (g.wave_cycles < 1) fail("wave_cycles must be >= 1 (mxu)");
    if (g.active_outputs_per_wave < 1) fail("active_outputs_per_wave must be >= 1 (mxu)");
    if (std::uint64_t(g.active_outputs_per_wave) * g.weight_bits > g.core_weight_cols)
      fail("active_outputs_per_wave * weight_bits <= core_weight_cols (mxu)");
    if (g.weight_io_bytes_per_cycle < 1) fail("weight_io_bytes_per_cycle must be >= 1 (mxu)");
    if (g.input_bus_bits < 1) fail("input_bus_bits must be >= 1 (mxu)");
  }
}

// Sustained MACs per cycle of one MXU at full occupancy.
inline std::uint64_t peak_macs_per_cycle_per_mxu(const TpuConfig& cfg) {
  if (const auto* d = std::get_if<DigitalSystolic>(&cfg.mxu)) {
    return std::uint64_t(d->rows) * d->cols;
  }
  const auto& g = std::get<CimGrid>(cfg.mxu);
  return g.cores() * g.core_inputs * g.active_outputs_per_wave / g.wave_cycles;
}

inline std::uint64_t peak_macs_per_cycle_total(const TpuConfig& cfg) {
  return peak_macs_per_cycle_per_mxu(cfg) * cfg.mxu_count;
}

namespace detail {

inline TpuConfig base_config() {
  TpuConfig cfg;
  cfg.assumptions = {
      "oci_bw=1024GB/s: CMEM<->VMEM bandwidth is not published; configurable",
      "frequency=1.05GHz: TPUv4i clock; only affects seconds/byte-per-cycle conversion",
      "dram_burst_bytes=64: coalescing granularity; configurable",
  };
  return cfg;
}

inline TpuConfig cim_preset(const std::string& name, std::uint32_t grid_rows, std::uint32_t grid_cols,
                            std::uint32_t mxu_count) {
  TpuConfig cfg = base_config();
  cfg.name = name;
  cfg.mxu_count = mxu_count;
  CimGrid g;
  g.grid_rows = grid_rows;
  g.grid_cols = grid_cols;
  cfg.mxu = g;
  cfg.assumptions.push_back(
      "weight_io_bytes_per_cycle=32 per core column: CIM weight port width assumed");
  return cfg;
}

}  // namespace detail

// Named configurations: the TPUv4i baseline, the drop-in CIM replacement, the
// cim-{RxC}-x{count} exploration grid, and the two derived designs
// (design-a = cim-8x8-x4, design-b = cim-16x8-x8).
inline TpuConfig builtin_preset(const std::string& name) {
  if (name == "tpuv4i-baseline") {
    TpuConfig cfg = detail::base_config();
    cfg.name = name;
    cfg.mxu = DigitalSystolic{128, 128};
    cfg.mxu_count = 4;
    return cfg;
  }
  if (name == "design-a") return detail::cim_preset(name, 8, 8, 4);
  if (name == "design-b") return detail::cim_preset(name, 16, 8, 8);
  for (std::uint32_t count : {2u, 4u, 8u}) {
    for (auto [r, c] : {std::pair<std::uint32_t, std::uint32_t>{8, 8}, {16, 8}, {16, 16}}) {
      std::string candidate =
          "cim-" + std::to_string(r) + "x" + std::to_string(c) + "-x" + std::to_string(count);
      if (name == candidate) return detail::cim_preset(name, r, c, count);
    }
  }
  throw ConfigError("unknown preset '" + name + "'");
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names = {"tpuv4i-baseline", "design-a", "design-b"};
  for (auto [r, c] : {std::pair<std::uint32_t, std::uint32_t>{8, 8}, {16, 8}, {16, 16}}) {
    for (std::uint32_t count : {2u, 4u, 8u}) {
      names.push_back("cim-" + std::to_string(r) + "x" + std::to_string(c) + "-x" +
                      std::to_string(count));
    }
  }
  return names;
}

// The nine-point exploration grid: array dimension {8x8, 16x8, 16x16} crossed
// with MXU count {2, 4, 8}.
inline std::vector<TpuConfig> exploration_grid() {
  std::vector<TpuConfig> grid;
  for (auto [r, c] : {std::pair<std::uint32_t, std::uint32_t>{8, 8}, {16, 8}, {16, 16}}) {
    for (std::uint32_t count : {2u, 4u, 8u}) {
      grid.push_back(builtin_preset("cim-" + std::to_string(r) + "x" + std::to_string(c) + "-x" +
                                    std::to_string(count)));
    }
  }
  return grid;
}

}  // namespace cimtpu
