#pragma once

#include <cstdint>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/units.hpp"

namespace cimtpu {

struct EnergyBreakdown {
  Joules mxu_j = 0, vpu_j = 0, vmem_j = 0, cmem_j = 0, hbm_j = 0, ici_j = 0;
  Joules total() const { return mxu_j + vpu_j + vmem_j + cmem_j + hbm_j + ici_j; }

  EnergyBreakdown& operator+=(const EnergyBreakdown& o) {
    mxu_j += o.mxu_j;
    vpu_j += o.vpu_j;
    vmem_j += o.vmem_j;
    cmem_j += o.cmem_j;
    hbm_j += o.hbm_j;
    ici_j += o.ici_j;
    return *this;
  }
  EnergyBreakdown& operator*=(double s) {
    mxu_j *= s;
    vpu_j *= s;
    vmem_j *= s;
    cmem_j *= s;
    hbm_j *= s;
    ici_j *= s;
    return *this;
  }
};

// Activity counters gathered while evaluating one operator.
struct OpActivity {
  std::uint64_t macs = 0;             // useful multiply-accumulates
  std::uint64_t vpu_lane_cycles = 0;  // VPU busy cycles (each engaging all lanes)
  Bytes vmem_bytes = 0;
  Bytes cmem_bytes = 0;
  Bytes hbm_bytes = 0;
  Bytes ici_bytes = 0;
};

inline Joules mac_energy(const TpuConfig& cfg) {
  return cfg.is_cim() ? cfg.energy.mac_energy_cim : cfg.energy.mac_energy_digital;
}

// Activity-based breakdown: every joule is attributed to a counted event.
inline EnergyBreakdown op_energy(const OpActivity& a, const TpuConfig& cfg) {
  EnergyBreakdown e;
  e.mxu_j = double(a.macs) * mac_energy(cfg);
  e.vpu_j = double(a.vpu_lane_cycles) * double(cfg.vpu.lanes) * cfg.energy.vpu_lane_op_energy;
  e.vmem_j = double(a.vmem_bytes) * cfg.energy.vmem_energy_per_byte;
  e.cmem_j = double(a.cmem_bytes) * cfg.energy.cmem_energy_per_byte;
  e.hbm_j = double(a.hbm_bytes) * cfg.energy.hbm_energy_per_byte;
  e.ici_j = double(a.ici_bytes) * cfg.energy.ici_energy_per_byte;
  return e;
}

// Peak-power-times-runtime proxy for the matrix units: the usual way a
// matrix engine's energy is quoted when comparing designs of different width.
// Charged over the cycles the MXUs hold an operator (memory stalls included);
// zero while vector or pure-movement operators run.
inline Joules mxu_power_time_energy(const TpuConfig& cfg, Cycles mxu_busy_cycles) {
  return double(peak_macs_per_cycle_total(cfg)) * mac_energy(cfg) * double(mxu_busy_cycles);
}

}  // namespace cimtpu
