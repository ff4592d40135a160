#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "cimtpu/units.hpp"

namespace cimtpu {

enum class MemLevel : std::uint8_t { HBM_CMEM, CMEM_VMEM, VMEM_COMPUTE };

struct TransferLeg {
  MemLevel level = MemLevel::HBM_CMEM;
  Bytes bytes = 0;
  double bytes_per_cycle = 1.0;
  Cycles fixed_latency = 0;
};

inline Cycles transfer_cycles(const TransferLeg& leg) {
  if (leg.bytes == 0) return 0;
  if (leg.bytes_per_cycle <= 0) throw std::invalid_argument("transfer_cycles: zero bandwidth");
  return ceil_cycles(double(leg.bytes), leg.bytes_per_cycle) + leg.fixed_latency;
}

// Two-stage pipeline over a tile stream: stage one fetches tile i+1 while
// stage two computes tile i. Without double buffering the phases serialize.
inline Cycles pipeline_overlap(std::span<const Cycles> compute, std::span<const Cycles> load,
                               bool double_buffered) {
  if (compute.size() != load.size() || compute.empty())
    throw std::invalid_argument("pipeline_overlap: lists must be same nonzero length");
  if (!double_buffered) {
    Cycles total = 0;
    for (size_t i = 0; i < compute.size(); ++i) total += compute[i] + load[i];
    return total;
  }
  Cycles total = load[0];
  for (size_t i = 0; i < compute.size(); ++i) {
    const Cycles next_load = i + 1 < load.size() ? load[i + 1] : 0;
    total += std::max(compute[i], next_load);
  }
  return total;
}

// Uniform-tile shortcut: count tiles with identical compute/load cost.
inline Cycles pipeline_overlap_uniform(Cycles compute, Cycles load, std::uint64_t tiles,
                                       bool double_buffered) {
  if (tiles == 0) return 0;
  if (!double_buffered) return tiles * (compute + load);
  return load + (tiles - 1) * std::max(compute, load) + compute;
}

// DRAM coalescing: a strided tile row shorter than the burst still occupies
// whole bursts. Tile rows that span the full underlying row are contiguous in
// memory and quantize once as a block.
inline Bytes coalesced_bytes(std::uint64_t rows, Bytes row_bytes, Bytes contiguous_row_bytes,
                             Bytes burst = 64) {
  if (row_bytes < 1) throw std::invalid_argument("coalesced_bytes: row_bytes >= 1");
  if (row_bytes >= contiguous_row_bytes) return round_up(rows * row_bytes, burst);
  return rows * round_up(row_bytes, burst);
}

// Tile admissibility at a buffered level: streamed operands need two slots
// under double buffering; the accumulating output tile stays resident.
inline bool capacity_ok(Bytes streamed_bytes, Bytes resident_bytes, Bytes capacity,
                        bool double_buffered) {
  const Bytes need = streamed_bytes * (double_buffered ? 2 : 1) + resident_bytes;
  return need <= capacity;
}

}  // namespace cimtpu
