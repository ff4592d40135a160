#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "cimtpu/units.hpp"

namespace cimtpu {

// Ring all-reduce over n devices: reduce-scatter plus all-gather move
// 2 (n-1)/n of the payload through each device's links.
inline Cycles allreduce_cycles(Bytes bytes, std::uint32_t n, double link_bytes_per_cycle,
                               std::uint32_t links) {
  if (n < 2) throw std::invalid_argument("allreduce needs n >= 2");
  if (links < 1 || link_bytes_per_cycle <= 0)
    throw std::invalid_argument("allreduce needs at least one link with bandwidth");
  const double wire_bytes = 2.0 * double(n - 1) / double(n) * double(bytes);
  return ceil_cycles(wire_bytes, link_bytes_per_cycle * links);
}

inline Bytes allreduce_wire_bytes_per_device(Bytes bytes, std::uint32_t n) {
  return static_cast<Bytes>(2.0 * double(n - 1) / double(n) * double(bytes));
}

inline Cycles point_to_point_cycles(Bytes bytes, double link_bytes_per_cycle, std::uint32_t links) {
  if (links < 1 || link_bytes_per_cycle <= 0)
    throw std::invalid_argument("point-to-point needs at least one link with bandwidth");
  return ceil_cycles(double(bytes), link_bytes_per_cycle * links);
}

// Synchronous pipeline, bottleneck-stage model: m microbatches over S stages
// take (m + S - 1) slots of the slowest stage plus the inter-stage hops.
inline Cycles pipeline_latency(std::span<const Cycles> stage_cycles, std::uint64_t microbatches,
                               Cycles p2p_cycles) {
  if (stage_cycles.empty()) throw std::invalid_argument("pipeline needs at least one stage");
  if (microbatches < 1) throw std::invalid_argument("pipeline needs microbatches >= 1");
  const Cycles slowest = *std::max_element(stage_cycles.begin(), stage_cycles.end());
  const std::uint64_t stages = stage_cycles.size();
  return (microbatches + stages - 1) * slowest + (stages - 1) * p2p_cycles;
}

}  // namespace cimtpu
