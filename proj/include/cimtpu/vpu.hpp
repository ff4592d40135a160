#pragma once

#include <cstdint>
#include <stdexcept>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/units.hpp"

namespace cimtpu {

// Vector-unit cycle models. Work proceeds in lane-wide chunks of
// ceil(work/lanes); cross-lane reductions use a binary tree over the occupied
// lanes. All functions are per-element-exact and row-additive.

// Online softmax: one fused pass keeps the running max and the rescaled
// exponential sum (cmp + exp + add + mul per chunk), a tree reduction merges
// the per-lane partial states, and a second pass normalizes (div per chunk).
inline Cycles softmax_cycles(const VpuConfig& v, std::uint64_t rows, std::uint64_t cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("softmax needs rows, cols >= 1");
  const std::uint64_t chunks = ceil_div(cols, v.lanes);
  const Cycles pass1 = chunks * (v.c_cmp + v.c_exp + v.c_add + v.c_mul);
  const Cycles reduce = Cycles(ceil_log2(std::min<std::uint64_t>(cols, v.lanes))) * v.c_add;
  const Cycles pass2 = chunks * v.c_div;
  return rows * (pass1 + reduce + pass2);
}

// One-pass mean/variance (sum and sum-of-squares accumulate per chunk), two
// tree reductions, then a normalize pass.
inline Cycles layernorm_cycles(const VpuConfig& v, std::uint64_t rows, std::uint64_t cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("layernorm needs rows, cols >= 1");
  const std::uint64_t chunks = ceil_div(cols, v.lanes);
  const Cycles pass1 = chunks * (v.c_add + 2 * v.c_mul);
  const Cycles reduce = 2 * Cycles(ceil_log2(std::min<std::uint64_t>(cols, v.lanes))) * v.c_add;
  const Cycles pass2 = chunks * (v.c_add + v.c_mul) + v.c_rsqrt;
  return rows * (pass1 + reduce + pass2);
}

// tanh approximation x * 0.5 * (1 + tanh(sqrt(2/pi) * (x + 0.044715 x^3))):
// three multiplies, two adds and one tanh per chunk.
inline Cycles gelu_cycles(const VpuConfig& v, std::uint64_t elements) {
  if (elements < 1) throw std::invalid_argument("gelu needs elements >= 1");
  return ceil_div(elements, v.lanes) * (3 * v.c_mul + 2 * v.c_add + v.c_tanh);
}

inline Cycles elementwise_cycles(const VpuConfig& v, std::uint64_t elements,
                                 std::uint64_t ops_per_element) {
  if (elements < 1) throw std::invalid_argument("elementwise needs elements >= 1");
  return ceil_div(elements, v.lanes) * ops_per_element * v.c_add;
}

}  // namespace cimtpu
