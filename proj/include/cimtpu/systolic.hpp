#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/units.hpp"

namespace cimtpu {

enum class Precision : std::uint8_t { INT8, BF16 };

inline std::uint32_t bytes_per_element(Precision p) { return p == Precision::INT8 ? 1 : 2; }

struct GemmTile {
  std::uint64_t m = 1;
  std::uint64_t k = 1;
  std::uint64_t n = 1;
  Precision precision = Precision::INT8;
};

// Weight-stationary systolic array, analytic model.
//
// The K x N weight matrix is folded into ceil(K/R) * ceil(N/C) resident tiles.
// Each fold pays R cycles of weight fill (not overlapped with compute; the
// array has a single weight register per PE) followed by the skewed stream and
// drain of M input rows: M + R + C - 2 cycles. Partial folds still traverse
// the full array (zero-padded rows/columns), so every fold costs the same.
inline Cycles systolic_cycles(std::uint32_t rows, std::uint32_t cols, const GemmTile& t) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("systolic array dims must be >= 1");
  const std::uint64_t folds = ceil_div(t.k, rows) * ceil_div(t.n, cols);
  const std::uint64_t per_fold = std::uint64_t(rows) + (t.m + rows + cols - 2);
  return folds * per_fold;
}

inline double systolic_utilization(std::uint32_t rows, std::uint32_t cols, const GemmTile& t) {
  const double flops = 2.0 * double(t.m) * double(t.k) * double(t.n);
  return flops / (2.0 * rows * cols * double(systolic_cycles(rows, cols, t)));
}

// Event-driven reference for systolic_cycles. Simulates the array cycle by
// cycle: the weight fill streams one row per cycle, activation row m enters
// array row r at the left edge on compute cycle m + r and moves one column
// per cycle. Partial sums travel downward on the same wavefront, so the MAC
// firing in the bottom row is the completed output for that (m, column) pair.
// A fold ends on the cycle the last bottom-row MAC fires; folds run back to
// back with no overlap.
inline Cycles systolic_oracle(std::uint32_t rows, std::uint32_t cols, const GemmTile& t) {
  if (rows > 32 || cols > 32 || t.m > 64 || t.k > 64 || t.n > 64)
    throw std::invalid_argument("systolic_oracle guard: R,C <= 32 and M,K,N <= 64");

  const std::uint64_t folds = ceil_div(t.k, rows) * ceil_div(t.n, cols);
  Cycles clock = 0;
  for (std::uint64_t fold = 0; fold < folds; ++fold) {
    std::uint32_t rows_loaded = 0;  // one weight row per cycle, full height
    while (rows_loaded < rows) {
      ++rows_loaded;
      ++clock;
    }
    // act[r][c]: activation row index occupying PE (r, c), or -1.
    std::vector<std::vector<std::int64_t>> act(rows, std::vector<std::int64_t>(cols, -1));
    std::uint64_t outputs_done = 0;
    const std::uint64_t outputs_expected = t.m * cols;
    std::uint64_t tau = 0;
    while (outputs_done < outputs_expected) {
      for (std::int32_t r = 0; r < std::int32_t(rows); ++r) {
        for (std::int32_t c = cols - 1; c > 0; --c) act[r][c] = act[r][c - 1];
        std::int64_t due = std::int64_t(tau) - r;
        act[r][0] = (due >= 0 && due < std::int64_t(t.m)) ? due : -1;
      }
      for (std::uint32_t c = 0; c < cols; ++c) {
        if (act[rows - 1][c] >= 0) ++outputs_done;
      }
      ++tau;
      ++clock;
    }
  }
  return clock;
}

}  // namespace cimtpu
