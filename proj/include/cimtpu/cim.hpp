#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/systolic.hpp"
#include "cimtpu/units.hpp"

namespace cimtpu {

// How many batch elements with distinct weight matrices can occupy the grid
// simultaneously. A K slice spanning ceil(K/core_inputs) grid rows forms an
// independent row group (output-stationary accumulation never crosses
// groups), so spare rows can host further batch elements. Batches that share
// one weight matrix gain nothing here; they stream as extra input rows.
inline std::uint64_t cim_batch_pack(const CimGrid& g, std::uint64_t k, std::uint64_t batch,
                                    bool weights_vary) {
  if (!weights_vary || batch <= 1) return 1;
  const std::uint64_t rows_per_elem = ceil_div(std::min<std::uint64_t>(k, g.k_capacity()), g.core_inputs);
  const std::uint64_t groups = std::max<std::uint64_t>(1, g.grid_rows / std::max<std::uint64_t>(1, rows_per_elem));
  return std::min(groups, batch);
}

namespace detail {

struct CimFoldGeometry {
  std::uint64_t f_k = 1, f_n = 1;        // fold counts along K and N
  std::uint64_t k_full = 1, k_edge = 1;  // K extent of full / last fold
  std::uint64_t n_full = 1, n_edge = 1;  // N extent of full / last fold
  Cycles skew = 0;                       // column skew + BF16 pre/post constants
};

inline CimFoldGeometry cim_fold_geometry(const CimGrid& g, const GemmTile& t) {
  CimFoldGeometry geo;
  const std::uint64_t kcap = g.k_capacity();
  const std::uint64_t ncap = g.n_capacity();
  geo.f_k = ceil_div(t.k, kcap);
  geo.f_n = ceil_div(t.n, ncap);
  geo.k_full = std::min(t.k, kcap);
  geo.k_edge = t.k - (geo.f_k - 1) * kcap;
  geo.n_full = std::min(t.n, ncap);
  geo.n_edge = t.n - (geo.f_n - 1) * ncap;
  geo.skew = g.grid_cols - 1;
  if (t.precision == Precision::BF16) geo.skew += g.fp_pre_cycles + g.fp_post_cycles;
  return geo;
}

// Output channels land on the columns round-robin, so a partial fold loads
// every column evenly and its cores skip the unused channel groups.
inline std::uint64_t cim_fold_channels_per_column(const CimGrid& g, std::uint64_t n_fold) {
  return std::min<std::uint64_t>(g.n_core(), ceil_div(n_fold, g.grid_cols));
}

// Per-fold compute: every input row covers the occupied channel groups of the
// fullest column, wave_cycles per group, plus the fold's skew constants.
inline Cycles cim_fold_compute(const CimGrid& g, const GemmTile& t, const CimFoldGeometry& geo,
                               std::uint64_t n_fold) {
  const std::uint64_t waves =
      ceil_div(cim_fold_channels_per_column(g, n_fold), g.active_outputs_per_wave);
  return t.m * waves * g.wave_cycles + geo.skew;
}

// Weight-load cycles of one core column for one fold: channels_per_column
// output channels for every packed group, each with k_fold weights, over the
// column's dedicated weight port.
inline Cycles cim_fold_load(const CimGrid& g, const GemmTile& t, std::uint64_t groups,
                            std::uint64_t k_fold, std::uint64_t n_fold) {
  const std::uint64_t n_col = cim_fold_channels_per_column(g, n_fold);
  const std::uint64_t bytes = groups * k_fold * n_col * bytes_per_element(t.precision);
  return ceil_div(bytes, g.weight_io_bytes_per_cycle);
}

}  // namespace detail

namespace detail {

struct CimFoldSegment {
  std::uint64_t count = 0;  // consecutive folds with identical cost
  Cycles compute = 0;
  Cycles load = 0;
};

// The fold sequence of one batch iteration, collapsed into at most four
// uniform segments (n-class x k-class, K innermost). Within an n-class the
// compute cost is constant, so the pair sum of the pipeline recurrence is
// order-invariant there and the collapse is exact.
inline std::size_t cim_iteration_segments(const CimGrid& g, const GemmTile& t,
                                          const CimFoldGeometry& geo, std::uint64_t groups,
                                          CimFoldSegment out[4]) {
  std::size_t n = 0;
  for (int nc = 0; nc < 2; ++nc) {
    const std::uint64_t n_groups = nc == 0 ? geo.f_n - 1 : 1;
    const std::uint64_t n_ext = nc == 0 ? geo.n_full : geo.n_edge;
    if (n_groups == 0) continue;
    const Cycles c = cim_fold_compute(g, t, geo, n_ext);
    for (int kc = 0; kc < 2; ++kc) {
      const std::uint64_t k_cnt = kc == 0 ? geo.f_k - 1 : 1;
      const std::uint64_t k_ext = kc == 0 ? geo.k_full : geo.k_edge;
      if (k_cnt == 0) continue;
      out[n++] = {n_groups * k_cnt, c, cim_fold_load(g, t, groups, k_ext, n_ext)};
    }
  }
  return n;
}

}  // namespace detail

// Cycle count of one GEMM on the CIM grid.
//
// The weight matrix folds into ceil(K/Kcap) * ceil(N/Ncap) resident tiles
// (Kcap = grid_rows * core_inputs, Ncap = grid_cols * n_core). Every fold runs
// its wave schedule in lockstep across columns: M input rows, each covering
// the fullest column's occupied channel groups at wave_cycles apiece, plus
// grid_cols - 1 cycles of systolic input skew and the BF16 pre/post pipeline
// constants. Fold f+1's weights stream in during fold f's compute (one spare
// weight slot per core), so with folds >= 2 a load is hidden whenever the
// preceding compute covers it:
//
//   total = load[0] + sum_i max(compute[i], load[i+1]) + compute[last]-term
//
// Batch elements with distinct weights either pack into spare row groups
// (cim_batch_pack) or append further fold iterations.
inline Cycles cim_cycles(const CimGrid& g, const GemmTile& t, std::uint64_t batch = 1,
                         bool weights_vary = false) {
  GemmTile tile = t;
  if (!weights_vary) {
    tile.m = t.m * std::max<std::uint64_t>(1, batch);
    batch = 1;
  }
  const std::uint64_t pack = cim_batch_pack(g, tile.k, batch, weights_vary);
  const std::uint64_t iters = ceil_div(std::max<std::uint64_t>(1, batch), pack);
  const auto geo = detail::cim_fold_geometry(g, tile);
  const std::uint64_t last_groups = batch - (iters - 1) * pack;

  // total = l_0 + sum_{j>=1} max(c_{j-1}, l_j) + c_last over the concatenated
  // segment runs: the full-group iteration list repeated (iters-1) times, then
  // the final partial-group list.
  Cycles total = 0;
  Cycles prev_c = 0;
  bool first_fold = true;
  auto run_list = [&](const detail::CimFoldSegment* segs, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (first_fold) {
        total += segs[i].load;
        first_fold = false;
      } else {
        total += std::max(prev_c, segs[i].load);
      }
      total += (segs[i].count - 1) * std::max(segs[i].compute, segs[i].load);
      prev_c = segs[i].compute;
    }
  };

  detail::CimFoldSegment full[4], last[4];
  const std::size_t n_last = detail::cim_iteration_segments(g, tile, geo, last_groups, last);
  if (iters > 1) {
    const std::size_t n_full = detail::cim_iteration_segments(g, tile, geo, pack, full);
    run_list(full, n_full);
    if (iters > 2) {
      // each further full iteration contributes the same pair sum
      Cycles occurrence = 0;
      Cycles pc = prev_c;
      for (std::size_t i = 0; i < n_full; ++i) {
        occurrence += std::max(pc, full[i].load);
        occurrence += (full[i].count - 1) * std::max(full[i].compute, full[i].load);
        pc = full[i].compute;
      }
      total += (iters - 2) * occurrence;
      prev_c = pc;
    }
  }
  run_list(last, n_last);
  return total + prev_c;
}

// Event-driven reference for cim_cycles. Tracks, cycle by cycle, each core
// column's weight port (streaming the next fold's bytes, at most one fold
// ahead of the compute) and its wave schedule (row counter, wave counter,
// cycle within the wave). Fold transitions are grid-synchronous: a new fold
// starts only after every column finished the previous one, then columns
// start staggered one cycle apart as the input vector propagates.
inline Cycles cim_oracle(const CimGrid& g, const GemmTile& t, std::uint64_t batch = 1,
                         bool weights_vary = false) {
  if (g.grid_rows > 8 || g.grid_cols > 8 || g.core_inputs > 8 || g.n_core() > 8 ||
      g.wave_cycles > 8 || g.active_outputs_per_wave > 8 || t.m > 64 || t.k > 64 || t.n > 64 ||
      batch > 16)
    throw std::invalid_argument("cim_oracle guard: grid <= 8x8, core params <= 8, M,K,N <= 64");

  GemmTile tile = t;
  if (!weights_vary) {
    tile.m = t.m * std::max<std::uint64_t>(1, batch);
    batch = 1;
  }
  const std::uint64_t pack = cim_batch_pack(g, tile.k, batch, weights_vary);
  const std::uint64_t iters = ceil_div(std::max<std::uint64_t>(1, batch), pack);
  const auto geo = detail::cim_fold_geometry(g, tile);

  struct Fold {
    std::uint64_t k = 0, n = 0, groups = 0;
  };
  std::vector<Fold> folds;
  for (std::uint64_t it = 0; it < iters; ++it) {
    const std::uint64_t groups = std::min(pack, batch - it * pack);
    for (std::uint64_t nf = 0; nf < geo.f_n; ++nf) {
      for (std::uint64_t kf = 0; kf < geo.f_k; ++kf) {
        folds.push_back({kf + 1 < geo.f_k ? geo.k_full : geo.k_edge,
                         nf + 1 < geo.f_n ? geo.n_full : geo.n_edge, groups});
      }
    }
  }

  const std::uint32_t cols = g.grid_cols;
  const std::uint64_t total_folds = folds.size();
  struct ColState {
    std::uint64_t load_fold = 0;   // fold whose bytes are streaming in
    std::uint64_t bytes_done = 0;  // progress into load_fold
    std::uint64_t finished = 0;    // folds fully computed by this column
    bool running = false;
    std::uint64_t rows_done = 0, waves_done = 0, wave_cycle = 0, drain_left = 0;
  };
  std::vector<ColState> col(cols);
  auto fold_bytes = [&](std::uint64_t f) {
    const std::uint64_t n_col = detail::cim_fold_channels_per_column(g, folds[f].n);
    return folds[f].groups * folds[f].k * n_col * bytes_per_element(tile.precision);
  };
  auto fold_waves = [&](std::uint64_t f) {
    return ceil_div(detail::cim_fold_channels_per_column(g, folds[f].n),
                    g.active_outputs_per_wave);
  };
  const Cycles drain = tile.precision == Precision::BF16 ? g.fp_pre_cycles + g.fp_post_cycles : 0;

  std::uint64_t barrier_fold = 0;  // all columns finished folds < barrier_fold
  Cycles cycle = 0;
  constexpr Cycles kCycleCap = 1ull << 32;
  while (barrier_fold < total_folds) {
    if (cycle > kCycleCap) throw std::runtime_error("cim_oracle: cycle cap exceeded");
    // Snapshot of cycle-start state: starts may only consume weights delivered
    // and column starts observed in earlier cycles.
    std::uint8_t weights_ready[8], neighbor_started[8];
    for (std::uint32_t c = 0; c < cols; ++c) {
      weights_ready[c] = col[c].load_fold > barrier_fold;
      neighbor_started[c] =
          c == 0 || col[c - 1].running || col[c - 1].finished > barrier_fold;
    }
    // Weight ports: each column streams bytes for its next undelivered fold,
    // but never more than one fold beyond the one the grid is computing.
    for (std::uint32_t c = 0; c < cols; ++c) {
      auto& s = col[c];
      if (s.load_fold < total_folds && s.load_fold <= barrier_fold + 1) {
        s.bytes_done += g.weight_io_bytes_per_cycle;
        if (s.bytes_done >= fold_bytes(s.load_fold)) {
          ++s.load_fold;
          s.bytes_done = 0;
        }
      }
    }
    // Column starts: fold barrier_fold begins on a column once its weights
    // arrived and the previous column started at least one cycle earlier
    // (systolic input skew). A started column advances its wave schedule this
    // same cycle: wave_cycles ticks per wave, waves per input row, M rows,
    // then the BF16 pre/post pipeline drain.
    for (std::uint32_t c = 0; c < cols; ++c) {
      auto& s = col[c];
      if (!s.running && s.finished == barrier_fold && weights_ready[c] && neighbor_started[c]) {
        s.running = true;
        s.rows_done = s.waves_done = s.wave_cycle = 0;
        s.drain_left = drain;
      }
      if (!s.running) continue;
      if (s.rows_done < tile.m) {
        if (++s.wave_cycle == g.wave_cycles) {
          s.wave_cycle = 0;
          if (++s.waves_done == fold_waves(barrier_fold)) {
            s.waves_done = 0;
            ++s.rows_done;
          }
        }
      } else if (s.drain_left > 0) {
        --s.drain_left;
      }
      if (s.rows_done == tile.m && s.drain_left == 0) {
        s.running = false;
        s.finished = barrier_fold + 1;
      }
    }
    if (std::all_of(col.begin(), col.end(),
                    [&](const ColState& s) { return s.finished > barrier_fold; })) {
      ++barrier_fold;
    }
    ++cycle;
  }
  return cycle;
}

// Cycle advantage of the CIM grid over a digital array on a GEMV-shaped tile.
inline double gemv_advantage(const CimGrid& g, std::uint32_t rows, std::uint32_t cols,
                             const GemmTile& t, std::uint64_t batch = 1, bool weights_vary = false) {
  if (t.m != 1) throw std::invalid_argument("gemv_advantage expects M = 1");
  Cycles digital = 0;
  if (weights_vary) {
    digital = batch * systolic_cycles(rows, cols, t);
  } else {
    GemmTile folded = t;
    folded.m = batch;
    digital = systolic_cycles(rows, cols, folded);
  }
  return double(digital) / double(cim_cycles(g, t, batch, weights_vary));
}

}  // namespace cimtpu
