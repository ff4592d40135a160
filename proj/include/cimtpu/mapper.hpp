#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cimtpu/cim.hpp"
#include "cimtpu/collectives.hpp"
#include "cimtpu/energy.hpp"
#include "cimtpu/hwconfig.hpp"
#include "cimtpu/memmodel.hpp"
#include "cimtpu/systolic.hpp"
#include "cimtpu/vpu.hpp"
#include "cimtpu/workload.hpp"

namespace cimtpu {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TileDims {
  std::uint64_t m = 1, k = 1, n = 1;
  friend bool operator==(const TileDims&, const TileDims&) = default;
};

enum class Engine : std::uint8_t { MXU, VPU };

struct Mapping {
  TileDims cmem, vmem;
  bool db_cmem = true;  // double-buffer HBM->CMEM tile loads
  bool db_vmem = true;  // double-buffer CMEM->VMEM tile loads
  // For batched GEMMs with per-element weights the MXUs can divide the batch
  // instead of the output columns: batch_mxu_split MXU groups each take whole
  // batch elements, the remaining mxu_count / batch_mxu_split MXUs per group
  // split N. Always 1 for weight-shared GEMMs.
  std::uint32_t batch_mxu_split = 1;
  Engine engine = Engine::MXU;
  friend bool operator==(const Mapping&, const Mapping&) = default;

  // deterministic tie-break order
  auto tie_key() const {
    return std::make_tuple(cmem.m, cmem.k, cmem.n, vmem.m, vmem.k, vmem.n, db_cmem, db_vmem,
                           batch_mxu_split);
  }
};

struct LatencyEnergy {
  Cycles cycles = 0;
  double seconds = 0;
  double utilization = 0;
  EnergyBreakdown energy;
  Joules mxu_power_time_j = 0;  // peak-power x op-latency proxy (MXU ops only)
  OpActivity activity;
};

namespace detail {

// Mapping-level view of a GEMM. Batches sharing one weight matrix fold into
// M; batches with per-element weights keep an explicit batch loop outside the
// tile nest.
struct GemmProblem {
  std::uint64_t m = 1, k = 1, n = 1;
  std::uint64_t batch = 1;
  bool weights_vary = false;
  Precision precision = Precision::INT8;

  static GemmProblem from(const GemmOp& g, Precision p) {
    GemmProblem out;
    if (g.weights_vary_with_batch) {
      out.m = g.m;
      out.batch = g.batch;
      out.weights_vary = true;
    } else {
      out.m = g.m * g.batch;
      out.batch = 1;
    }
    out.k = g.k;
    out.n = g.n;
    out.precision = p;
    return out;
  }

  std::uint64_t macs() const { return batch * m * k * n; }
};

inline std::uint64_t engine_pack(const TpuConfig& cfg, std::uint64_t kv, std::uint64_t batch,
                                 bool vary) {
  if (const auto* g = std::get_if<CimGrid>(&cfg.mxu)) return cim_batch_pack(*g, kv, batch, vary);
  (void)kv;
  (void)vary;
  return 1;
}

// Engine time for `groups` same-shaped weight sets resident on one MXU: the
// CIM grid packs them into row groups, the digital array refills serially.
inline Cycles engine_tile_cycles(const TpuConfig& cfg, const GemmTile& t, std::uint64_t groups,
                                 bool vary) {
  if (const auto* g = std::get_if<CimGrid>(&cfg.mxu)) return cim_cycles(*g, t, groups, vary);
  const auto& d = std::get<DigitalSystolic>(cfg.mxu);
  (void)vary;
  return std::max<std::uint64_t>(1, groups) * systolic_cycles(d.rows, d.cols, t);
}

inline Bytes gemm_streamed_tile_bytes(const TileDims& t, std::uint64_t groups, Bytes e) {
  return groups * (t.m * t.k + t.k * t.n) * e;
}

inline Bytes gemm_resident_tile_bytes(const TileDims& t, std::uint64_t groups, Bytes e) {
  return groups * t.m * t.n * e;
}

}  // namespace detail

// ------------------------------------------------------------------ costing

// Evaluates one GEMM under one mapping. The loop nest, outermost first:
//
//   batch groups (distinct-weight batches, CIM row groups packed)
//     CMEM tiles (Mc,Kc,Nc), HBM loads coalesced, double-buffered on request
//       VMEM tiles (Mv,Kv,Nv), OCI loads, double-buffered on request
//         engine: the tile's N columns split ceil-evenly across the MXUs
//
// Tiles are costed uniformly: a partial edge tile is charged as a full one.
// Outputs accumulate in VMEM across the K loop (innermost) and write back
// through OCI and HBM once per output tile.
inline LatencyEnergy evaluate_mapping(const detail::GemmProblem& p, const Mapping& map,
                                      const TpuConfig& cfg) {
  const Bytes e = bytes_per_element(p.precision);
  const TileDims& vt = map.vmem;
  const TileDims& ct = map.cmem;
  if (vt.m < 1 || vt.k < 1 || vt.n < 1) throw InfeasibleError("vmem tile dims must be >= 1");
  if (vt.m > ct.m || vt.k > ct.k || vt.n > ct.n)
    throw InfeasibleError("vmem tile must fit within the cmem tile");
  if (ct.m > p.m || ct.k > p.k || ct.n > p.n)
    throw InfeasibleError("cmem tile must fit within the operator");

  const std::uint32_t g_b = map.batch_mxu_split;
  if (g_b < 1 || cfg.mxu_count % g_b != 0)
    throw InfeasibleError("batch_mxu_split must divide mxu_count");
  if (g_b > 1 && (!p.weights_vary || p.batch == 1))
    throw InfeasibleError("batch split applies only to batched per-element-weight GEMMs");
  const std::uint32_t g_n = cfg.mxu_count / g_b;

  const std::uint64_t pack = detail::engine_pack(cfg, vt.k, p.batch, p.weights_vary);
  const std::uint64_t in_flight = std::min<std::uint64_t>(pack * g_b, p.batch);
  const std::uint64_t iters = ceil_div(p.batch, in_flight);
  const std::uint64_t last_groups = p.batch - (iters - 1) * in_flight;

  if (!capacity_ok(detail::gemm_streamed_tile_bytes(vt, in_flight, e),
                   detail::gemm_resident_tile_bytes(vt, in_flight, e), cfg.vmem_bytes,
                   map.db_vmem))
    throw InfeasibleError("vmem tile exceeds VMEM capacity");
  if (!capacity_ok(detail::gemm_streamed_tile_bytes(ct, in_flight, e),
                   detail::gemm_resident_tile_bytes(ct, in_flight, e), cfg.cmem_bytes,
                   map.db_cmem))
    throw InfeasibleError("cmem tile exceeds CMEM capacity");

  const double oci_bpc = cfg.oci_bytes_per_cycle();
  const double hbm_bpc = cfg.hbm_bytes_per_cycle();
  const std::uint64_t tm_c = ceil_div(p.m, ct.m), tk_c = ceil_div(p.k, ct.k),
                      tn_c = ceil_div(p.n, ct.n);
  const std::uint64_t tm_v = ceil_div(ct.m, vt.m), tk_v = ceil_div(ct.k, vt.k),
                      tn_v = ceil_div(ct.n, vt.n);
  const std::uint64_t cmem_tiles = tm_c * tk_c * tn_c;
  const std::uint64_t vmem_tiles = tm_v * tk_v * tn_v;

  const GemmTile engine_tile{vt.m, vt.k, ceil_div(vt.n, g_n), p.precision};

  LatencyEnergy out;
  OpActivity& act = out.activity;

  struct IterCost {
    Cycles cycles = 0;
    Bytes hbm = 0, oci = 0, vmem = 0;
  };
  // One buffered level: when double buffering, loads prefetch one tile ahead
  // and output stores drain alongside the next tile's compute, so the level
  // can never beat either the compute chain or the link's total occupancy.
  // Without double buffering everything serializes.
  auto level_cycles = [](Cycles compute, Cycles load, std::uint64_t tiles, Cycles store,
                         std::uint64_t stores, bool db) -> Cycles {
    const Cycles wire = tiles * load + stores * store;
    if (!db) return tiles * compute + wire;
    return std::max(pipeline_overlap_uniform(compute, load, tiles, true), wire);
  };

  auto iteration = [&](std::uint64_t groups) -> IterCost {
    // VMEM level, per CMEM tile. The slowest MXU group carries
    // ceil(groups / g_b) whole batch elements.
    const Cycles c_v =
        detail::engine_tile_cycles(cfg, engine_tile, ceil_div(groups, g_b), p.weights_vary);
    const Bytes vmem_stream = detail::gemm_streamed_tile_bytes(vt, groups, e);
    const Cycles l_v = ceil_cycles(double(vmem_stream), oci_bpc);
    const Bytes out_tile_v = detail::gemm_resident_tile_bytes(vt, groups, e);
    const Cycles wb_v = ceil_cycles(double(out_tile_v), oci_bpc);
    const Cycles vmem_level =
        level_cycles(c_v, l_v, vmem_tiles, wb_v, tm_v * tn_v, map.db_vmem);

    // CMEM level, per iteration
    const Bytes in_coal = coalesced_bytes(groups * ct.m, ct.k * e, p.k * e, cfg.dram_burst_bytes);
    const Bytes w_coal = coalesced_bytes(groups * ct.k, ct.n * e, p.n * e, cfg.dram_burst_bytes);
    const Cycles l_c = ceil_cycles(double(in_coal + w_coal), hbm_bpc);
    const Bytes out_coal = coalesced_bytes(groups * ct.m, ct.n * e, p.n * e, cfg.dram_burst_bytes);
    const Cycles wb_c = ceil_cycles(double(out_coal), hbm_bpc);

    IterCost cost;
    cost.cycles = level_cycles(vmem_level, l_c, cmem_tiles, wb_c, tm_c * tn_c, map.db_cmem);
    cost.oci = cmem_tiles * (vmem_tiles * vmem_stream + tm_v * tn_v * out_tile_v);
    cost.hbm = cmem_tiles * (in_coal + w_coal) + tm_c * tn_c * out_coal;
    cost.vmem = cost.oci + cmem_tiles * vmem_tiles * 2 * out_tile_v;  // accumulator RMW
    return cost;
  };

  Cycles total = 0;
  if (iters > 1) {
    const IterCost full = iteration(in_flight);
    total += (iters - 1) * full.cycles;
    act.hbm_bytes += (iters - 1) * full.hbm;
    act.cmem_bytes += (iters - 1) * (full.hbm + full.oci);  // bytes enter and leave CMEM
    act.vmem_bytes += (iters - 1) * full.vmem;
  }
  const IterCost last = iteration(last_groups);
  total += last.cycles;
  act.hbm_bytes += last.hbm;
  act.cmem_bytes += last.hbm + last.oci;
  act.vmem_bytes += last.vmem;

  out.cycles = total;
  out.seconds = double(total) / cfg.frequency_hz;
  act.macs = p.macs();
  out.utilization = double(act.macs) / (double(peak_macs_per_cycle_total(cfg)) * double(total));
  out.energy = op_energy(act, cfg);
  out.mxu_power_time_j = mxu_power_time_energy(cfg, total);
  return out;
}

inline LatencyEnergy evaluate_mapping(const Operator& op, const Mapping& map,
                                      const TpuConfig& cfg) {
  const auto* g = std::get_if<GemmOp>(&op.kind);
  if (!g) throw InfeasibleError("evaluate_mapping expects a GEMM operator");
  return evaluate_mapping(detail::GemmProblem::from(*g, op.precision), map, cfg);
}

// -------------------------------------------------------------- enumeration

namespace detail {

// Candidate tile extents for one dimension: powers of two, the dimension
// itself, and small multiples of the engine's native extent.
inline std::vector<std::uint64_t> tile_candidates(std::uint64_t dim, std::uint64_t native) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 1; p <= dim; p *= 2) out.push_back(p);
  if (native > 0) {
    for (std::uint64_t mult = 1; mult <= 8; ++mult) {
      if (native * mult <= dim) out.push_back(native * mult);
    }
    for (std::uint64_t p = 16; native * p <= dim; p *= 2) out.push_back(native * p);
  }
  out.push_back(dim);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct NativeTiles {
  std::uint64_t k = 0, n = 0;
};

inline NativeTiles native_tiles(const TpuConfig& cfg) {
  if (const auto* d = std::get_if<DigitalSystolic>(&cfg.mxu)) return {d->rows, d->cols};
  const auto& g = std::get<CimGrid>(cfg.mxu);
  return {g.core_inputs, g.n_core()};
}

// CMEM tile choices derived from a VMEM tile: the tile itself, greedy
// doublings in a few priority orders, a full-K variant (local accumulation),
// and the whole problem.
inline std::vector<TileDims> cmem_variants(const TileDims& v, const GemmProblem& p,
                                           const TpuConfig& cfg, std::uint64_t pack) {
  const Bytes e = bytes_per_element(p.precision);
  auto fits = [&](const TileDims& t) {
    return capacity_ok(gemm_streamed_tile_bytes(t, pack, e), gemm_resident_tile_bytes(t, pack, e),
                       cfg.cmem_bytes, false);
  };
  auto grow = [&](std::initializer_list<int> order) {
    TileDims t = v;
    bool progress = true;
    while (progress) {
      progress = false;
      for (int axis : order) {
        TileDims next = t;
        std::uint64_t& cur = axis == 0 ? next.m : axis == 1 ? next.k : next.n;
        const std::uint64_t dim = axis == 0 ? p.m : axis == 1 ? p.k : p.n;
        if (cur >= dim) continue;
        cur = std::min(cur * 2, dim);
        if (fits(next)) {
          t = next;
          progress = true;
        }
      }
    }
    return t;
  };

  std::vector<TileDims> out{v};
  out.push_back(grow({2, 1, 0}));  // weight reuse first: N, K, M
  out.push_back(grow({0, 2, 1}));  // input reuse first: M, N, K
  TileDims full_k = v;
  full_k.k = p.k;
  if (fits(full_k)) out.push_back(full_k);
  TileDims whole{p.m, p.k, p.n};
  if (fits(whole)) out.push_back(whole);
  std::sort(out.begin(), out.end(), [](const TileDims& a, const TileDims& b) {
    return std::tie(a.m, a.k, a.n) < std::tie(b.m, b.k, b.n);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename Fn>
inline void for_each_mapping(const GemmProblem& p, const TpuConfig& cfg, Fn&& fn) {
  const Bytes e = bytes_per_element(p.precision);
  const NativeTiles nat = native_tiles(cfg);
  const auto ms = tile_candidates(p.m, 0);
  const auto ks = tile_candidates(p.k, nat.k);
  const auto ns = tile_candidates(p.n, nat.n);
  std::vector<std::uint32_t> splits{1};
  if (p.weights_vary && p.batch > 1) {
    for (std::uint32_t s = 2; s <= cfg.mxu_count; s *= 2) {
      if (cfg.mxu_count % s == 0) splits.push_back(s);
    }
  }
  for (std::uint64_t mv : ms) {
    for (std::uint64_t kv : ks) {
      const std::uint64_t pack = engine_pack(cfg, kv, p.batch, p.weights_vary);
      for (std::uint64_t nv : ns) {
        for (std::uint32_t g_b : splits) {
          const std::uint64_t in_flight = std::min<std::uint64_t>(pack * g_b, p.batch);
          const TileDims vt{mv, kv, nv};
          // must fit without double buffering at minimum
          if (!capacity_ok(gemm_streamed_tile_bytes(vt, in_flight, e),
                           gemm_resident_tile_bytes(vt, in_flight, e), cfg.vmem_bytes, false))
            continue;
          const bool vt_db_ok =
              capacity_ok(gemm_streamed_tile_bytes(vt, in_flight, e),
                          gemm_resident_tile_bytes(vt, in_flight, e), cfg.vmem_bytes, true);
          for (const TileDims& ct : cmem_variants(vt, p, cfg, in_flight)) {
            const bool ct_db_ok =
                capacity_ok(gemm_streamed_tile_bytes(ct, in_flight, e),
                            gemm_resident_tile_bytes(ct, in_flight, e), cfg.cmem_bytes, true);
            for (bool db_c : {true, false}) {
              if (db_c && !ct_db_ok) continue;
              for (bool db_v : {true, false}) {
                if (db_v && !vt_db_ok) continue;
                fn(Mapping{ct, vt, db_c, db_v, g_b, Engine::MXU});
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

// Candidate mappings of a GEMM operator, pruned: tile extents are powers of
// two, native-tile multiples, or the dimension itself; capacity-violating
// tiles are dropped.
inline std::vector<Mapping> enumerate_mappings(const Operator& op, const TpuConfig& cfg) {
  const auto* g = std::get_if<GemmOp>(&op.kind);
  if (!g) throw InfeasibleError("enumerate_mappings expects a GEMM operator");
  const auto p = detail::GemmProblem::from(*g, op.precision);
  std::vector<Mapping> out;
  detail::for_each_mapping(p, cfg, [&](const Mapping& m) { out.push_back(m); });
  if (out.empty())
    throw InfeasibleError("no feasible mapping: operator too large for the VMEM minimum tile");
  return out;
}

namespace detail {

inline bool better(const std::pair<Mapping, LatencyEnergy>& a,
                   const std::pair<Mapping, LatencyEnergy>& b) {
  if (a.second.cycles != b.second.cycles) return a.second.cycles < b.second.cycles;
  if (a.second.energy.total() != b.second.energy.total())
    return a.second.energy.total() < b.second.energy.total();
  return a.first.tie_key() < b.first.tie_key();
}

template <typename EnumFn>
inline std::pair<Mapping, LatencyEnergy> search_best(const GemmProblem& p, const TpuConfig& cfg,
                                                     EnumFn&& enumerate) {
  std::optional<std::pair<Mapping, LatencyEnergy>> best;
  enumerate([&](const Mapping& m) {
    LatencyEnergy le;
    try {
      le = evaluate_mapping(p, m, cfg);
    } catch (const InfeasibleError&) {
      return;
    }
    std::pair<Mapping, LatencyEnergy> cur{m, le};
    if (!best || better(cur, *best)) best = cur;
  });
  if (!best)
    throw InfeasibleError("no feasible mapping: operator too large for the VMEM minimum tile");
  return *best;
}

}  // namespace detail

// Latency-optimal mapping over the pruned space; ties break toward lower
// energy, then the lexicographically smaller tile tuple.
inline std::pair<Mapping, LatencyEnergy> best_mapping(const Operator& op, const TpuConfig& cfg) {
  const auto* g = std::get_if<GemmOp>(&op.kind);
  if (!g) throw InfeasibleError("best_mapping expects a GEMM operator");
  const auto p = detail::GemmProblem::from(*g, op.precision);
  return detail::search_best(p, cfg, [&](auto&& fn) { detail::for_each_mapping(p, cfg, fn); });
}

// Reference search over the dense mapspace: every divisor of each dimension
// plus the pruned candidate set, at both levels, with all buffer flags. Slow;
// guarded to small operators.
inline std::pair<Mapping, LatencyEnergy> brute_force_best(const Operator& op,
                                                          const TpuConfig& cfg) {
  const auto* g = std::get_if<GemmOp>(&op.kind);
  if (!g) throw InfeasibleError("brute_force_best expects a GEMM operator");
  const auto p = detail::GemmProblem::from(*g, op.precision);
  if (p.m > 256 || p.k > 256 || p.n > 256)
    throw InfeasibleError("brute_force_best guard: dims <= 256");

  const detail::NativeTiles nat = detail::native_tiles(cfg);
  auto grid = [&](std::uint64_t dim, std::uint64_t native) {
    std::vector<std::uint64_t> out = detail::tile_candidates(dim, native);
    for (std::uint64_t d = 1; d <= dim; ++d) {
      if (dim % d == 0) out.push_back(d);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  const auto ms = grid(p.m, 0), ks = grid(p.k, nat.k), ns = grid(p.n, nat.n);

  return detail::search_best(p, cfg, [&](auto&& fn) {
    for (std::uint64_t mv : ms)
      for (std::uint64_t kv : ks)
        for (std::uint64_t nv : ns)
          for (std::uint64_t mc : ms)
            for (std::uint64_t kc : ks)
              for (std::uint64_t nc : ns) {
                if (mc < mv || kc < kv || nc < nv) continue;
                for (bool db_c : {false, true})
                  for (bool db_v : {false, true})
                    fn(Mapping{{mc, kc, nc}, {mv, kv, nv}, db_c, db_v, 1, Engine::MXU});
              }
  });
}

// --------------------------------------------------- non-GEMM operator cost

namespace detail {

// Vector and data-movement operators have a fixed mapping: stream the rows
// through VMEM with double buffering, so latency is the max of compute and
// the bandwidth legs.
inline LatencyEnergy evaluate_vector_op(const Operator& op, const TpuConfig& cfg) {
  LatencyEnergy out;
  OpActivity& act = out.activity;
  const OpBytes bytes = bytes_of(op);
  const double hbm_bpc = cfg.hbm_bytes_per_cycle();
  const double oci_bpc = cfg.oci_bytes_per_cycle();

  Cycles compute = 0;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, SoftmaxOp>) {
          compute = softmax_cycles(cfg.vpu, k.rows, k.cols);
        } else if constexpr (std::is_same_v<T, LayerNormOp>) {
          compute = layernorm_cycles(cfg.vpu, k.rows, k.cols);
        } else if constexpr (std::is_same_v<T, GeluOp>) {
          compute = gelu_cycles(cfg.vpu, k.elements);
        } else if constexpr (std::is_same_v<T, ElementwiseOp>) {
          compute = elementwise_cycles(cfg.vpu, k.elements, k.ops_per_element);
        }
      },
      op.kind);

  if (const auto* ar = std::get_if<AllReduceOp>(&op.kind)) {
    out.cycles = allreduce_cycles(ar->bytes, ar->group_size, cfg.ici_link_bytes_per_cycle(),
                                  cfg.ici_links);
    act.ici_bytes = allreduce_wire_bytes_per_device(ar->bytes, ar->group_size);
  } else if (const auto* pp = std::get_if<PointToPointOp>(&op.kind)) {
    out.cycles = point_to_point_cycles(pp->bytes, cfg.ici_link_bytes_per_cycle(), cfg.ici_links);
    act.ici_bytes = pp->bytes;
  } else {
    const Bytes moved = bytes.input + bytes.output;
    const Cycles hbm = ceil_cycles(double(moved), hbm_bpc);
    const Cycles oci = ceil_cycles(double(moved), oci_bpc);
    out.cycles = std::max({compute, hbm, oci});
    act.vpu_lane_cycles = compute;
    act.vmem_bytes = moved;
    act.cmem_bytes = 2 * moved;
    act.hbm_bytes = moved;
  }
  out.seconds = double(out.cycles) / cfg.frequency_hz;
  out.utilization = 0.0;
  out.energy = op_energy(act, cfg);
  out.mxu_power_time_j = 0.0;  // MXUs are gated while the VPU or the fabric runs
  return out;
}

}  // namespace detail

// ------------------------------------------------------------- graph report

// Deterministic memo for repeated GEMM shapes within one configuration.
class MappingCache {
 public:
  std::optional<std::pair<Mapping, LatencyEnergy>> find(const detail::GemmProblem& p) const {
    auto it = map_.find(key(p));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void insert(const detail::GemmProblem& p, const std::pair<Mapping, LatencyEnergy>& v) {
    map_.emplace(key(p), v);
  }

 private:
  static std::string key(const detail::GemmProblem& p) {
    return std::to_string(p.m) + "," + std::to_string(p.k) + "," + std::to_string(p.n) + "," +
           std::to_string(p.batch) + "," + (p.weights_vary ? "v" : "s") + "," +
           std::to_string(int(p.precision));
  }
  std::unordered_map<std::string, std::pair<Mapping, LatencyEnergy>> map_;
};

struct OpReport {
  std::string name;
  OpCategory category = OpCategory::NormElementwise;
  std::uint64_t flops = 0;
  OpBytes bytes;
  LatencyEnergy le;
  std::optional<Mapping> mapping;  // GEMMs only
};

struct CategoryRow {
  OpCategory category = OpCategory::NormElementwise;
  Cycles cycles = 0;
  double share = 0.0;
  EnergyBreakdown energy;
};

struct LayerReport {
  std::string label;
  std::vector<OpReport> ops;  // topological order
  Cycles total_cycles = 0;
  double total_seconds = 0;
  EnergyBreakdown total_energy;
  Joules mxu_power_time_j = 0;
  std::vector<CategoryRow> categories;  // fixed enum order, present categories only
};

// Schedules the graph in topological order, one operator at a time (no
// inter-operator overlap), and rolls up per-category cycles and energy.
inline LayerReport evaluate_graph(const LayerGraph& g, const TpuConfig& cfg,
                                  MappingCache* cache = nullptr) {
  LayerReport report;
  report.label = g.label;
  const auto order = topological_order(g);
  for (std::size_t idx : order) {
    const Operator& op = g.ops[idx];
    OpReport r;
    r.name = op.name;
    r.category = op.category;
    r.flops = flops_of(op);
    r.bytes = bytes_of(op);
    if (const auto* gm = std::get_if<GemmOp>(&op.kind)) {
      const auto p = detail::GemmProblem::from(*gm, op.precision);
      std::optional<std::pair<Mapping, LatencyEnergy>> hit;
      if (cache) hit = cache->find(p);
      if (!hit) {
        hit = detail::search_best(p, cfg,
                                  [&](auto&& fn) { detail::for_each_mapping(p, cfg, fn); });
        if (cache) cache->insert(p, *hit);
      }
      r.mapping = hit->first;
      r.le = hit->second;
    } else {
      r.le = detail::evaluate_vector_op(op, cfg);
    }
    report.total_cycles += r.le.cycles;
    report.total_energy += r.le.energy;
    report.mxu_power_time_j += r.le.mxu_power_time_j;
    report.ops.push_back(std::move(r));
  }
  report.total_seconds = double(report.total_cycles) / cfg.frequency_hz;

  for (int c = 0; c <= int(OpCategory::Collective); ++c) {
    CategoryRow row;
    row.category = OpCategory(c);
    bool present = false;
    for (const auto& op : report.ops) {
      if (op.category == row.category) {
        present = true;
        row.cycles += op.le.cycles;
        row.energy += op.le.energy;
      }
    }
    if (!present) continue;
    row.share = report.total_cycles ? double(row.cycles) / double(report.total_cycles) : 0.0;
    report.categories.push_back(row);
  }
  return report;
}

inline Cycles category_cycles(const LayerReport& r, OpCategory c) {
  for (const auto& row : r.categories)
    if (row.category == c) return row.cycles;
  return 0;
}

// Lower bound on any operator's latency: compute-bound at full peak or
// bandwidth-bound on the main-memory link.
inline Cycles roofline_lower_bound(const Operator& op, const TpuConfig& cfg) {
  const std::uint64_t flops = flops_of(op);
  const Cycles compute_bound =
      ceil_div(flops, 2 * std::max<std::uint64_t>(1, peak_macs_per_cycle_total(cfg)));
  Cycles memory_bound = 0;
  if (!std::holds_alternative<AllReduceOp>(op.kind) &&
      !std::holds_alternative<PointToPointOp>(op.kind)) {
    memory_bound = ceil_cycles(double(bytes_of(op).total()), cfg.hbm_bytes_per_cycle());
  }
  return std::max(compute_bound, memory_bound);
}

// MXU activity-energy ratio between two configurations on the same workload.
inline double mxu_energy_ratio(const LayerGraph& g, const TpuConfig& a, const TpuConfig& b) {
  const Joules ja = evaluate_graph(g, a).total_energy.mxu_j;
  const Joules jb = evaluate_graph(g, b).total_energy.mxu_j;
  if (jb == 0) throw std::invalid_argument("mxu_energy_ratio: zero denominator");
  return ja / jb;
}

}  // namespace cimtpu

