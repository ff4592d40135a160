#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cimtpu/collectives.hpp"
#include "cimtpu/mapper.hpp"
#include "cimtpu/workload.hpp"

namespace cimtpu {

struct PlanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParallelismPlan {
  std::uint32_t tp = 1;
  std::uint32_t pp = 1;
  std::uint64_t microbatches = 0;  // 0: one per pipeline stage

  std::uint32_t devices() const { return tp * pp; }
  std::uint64_t effective_microbatches() const {
    return microbatches ? microbatches : std::max<std::uint32_t>(1, pp);
  }
};

inline void validate(const ParallelismPlan& plan) {
  if (plan.tp < 1 || plan.pp < 1) throw PlanError("tp and pp must be >= 1");
  const std::uint32_t dev = plan.devices();
  if (dev != 1 && dev != 2 && dev != 4)
    throw PlanError("device count must be 1, 2 or 4 (tp x pp = " + std::to_string(dev) + ")");
  if (plan.pp > 4) throw PlanError("pipeline depth is limited to 4 stages");
}

// ------------------------------------------------------------ tensor shards

namespace detail {

inline std::uint64_t exact_div(std::uint64_t value, std::uint64_t by, const char* what) {
  if (value % by != 0)
    throw PlanError(std::string(what) + " (" + std::to_string(value) +
                    ") is not divisible by tp degree " + std::to_string(by));
  return value / by;
}

}  // namespace detail

// Megatron-style tensor parallelism over one layer graph: QKV and the first
// FFN matmul split output columns, projection and the second FFN matmul split
// the reduction dimension, attention heads split across devices, and the
// row-wise vector work is sequence-sharded. Two all-reduces of the full
// activation join the partial sums (after projection and after the FFN).
inline LayerGraph shard_graph(const LayerGraph& g, std::uint32_t tp) {
  if (tp < 1) throw PlanError("tp must be >= 1");
  if (tp == 1) return g;

  const Operator* qkv = g.find("qkv");
  if (!qkv) throw PlanError("shard_graph expects a transformer layer graph (missing 'qkv')");
  const auto& qkv_gemm = std::get<GemmOp>(qkv->kind);
  const Bytes act_bytes =
      qkv_gemm.batch * qkv_gemm.m * qkv_gemm.k * bytes_per_element(qkv->precision);

  LayerGraph out;
  out.label = g.label + "-tp" + std::to_string(tp);
  for (const Operator& op : g.ops) {
    Operator s = op;
    if (auto* gm = std::get_if<GemmOp>(&s.kind)) {
      if (op.name == "qkv" || op.name == "ffn1" || op.name == "cond_mlp") {
        gm->n = detail::exact_div(gm->n, tp, "output columns");
      } else if (op.name == "proj" || op.name == "ffn2") {
        gm->k = detail::exact_div(gm->k, tp, "reduction dim");
      } else if (op.name == "attn_qk" || op.name == "attn_sv") {
        gm->batch = detail::exact_div(gm->batch, tp, "attention heads");
      }
    } else if (auto* sm = std::get_if<SoftmaxOp>(&s.kind)) {
      sm->rows = detail::exact_div(sm->rows, tp, "softmax rows");
    } else if (auto* ln = std::get_if<LayerNormOp>(&s.kind)) {
      ln->rows = detail::exact_div(ln->rows, tp, "layernorm rows");
    } else if (auto* ge = std::get_if<GeluOp>(&s.kind)) {
      ge->elements = detail::exact_div(ge->elements, tp, "gelu elements");
    } else if (auto* ew = std::get_if<ElementwiseOp>(&s.kind)) {
      ew->elements = detail::exact_div(ew->elements, tp, "elementwise elements");
    } else if (auto* kv = std::get_if<KvCacheUpdateOp>(&s.kind)) {
      kv->bytes = detail::exact_div(kv->bytes, tp, "kv-cache bytes");
    }
    out.ops.push_back(std::move(s));

    // join partial sums after the row-parallel matmuls
    if (op.name == "proj" || op.name == "ffn2") {
      const std::string ar_name = op.name == "proj" ? "allreduce_proj" : "allreduce_ffn";
      out.ops.push_back(Operator{ar_name, AllReduceOp{act_bytes, tp}, op.precision,
                                 OpCategory::Collective, {op.name}});
    }
  }
  // rewire consumers of proj/ffn2 onto the all-reduced results
  for (Operator& op : out.ops) {
    if (op.name == "allreduce_proj" || op.name == "allreduce_ffn") continue;
    for (auto& dep : op.deps) {
      if (dep == "proj") dep = "allreduce_proj";
      if (dep == "ffn2") dep = "allreduce_ffn";
    }
  }
  return out;
}

// ---------------------------------------------------------------- end-to-end

struct EndToEndReport {
  std::string model;
  std::string config;
  ParallelismPlan plan;
  Cycles prefill_cycles = 0;
  Cycles decode_cycles = 0;
  Cycles total_cycles = 0;
  double latency_s = 0;
  double prefill_s = 0;
  double decode_s = 0;
  double tokens_per_s = 0;  // LLM
  double images_per_s = 0;  // DiT
  EnergyBreakdown energy;   // all devices, whole run
  Joules mxu_power_time_j = 0;
  Bytes kv_cache_bytes_per_device = 0;
  std::uint64_t out_tokens = 0;
};

namespace detail {

struct StepCost {
  Cycles cycles = 0;           // wall-clock cycles for the step
  EnergyBreakdown energy;      // all devices
  Joules mxu_power_time_j = 0;
};

// One model pass (all layers) under the plan: pure tensor parallelism runs
// layers back to back; pipeline parallelism splits layers into stages and
// streams microbatches through them.
inline StepCost plan_step(const LayerReport& layer, std::uint64_t n_layers,
                          const ParallelismPlan& plan, Bytes p2p_bytes, const TpuConfig& cfg) {
  StepCost out;
  const std::uint64_t m = plan.effective_microbatches();
  const std::uint64_t stages = plan.pp;
  const std::uint64_t layers_per_stage = ceil_div(n_layers, stages);
  if (stages == 1) {
    out.cycles = layer.total_cycles * n_layers;
  } else {
    std::vector<Cycles> stage_cycles(stages, layers_per_stage * layer.total_cycles);
    const Cycles hop = point_to_point_cycles(p2p_bytes, cfg.ici_link_bytes_per_cycle(),
                                             std::max<std::uint32_t>(1, cfg.ici_links));
    out.cycles = pipeline_latency(stage_cycles, m, hop);
    // inter-stage activations on the ring
    EnergyBreakdown hop_e;
    hop_e.ici_j = double((stages - 1) * m * p2p_bytes) * cfg.energy.ici_energy_per_byte;
    out.energy += hop_e;
  }
  // every layer runs once per microbatch, sharded across tp devices
  const double copies = double(plan.tp) * double(stages == 1 ? 1 : m) * double(n_layers);
  EnergyBreakdown layer_e = layer.total_energy;
  layer_e *= copies;
  out.energy += layer_e;
  out.mxu_power_time_j = layer.mxu_power_time_j * copies;
  return out;
}

inline InferenceParams with_batch(const InferenceParams& p, std::uint64_t batch) {
  InferenceParams out = p;
  out.batch = batch;
  return out;
}

}  // namespace detail

// Full LLM inference: one prefill pass over the prompt, then out_len decode
// steps with the attention context growing one token per step.
inline EndToEndReport llm_end_to_end(const ModelConfig& model, const InferenceParams& params,
                                     const ParallelismPlan& plan, const TpuConfig& cfg) {
  validate(plan);
  if (model.family != ModelFamily::LLM) throw WorkloadError("llm_end_to_end expects an LLM model");
  const std::uint64_t m = plan.effective_microbatches();
  const std::uint64_t micro_batch = plan.pp > 1 ? ceil_div(params.batch, m) : params.batch;
  const Bytes e = bytes_per_element(params.precision);

  // KV cache per device: layers over pp stages, heads over tp shards
  const std::uint64_t layers_per_stage = ceil_div(model.n_layers, plan.pp);
  const Bytes kv_per_layer =
      2ull * params.batch * (params.seq_in + params.out_len) * model.d_model * e;
  const Bytes kv_per_device = kv_per_layer * layers_per_stage / plan.tp;
  if (kv_per_device > cfg.hbm_bytes)
    throw CapacityError("KV cache (" + format_bytes(kv_per_device) +
                        " per device) exceeds main memory (" + format_bytes(cfg.hbm_bytes) + ")");

  EndToEndReport rep;
  rep.model = model.name;
  rep.config = cfg.name;
  rep.plan = plan;
  rep.kv_cache_bytes_per_device = kv_per_device;
  rep.out_tokens = params.out_len;

  MappingCache cache;
  const Bytes p2p_prefill = micro_batch * params.seq_in * model.d_model * e;

  {
    const LayerGraph layer =
        shard_graph(build_llm_prefill_layer(model, detail::with_batch(params, micro_batch)),
                    plan.tp);
    const LayerReport lr = evaluate_graph(layer, cfg, &cache);
    const auto cost = detail::plan_step(lr, model.n_layers, plan, p2p_prefill, cfg);
    rep.prefill_cycles = cost.cycles;
    rep.energy += cost.energy;
    rep.mxu_power_time_j += cost.mxu_power_time_j;
  }

  const Bytes p2p_decode = micro_batch * model.d_model * e;
  for (std::uint64_t pos = 1; pos <= params.out_len; ++pos) {
    InferenceParams step = detail::with_batch(params, micro_batch);
    step.decode_pos = pos;
    const LayerGraph layer = shard_graph(build_llm_decode_layer(model, step), plan.tp);
    const LayerReport lr = evaluate_graph(layer, cfg, &cache);
    const auto cost = detail::plan_step(lr, model.n_layers, plan, p2p_decode, cfg);
    rep.decode_cycles += cost.cycles;
    rep.energy += cost.energy;
    rep.mxu_power_time_j += cost.mxu_power_time_j;
  }

  rep.total_cycles = rep.prefill_cycles + rep.decode_cycles;
  rep.prefill_s = double(rep.prefill_cycles) / cfg.frequency_hz;
  rep.decode_s = double(rep.decode_cycles) / cfg.frequency_hz;
  rep.latency_s = rep.prefill_s + rep.decode_s;
  rep.tokens_per_s =
      params.out_len ? double(params.batch * params.out_len) / rep.latency_s : 0.0;
  return rep;
}

// Full DiT inference: n_steps denoising iterations, each running every block.
inline EndToEndReport dit_end_to_end(const ModelConfig& model, const InferenceParams& params,
                                     const ParallelismPlan& plan, const TpuConfig& cfg,
                                     std::uint32_t n_steps = 50) {
  validate(plan);
  if (model.family != ModelFamily::DiT) throw WorkloadError("dit_end_to_end expects a DiT model");
  if (n_steps < 1) throw WorkloadError("dit_end_to_end needs n_steps >= 1");
  const std::uint64_t m = plan.effective_microbatches();
  const std::uint64_t micro_batch = plan.pp > 1 ? ceil_div(params.batch, m) : params.batch;
  const Bytes e = bytes_per_element(params.precision);

  EndToEndReport rep;
  rep.model = model.name;
  rep.config = cfg.name;
  rep.plan = plan;

  MappingCache cache;
  const LayerGraph block =
      shard_graph(build_dit_block(model, detail::with_batch(params, micro_batch)), plan.tp);
  const LayerReport lr = evaluate_graph(block, cfg, &cache);
  const Bytes p2p = micro_batch * dit_tokens(model, params) * model.d_model * e;
  const auto step = detail::plan_step(lr, model.n_layers, plan, p2p, cfg);

  rep.decode_cycles = 0;
  rep.prefill_cycles = 0;
  rep.total_cycles = step.cycles * n_steps;
  rep.latency_s = double(rep.total_cycles) / cfg.frequency_hz;
  EnergyBreakdown total = step.energy;
  total *= double(n_steps);
  rep.energy = total;
  rep.mxu_power_time_j = step.mxu_power_time_j * n_steps;
  rep.images_per_s = rep.latency_s > 0 ? double(params.batch) / rep.latency_s : 0.0;
  return rep;
}

}  // namespace cimtpu
