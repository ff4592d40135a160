#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cimtpu/systolic.hpp"
#include "cimtpu/units.hpp"

namespace cimtpu {

struct WorkloadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- operators

struct GemmOp {
  std::uint64_t batch = 1;
  std::uint64_t m = 1;
  std::uint64_t k = 1;
  std::uint64_t n = 1;
  // True when each batch element multiplies its own weight matrix (per-head
  // attention against cached K/V); false when one weight matrix is shared by
  // the whole batch (QKV/projection/FFN), which lets batch fold into M.
  bool weights_vary_with_batch = false;
};
struct SoftmaxOp {
  std::uint64_t rows = 1, cols = 1;
};
struct LayerNormOp {
  std::uint64_t rows = 1, cols = 1;
};
struct GeluOp {
  std::uint64_t elements = 1;
};
struct ElementwiseOp {
  std::uint64_t elements = 1, ops_per_element = 1;
};
struct KvCacheUpdateOp {
  Bytes bytes = 0;
};
struct AllReduceOp {
  Bytes bytes = 0;
  std::uint32_t group_size = 2;
};
struct PointToPointOp {
  Bytes bytes = 0;
};

using OpKind = std::variant<GemmOp, SoftmaxOp, LayerNormOp, GeluOp, ElementwiseOp, KvCacheUpdateOp,
                            AllReduceOp, PointToPointOp>;

enum class OpCategory : std::uint8_t {
  QKV,
  AttentionQK,
  AttentionSoftmax,
  AttentionSV,
  Projection,
  FFN,
  NormElementwise,
  KvCache,
  Conditioning,
  Collective,
};

inline const char* category_name(OpCategory c) {
  switch (c) {
    case OpCategory::QKV: return "qkv";
    case OpCategory::AttentionQK: return "attention_qk";
    case OpCategory::AttentionSoftmax: return "attention_softmax";
    case OpCategory::AttentionSV: return "attention_sv";
    case OpCategory::Projection: return "projection";
    case OpCategory::FFN: return "ffn";
    case OpCategory::NormElementwise: return "norm_elementwise";
    case OpCategory::KvCache: return "kv_cache";
    case OpCategory::Conditioning: return "conditioning";
    case OpCategory::Collective: return "collective";
  }
  return "?";
}

struct Operator {
  std::string name;
  OpKind kind;
  Precision precision = Precision::INT8;
  OpCategory category = OpCategory::NormElementwise;
  std::vector<std::string> deps;
};

struct LayerGraph {
  std::string label;
  std::vector<Operator> ops;

  const Operator* find(const std::string& name) const {
    for (const auto& op : ops)
      if (op.name == name) return &op;
    return nullptr;
  }
};

// Deterministic topological order: Kahn's algorithm, ready set kept in
// insertion order. Throws on cycles or unknown dependency names.
inline std::vector<std::size_t> topological_order(const LayerGraph& g) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    if (!index.emplace(g.ops[i].name, i).second)
      throw WorkloadError("duplicate operator name '" + g.ops[i].name + "'");
  }
  std::vector<std::size_t> pending(g.ops.size(), 0);
  std::vector<std::vector<std::size_t>> dependents(g.ops.size());
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    for (const auto& dep : g.ops[i].deps) {
      auto it = index.find(dep);
      if (it == index.end())
        throw WorkloadError("operator '" + g.ops[i].name + "' depends on unknown '" + dep + "'");
      ++pending[i];
      dependents[it->second].push_back(i);
    }
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < g.ops.size(); ++i)
    if (pending[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    std::size_t next = ready.front();
    ready.erase(ready.begin());
    order.push_back(next);
    for (std::size_t d : dependents[next]) {
      if (--pending[d] == 0) ready.push_back(d);
    }
  }
  if (order.size() != g.ops.size()) throw WorkloadError("operator graph has a cycle");
  return order;
}

// ---------------------------------------------------------- flops and bytes

inline std::uint64_t flops_of(const Operator& op) {
  return std::visit(
      [&](const auto& k) -> std::uint64_t {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GemmOp>) {
          return 2 * k.batch * k.m * k.k * k.n;
        } else if constexpr (std::is_same_v<T, SoftmaxOp>) {
          return k.rows * (3 * k.cols + 2);  // online algorithm op count
        } else if constexpr (std::is_same_v<T, LayerNormOp>) {
          return k.rows * (5 * k.cols + 5);
        } else if constexpr (std::is_same_v<T, GeluOp>) {
          return 6 * k.elements;  // 3 mul + 2 add + tanh
        } else if constexpr (std::is_same_v<T, ElementwiseOp>) {
          return k.elements * k.ops_per_element;
        } else {
          return 0;  // data movement only
        }
      },
      op.kind);
}

struct OpBytes {
  Bytes input = 0, weight = 0, output = 0;
  Bytes total() const { return input + weight + output; }
};

inline OpBytes bytes_of(const Operator& op) {
  const Bytes e = bytes_per_element(op.precision);
  return std::visit(
      [&](const auto& k) -> OpBytes {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GemmOp>) {
          const Bytes w_copies = k.weights_vary_with_batch ? k.batch : 1;
          return {k.batch * k.m * k.k * e, w_copies * k.k * k.n * e, k.batch * k.m * k.n * e};
        } else if constexpr (std::is_same_v<T, SoftmaxOp> || std::is_same_v<T, LayerNormOp>) {
          return {k.rows * k.cols * e, 0, k.rows * k.cols * e};
        } else if constexpr (std::is_same_v<T, GeluOp>) {
          return {k.elements * e, 0, k.elements * e};
        } else if constexpr (std::is_same_v<T, ElementwiseOp>) {
          return {k.elements * e, 0, k.elements * e};
        } else if constexpr (std::is_same_v<T, KvCacheUpdateOp>) {
          return {0, 0, k.bytes};
        } else if constexpr (std::is_same_v<T, AllReduceOp>) {
          return {k.bytes, 0, k.bytes};
        } else {
          return {k.bytes, 0, k.bytes};
        }
      },
      op.kind);
}

// ------------------------------------------------------------------- models

enum class ModelFamily : std::uint8_t { LLM, DiT };

struct ModelConfig {
  std::string name = "gpt3-30b";
  ModelFamily family = ModelFamily::LLM;
  std::uint32_t n_layers = 48;
  std::uint32_t n_heads = 56;
  std::uint32_t d_model = 7168;
  std::uint32_t ffn_ratio = 4;
  std::uint32_t patch_size = 2;      // DiT latent patchify
  std::uint32_t vae_downsample = 8;  // DiT latent downsampling

  std::uint32_t d_head() const { return d_model / n_heads; }
  std::uint64_t ffn_hidden() const { return std::uint64_t(ffn_ratio) * d_model; }
};

inline void validate(const ModelConfig& m) {
  if (m.n_layers < 1 || m.n_heads < 1 || m.d_model < 1)
    throw WorkloadError("model dims must be >= 1");
  if (m.d_model % m.n_heads != 0) throw WorkloadError("d_model must be divisible by n_heads");
  if (m.ffn_ratio < 1) throw WorkloadError("ffn_ratio must be >= 1");
}

inline ModelConfig builtin_model(const std::string& name) {
  if (name == "gpt3-30b") return ModelConfig{};
  if (name == "dit-xl-2") {
    ModelConfig m;
    m.name = name;
    m.family = ModelFamily::DiT;
    m.n_layers = 28;
    m.n_heads = 16;
    m.d_model = 1152;
    return m;
  }
  throw WorkloadError("unknown model '" + name + "'");
}

inline std::vector<std::string> model_names() { return {"gpt3-30b", "dit-xl-2"}; }

struct InferenceParams {
  std::uint64_t batch = 8;
  std::uint64_t seq_in = 1024;      // prompt tokens (LLM)
  std::uint64_t decode_pos = 256;   // output token index being generated
  std::uint64_t out_len = 512;      // generated tokens for end-to-end runs
  std::uint64_t image_resolution = 512;  // pixels (DiT)
  Precision precision = Precision::INT8;
};

// ----------------------------------------------------------------- builders

namespace detail {

inline void push(LayerGraph& g, std::string name, OpKind kind, Precision p, OpCategory cat,
                 std::vector<std::string> deps) {
  g.ops.push_back(Operator{std::move(name), std::move(kind), p, cat, std::move(deps)});
}

}  // namespace detail

// One Transformer layer processing the whole prompt. Attention is emitted as
// batched per-head GEMMs (batch = B * heads, each head against its own K/V).
inline LayerGraph build_llm_prefill_layer(const ModelConfig& m, const InferenceParams& p) {
  validate(m);
  if (m.family != ModelFamily::LLM) throw WorkloadError("prefill builder expects an LLM model");
  if (p.batch < 1 || p.seq_in < 1) throw WorkloadError("prefill needs batch >= 1, seq_in >= 1");
  const std::uint64_t b = p.batch, l = p.seq_in, d = m.d_model, h = m.n_heads, dh = m.d_head();
  const std::uint64_t f = m.ffn_hidden();
  const Bytes e = bytes_per_element(p.precision);
  const Precision pr = p.precision;

  LayerGraph g;
  g.label = "llm-prefill";
  detail::push(g, "ln1", LayerNormOp{b * l, d}, pr, OpCategory::NormElementwise, {});
  detail::push(g, "qkv", GemmOp{b, l, d, 3 * d, false}, pr, OpCategory::QKV, {"ln1"});
  detail::push(g, "attn_qk", GemmOp{b * h, l, dh, l, true}, pr, OpCategory::AttentionQK, {"qkv"});
  detail::push(g, "attn_softmax", SoftmaxOp{b * h * l, l}, pr, OpCategory::AttentionSoftmax,
               {"attn_qk"});
  detail::push(g, "attn_sv", GemmOp{b * h, l, l, dh, true}, pr, OpCategory::AttentionSV,
               {"attn_softmax"});
  detail::push(g, "proj", GemmOp{b, l, d, d, false}, pr, OpCategory::Projection, {"attn_sv"});
  detail::push(g, "resid1", ElementwiseOp{b * l * d, 1}, pr, OpCategory::NormElementwise, {"proj"});
  detail::push(g, "ln2", LayerNormOp{b * l, d}, pr, OpCategory::NormElementwise, {"resid1"});
  detail::push(g, "ffn1", GemmOp{b, l, d, f, false}, pr, OpCategory::FFN, {"ln2"});
  detail::push(g, "gelu", GeluOp{b * l * f}, pr, OpCategory::FFN, {"ffn1"});
  detail::push(g, "ffn2", GemmOp{b, l, f, d, false}, pr, OpCategory::FFN, {"gelu"});
  detail::push(g, "resid2", ElementwiseOp{b * l * d, 1}, pr, OpCategory::NormElementwise, {"ffn2"});
  detail::push(g, "kv_update", KvCacheUpdateOp{2 * b * l * d * e}, pr, OpCategory::KvCache,
               {"qkv"});
  return g;
}

// One Transformer layer generating token decode_pos. All GEMMs shrink to
// GEMV shape (M = 1); attention runs against the cached context of
// seq_in + decode_pos tokens, and the cache grows by one token.
inline LayerGraph build_llm_decode_layer(const ModelConfig& m, const InferenceParams& p) {
  validate(m);
  if (m.family != ModelFamily::LLM) throw WorkloadError("decode builder expects an LLM model");
  if (p.batch < 1) throw WorkloadError("decode needs batch >= 1");
  if (p.decode_pos < 1) throw WorkloadError("decode needs decode_pos >= 1");
  const std::uint64_t b = p.batch, d = m.d_model, h = m.n_heads, dh = m.d_head();
  const std::uint64_t f = m.ffn_hidden();
  const std::uint64_t ctx = p.seq_in + p.decode_pos;
  const Bytes e = bytes_per_element(p.precision);
  const Precision pr = p.precision;

  LayerGraph g;
  g.label = "llm-decode";
  detail::push(g, "ln1", LayerNormOp{b, d}, pr, OpCategory::NormElementwise, {});
  detail::push(g, "qkv", GemmOp{b, 1, d, 3 * d, false}, pr, OpCategory::QKV, {"ln1"});
  detail::push(g, "attn_qk", GemmOp{b * h, 1, dh, ctx, true}, pr, OpCategory::AttentionQK,
               {"qkv"});
  detail::push(g, "attn_softmax", SoftmaxOp{b * h, ctx}, pr, OpCategory::AttentionSoftmax,
               {"attn_qk"});
  detail::push(g, "attn_sv", GemmOp{b * h, 1, ctx, dh, true}, pr, OpCategory::AttentionSV,
               {"attn_softmax"});
  detail::push(g, "proj", GemmOp{b, 1, d, d, false}, pr, OpCategory::Projection, {"attn_sv"});
  detail::push(g, "resid1", ElementwiseOp{b * d, 1}, pr, OpCategory::NormElementwise, {"proj"});
  detail::push(g, "ln2", LayerNormOp{b, d}, pr, OpCategory::NormElementwise, {"resid1"});
  detail::push(g, "ffn1", GemmOp{b, 1, d, f, false}, pr, OpCategory::FFN, {"ln2"});
  detail::push(g, "gelu", GeluOp{b * f}, pr, OpCategory::FFN, {"ffn1"});
  detail::push(g, "ffn2", GemmOp{b, 1, f, d, false}, pr, OpCategory::FFN, {"gelu"});
  detail::push(g, "resid2", ElementwiseOp{b * d, 1}, pr, OpCategory::NormElementwise, {"ffn2"});
  detail::push(g, "kv_update", KvCacheUpdateOp{2 * b * d * e}, pr, OpCategory::KvCache, {"qkv"});
  return g;
}

inline std::uint64_t dit_tokens(const ModelConfig& m, const InferenceParams& p) {
  const std::uint64_t denom = std::uint64_t(m.vae_downsample) * m.patch_size;
  if (p.image_resolution % denom != 0)
    throw WorkloadError("image resolution must be divisible by vae_downsample * patch_size");
  const std::uint64_t side = p.image_resolution / denom;
  if (side < 1) throw WorkloadError("image resolution too small for the latent patchify");
  return side * side;
}

// One DiT block: a Transformer layer with adaLN conditioning. The conditioning
// MLP produces the six shift/scale/gate vectors; they are applied as
// elementwise modulate and gate stages around attention and the pointwise FFN.
inline LayerGraph build_dit_block(const ModelConfig& m, const InferenceParams& p) {
  validate(m);
  if (m.family != ModelFamily::DiT) throw WorkloadError("block builder expects a DiT model");
  if (p.batch < 1) throw WorkloadError("block needs batch >= 1");
  const std::uint64_t b = p.batch, d = m.d_model, h = m.n_heads, dh = m.d_head();
  const std::uint64_t f = m.ffn_hidden();
  const std::uint64_t t = dit_tokens(m, p);
  const Precision pr = p.precision;

  LayerGraph g;
  g.label = "dit-block";
  detail::push(g, "cond_mlp", GemmOp{b, 1, d, 6 * d, false}, pr, OpCategory::Conditioning, {});
  detail::push(g, "ln1", LayerNormOp{b * t, d}, pr, OpCategory::NormElementwise, {});
  detail::push(g, "modulate1", ElementwiseOp{b * t * d, 2}, pr, OpCategory::NormElementwise,
               {"ln1", "cond_mlp"});
  detail::push(g, "qkv", GemmOp{b, t, d, 3 * d, false}, pr, OpCategory::QKV, {"modulate1"});
  detail::push(g, "attn_qk", GemmOp{b * h, t, dh, t, true}, pr, OpCategory::AttentionQK, {"qkv"});
  detail::push(g, "attn_softmax", SoftmaxOp{b * h * t, t}, pr, OpCategory::AttentionSoftmax,
               {"attn_qk"});
  detail::push(g, "attn_sv", GemmOp{b * h, t, t, dh, true}, pr, OpCategory::AttentionSV,
               {"attn_softmax"});
  detail::push(g, "proj", GemmOp{b, t, d, d, false}, pr, OpCategory::Projection, {"attn_sv"});
  detail::push(g, "gate1", ElementwiseOp{b * t * d, 2}, pr, OpCategory::NormElementwise,
               {"proj", "cond_mlp"});
  detail::push(g, "ln2", LayerNormOp{b * t, d}, pr, OpCategory::NormElementwise, {"gate1"});
  detail::push(g, "modulate2", ElementwiseOp{b * t * d, 2}, pr, OpCategory::NormElementwise,
               {"ln2", "cond_mlp"});
  detail::push(g, "ffn1", GemmOp{b, t, d, f, false}, pr, OpCategory::FFN, {"modulate2"});
  detail::push(g, "gelu", GeluOp{b * t * f}, pr, OpCategory::FFN, {"ffn1"});
  detail::push(g, "ffn2", GemmOp{b, t, f, d, false}, pr, OpCategory::FFN, {"gelu"});
  detail::push(g, "gate2", ElementwiseOp{b * t * d, 2}, pr, OpCategory::NormElementwise,
               {"ffn2", "cond_mlp"});
  return g;
}

inline std::uint64_t graph_flops(const LayerGraph& g) {
  std::uint64_t total = 0;
  for (const auto& op : g.ops) total += flops_of(op);
  return total;
}

}  // namespace cimtpu
