#pragma once

#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cimtpu/config_json.hpp"
#include "cimtpu/dse.hpp"
#include "cimtpu/mapper.hpp"
#include "cimtpu/multidevice.hpp"
#include "cimtpu/workload.hpp"

namespace cimtpu {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

using json = nlohmann::json;

inline json energy_json(const EnergyBreakdown& e) {
  return {{"mxu_j", e.mxu_j},   {"vpu_j", e.vpu_j},   {"vmem_j", e.vmem_j},
          {"cmem_j", e.cmem_j}, {"hbm_j", e.hbm_j},   {"ici_j", e.ici_j},
          {"total_j", e.total()}};
}

inline json mapping_json(const Mapping& m) {
  return {{"cmem_tile", {m.cmem.m, m.cmem.k, m.cmem.n}},
          {"vmem_tile", {m.vmem.m, m.vmem.k, m.vmem.n}},
          {"double_buffer_cmem", m.db_cmem},
          {"double_buffer_vmem", m.db_vmem},
          {"batch_mxu_split", m.batch_mxu_split},
          {"engine", m.engine == Engine::MXU ? "mxu" : "vpu"}};
}

inline const char* kind_label(const OpKind& kind) {
  return std::visit(
      [](const auto& k) -> const char* {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GemmOp>) return "gemm";
        else if constexpr (std::is_same_v<T, SoftmaxOp>) return "softmax";
        else if constexpr (std::is_same_v<T, LayerNormOp>) return "layernorm";
        else if constexpr (std::is_same_v<T, GeluOp>) return "gelu";
        else if constexpr (std::is_same_v<T, ElementwiseOp>) return "elementwise";
        else if constexpr (std::is_same_v<T, KvCacheUpdateOp>) return "kv_cache_update";
        else if constexpr (std::is_same_v<T, AllReduceOp>) return "all_reduce";
        else return "point_to_point";
      },
      kind);
}

}  // namespace detail

inline nlohmann::json layer_report_json(const LayerReport& r, const TpuConfig& cfg,
                                        const LayerGraph& graph) {
  using detail::json;
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["kind"] = "layer";
  doc["workload"] = r.label;
  doc["config"] = json::parse(serialize_config(cfg));
  doc["assumptions"] = cfg.assumptions;

  json ops = json::array();
  for (std::size_t i = 0; i < r.ops.size(); ++i) {
    const OpReport& op = r.ops[i];
    json o;
    o["name"] = op.name;
    o["kind"] = detail::kind_label(graph.find(op.name)->kind);
    o["category"] = category_name(op.category);
    o["flops"] = op.flops;
    o["bytes"] = {{"input", op.bytes.input}, {"weight", op.bytes.weight},
                  {"output", op.bytes.output}};
    o["cycles"] = op.le.cycles;
    o["seconds"] = op.le.seconds;
    o["utilization"] = op.le.utilization;
    o["energy"] = detail::energy_json(op.le.energy);
    o["mxu_power_time_j"] = op.le.mxu_power_time_j;
    if (op.mapping) o["mapping"] = detail::mapping_json(*op.mapping);
    ops.push_back(std::move(o));
  }
  doc["operators"] = std::move(ops);

  json cats = json::array();
  for (const auto& row : r.categories) {
    cats.push_back({{"category", category_name(row.category)},
                    {"cycles", row.cycles},
                    {"share", row.share},
                    {"energy", detail::energy_json(row.energy)}});
  }
  doc["categories"] = std::move(cats);
  doc["totals"] = {{"cycles", r.total_cycles},
                   {"seconds", r.total_seconds},
                   {"energy", detail::energy_json(r.total_energy)},
                   {"mxu_power_time_j", r.mxu_power_time_j}};
  return doc;
}

inline nlohmann::json end_to_end_json(const EndToEndReport& r, const TpuConfig& cfg) {
  using detail::json;
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["kind"] = "end_to_end";
  doc["workload"] = r.model;
  doc["config"] = json::parse(serialize_config(cfg));
  doc["assumptions"] = cfg.assumptions;
  doc["plan"] = {{"tp", r.plan.tp},
                 {"pp", r.plan.pp},
                 {"microbatches", r.plan.effective_microbatches()},
                 {"devices", r.plan.devices()}};
  doc["totals"] = {{"prefill_cycles", r.prefill_cycles},
                   {"decode_cycles", r.decode_cycles},
                   {"cycles", r.total_cycles},
                   {"prefill_seconds", r.prefill_s},
                   {"decode_seconds", r.decode_s},
                   {"seconds", r.latency_s},
                   {"tokens_per_s", r.tokens_per_s},
                   {"images_per_s", r.images_per_s},
                   {"energy", detail::energy_json(r.energy)},
                   {"mxu_power_time_j", r.mxu_power_time_j},
                   {"kv_cache_bytes_per_device", r.kv_cache_bytes_per_device}};
  return doc;
}

inline nlohmann::json sweep_json(const SweepTable& t) {
  using detail::json;
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["kind"] = "sweep";
  doc["workload"] = t.workload;
  doc["plan"] = {{"tp", t.plan.tp}, {"pp", t.plan.pp}, {"devices", t.plan.devices()}};
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row;
    row["config"] = r.config_name;
    row["feasible"] = r.feasible;
    if (r.feasible) {
      row["latency_s"] = r.latency_s;
      row["throughput"] = r.throughput;
      row["mxu_energy_j"] = r.mxu_energy_j;
      row["mxu_activity_j"] = r.mxu_activity_j;
      row["total_energy_j"] = r.total_energy_j;
    } else {
      row["error"] = r.error;
    }
    row["peak_macs_per_cycle"] = r.peak_macs_per_cycle;
    row["area_proxy"] = r.area_proxy;
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  return doc;
}

inline nlohmann::json baseline_ratios_json(const std::vector<BaselineRatios>& ratios,
                                           const std::string& baseline_name) {
  using detail::json;
  json arr = json::array();
  for (const auto& r : ratios) {
    json row;
    row["config"] = r.config_name;
    row["feasible"] = r.feasible;
    if (r.feasible) {
      row["latency_ratio"] = r.latency_ratio;
      row["throughput_ratio"] = r.throughput_ratio;
      row["mxu_energy_ratio"] = r.mxu_energy_ratio;
      row["total_energy_ratio"] = r.total_energy_ratio;
      row["peak_macs_ratio"] = r.peak_macs_ratio;
      row["area_ratio"] = r.area_ratio;
    }
    arr.push_back(std::move(row));
  }
  return json{{"baseline", baseline_name}, {"rows", std::move(arr)}};
}

// ------------------------------------------------------------------- csv

inline std::string sweep_csv(const SweepTable& t) {
  std::ostringstream out;
  out << "config,feasible,latency_s,throughput,mxu_energy_j,mxu_activity_j,total_energy_j,"
         "peak_macs_per_cycle,area_proxy,error\n";
  out << std::setprecision(12);
  for (const auto& r : t.rows) {
    out << r.config_name << ',' << (r.feasible ? "true" : "false") << ',';
    if (r.feasible) {
      out << r.latency_s << ',' << r.throughput << ',' << r.mxu_energy_j << ','
          << r.mxu_activity_j << ',' << r.total_energy_j;
    } else {
      out << ",,,,";
    }
    out << ',' << r.peak_macs_per_cycle << ',' << r.area_proxy << ',';
    for (char c : r.error) out << (c == ',' ? ';' : c);
    out << '\n';
  }
  return out.str();
}

// ------------------------------------------------------------------- text

inline std::string layer_report_text(const LayerReport& r, const TpuConfig& cfg) {
  std::ostringstream out;
  out << "workload " << r.label << " on " << cfg.name << "\n";
  out << std::left << std::setw(16) << "operator" << std::right << std::setw(14) << "cycles"
      << std::setw(12) << "seconds" << std::setw(8) << "util" << std::setw(14) << "energy_J"
      << "\n";
  for (const auto& op : r.ops) {
    out << std::left << std::setw(16) << op.name << std::right << std::setw(14) << op.le.cycles
        << std::setw(12) << std::scientific << std::setprecision(3) << op.le.seconds
        << std::setw(8) << std::fixed << std::setprecision(3) << op.le.utilization
        << std::setw(14) << std::scientific << std::setprecision(3) << op.le.energy.total()
        << "\n";
  }
  out << std::left << std::setw(16) << "total" << std::right << std::setw(14) << r.total_cycles
      << std::setw(12) << std::scientific << std::setprecision(3) << r.total_seconds
      << std::setw(8) << " " << std::setw(14) << r.total_energy.total() << "\n\n";
  out << "category shares\n";
  for (const auto& c : r.categories) {
    out << "  " << std::left << std::setw(20) << category_name(c.category) << std::right
        << std::fixed << std::setprecision(4) << std::setw(8) << c.share << "\n";
  }
  return out.str();
}

inline std::string end_to_end_text(const EndToEndReport& r) {
  std::ostringstream out;
  out << "model " << r.model << " on " << r.config << " (tp=" << r.plan.tp << " pp=" << r.plan.pp
      << " devices=" << r.plan.devices() << ")\n";
  out << std::scientific << std::setprecision(4);
  out << "  prefill_s        " << r.prefill_s << "\n";
  out << "  decode_s         " << r.decode_s << "\n";
  out << "  latency_s        " << r.latency_s << "\n";
  if (r.tokens_per_s > 0) out << "  tokens_per_s     " << r.tokens_per_s << "\n";
  if (r.images_per_s > 0) out << "  images_per_s     " << r.images_per_s << "\n";
  out << "  energy_J         " << r.energy.total() << "\n";
  out << "  mxu_energy_J     " << r.energy.mxu_j << "\n";
  out << "  mxu_power_time_J " << r.mxu_power_time_j << "\n";
  return out.str();
}

inline std::string sweep_text(const SweepTable& t) {
  std::ostringstream out;
  out << "sweep: " << t.workload << " (tp=" << t.plan.tp << " pp=" << t.plan.pp << ")\n";
  out << std::left << std::setw(18) << "config" << std::right << std::setw(12) << "peak"
      << std::setw(12) << "latency_s" << std::setw(14) << "throughput" << std::setw(14)
      << "mxu_energy_J" << std::setw(14) << "total_J" << "\n";
  for (const auto& r : t.rows) {
    out << std::left << std::setw(18) << r.config_name << std::right << std::setw(12)
        << r.peak_macs_per_cycle;
    if (r.feasible) {
      out << std::setw(12) << std::fixed << std::setprecision(4) << r.latency_s << std::setw(14)
          << std::setprecision(2) << r.throughput << std::setw(14) << std::scientific
          << std::setprecision(3) << r.mxu_energy_j << std::setw(14) << r.total_energy_j;
    } else {
      out << "  infeasible: " << r.error;
    }
    out << "\n";
  }
  return out.str();
}

// ----------------------------------------------------------- model parsing

// Model description document: {"name", "family": "llm"|"dit", "layers",
// "heads", "d_model", "ffn_ratio", "patch_size", "vae_downsample"}.
inline ModelConfig parse_model_config(const std::string& text) {
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw WorkloadError("model syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ModelConfig m;
  if (doc.contains("name")) m.name = doc.at("name").get<std::string>();
  if (doc.contains("family")) {
    const std::string fam = doc.at("family").get<std::string>();
    if (fam == "llm") m.family = ModelFamily::LLM;
    else if (fam == "dit") m.family = ModelFamily::DiT;
    else throw WorkloadError("model family must be 'llm' or 'dit'");
  }
  if (doc.contains("layers")) m.n_layers = doc.at("layers").get<std::uint32_t>();
  if (doc.contains("heads")) m.n_heads = doc.at("heads").get<std::uint32_t>();
  if (doc.contains("d_model")) m.d_model = doc.at("d_model").get<std::uint32_t>();
  if (doc.contains("ffn_ratio")) m.ffn_ratio = doc.at("ffn_ratio").get<std::uint32_t>();
  if (doc.contains("patch_size")) m.patch_size = doc.at("patch_size").get<std::uint32_t>();
  if (doc.contains("vae_downsample"))
    m.vae_downsample = doc.at("vae_downsample").get<std::uint32_t>();
  validate(m);
  return m;
}

}  // namespace cimtpu
