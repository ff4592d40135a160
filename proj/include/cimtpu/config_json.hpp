#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/units.hpp"

namespace cimtpu {

namespace detail {

using json = nlohmann::json;

inline Bytes json_bytes(const json& v, const std::string& key) {
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
  if (v.is_number_float()) return static_cast<Bytes>(v.get<double>());
  if (v.is_string()) return parse_bytes(v.get<std::string>());
  throw ConfigError("field '" + key + "' must be a number or byte string");
}

inline double json_rate(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return static_cast<double>(parse_bytes(v.get<std::string>()));
  throw ConfigError("field '" + key + "' must be a number or byte-per-second string");
}

template <typename T>
inline void assign_uint(const json& v, T& out, const std::string& key) {
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw ConfigError("field '" + key + "' must be an integer");
  const auto value = v.get<std::int64_t>();
  if (value < 0) throw ConfigError("field '" + key + "' must be non-negative");
  out = static_cast<T>(value);
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                           const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in section '" + section + "'");
  }
}

inline void apply_hardware(const json& sec, TpuConfig& cfg) {
  reject_unknown(sec, {"name", "frequency_hz", "mxu_count"}, "hardware");
  if (sec.contains("name")) cfg.name = sec.at("name").get<std::string>();
  if (sec.contains("frequency_hz")) cfg.frequency_hz = sec.at("frequency_hz").get<double>();
  if (sec.contains("mxu_count")) assign_uint(sec.at("mxu_count"), cfg.mxu_count, "mxu_count");
}

inline void apply_mxu(const json& sec, TpuConfig& cfg) {
  std::string kind = cfg.is_cim() ? "cim" : "systolic";
  if (sec.contains("kind")) kind = sec.at("kind").get<std::string>();
  if (kind == "systolic") {
    reject_unknown(sec, {"kind", "rows", "cols"}, "mxu");
    DigitalSystolic d;
    if (const auto* prev = std::get_if<DigitalSystolic>(&cfg.mxu)) d = *prev;
    if (sec.contains("rows")) assign_uint(sec.at("rows"), d.rows, "mxu.rows");
    if (sec.contains("cols")) assign_uint(sec.at("cols"), d.cols, "mxu.cols");
    cfg.mxu = d;
  } else if (kind == "cim") {
    reject_unknown(sec,
                   {"kind", "grid_rows", "grid_cols", "core_inputs", "core_weight_cols",
                    "weight_bits", "wave_cycles", "active_outputs_per_wave", "input_bus_bits",
                    "weight_io_bytes_per_cycle", "fp_pre_cycles", "fp_post_cycles"},
                   "mxu");
    CimGrid g;
    if (const auto* prev = std::get_if<CimGrid>(&cfg.mxu)) g = *prev;
    auto set = [&](const char* key, std::uint32_t& out) {
      if (sec.contains(key)) assign_uint(sec.at(key), out, std::string("mxu.") + key);
    };
    set("grid_rows", g.grid_rows);
    set("grid_cols", g.grid_cols);
    set("core_inputs", g.core_inputs);
    set("core_weight_cols", g.core_weight_cols);
    set("weight_bits", g.weight_bits);
    set("wave_cycles", g.wave_cycles);
    set("active_outputs_per_wave", g.active_outputs_per_wave);
    set("input_bus_bits", g.input_bus_bits);
    set("weight_io_bytes_per_cycle", g.weight_io_bytes_per_cycle);
    set("fp_pre_cycles", g.fp_pre_cycles);
    set("fp_post_cycles", g.fp_post_cycles);
    cfg.mxu = g;
  } else {
    throw ConfigError("mxu.kind must be 'systolic' or 'cim', got '" + kind + "'");
  }
}

inline void apply_vpu(const json& sec, TpuConfig& cfg) {
  reject_unknown(sec, {"lanes", "c_add", "c_mul", "c_cmp", "c_exp", "c_tanh", "c_div", "c_rsqrt"},
                 "vpu");
  auto set = [&](const char* key, std::uint32_t& out) {
    if (sec.contains(key)) assign_uint(sec.at(key), out, std::string("vpu.") + key);
  };
  set("lanes", cfg.vpu.lanes);
  set("c_add", cfg.vpu.c_add);
  set("c_mul", cfg.vpu.c_mul);
  set("c_cmp", cfg.vpu.c_cmp);
  set("c_exp", cfg.vpu.c_exp);
  set("c_tanh", cfg.vpu.c_tanh);
  set("c_div", cfg.vpu.c_div);
  set("c_rsqrt", cfg.vpu.c_rsqrt);
}

inline void apply_memory(const json& sec, TpuConfig& cfg) {
  reject_unknown(sec,
                 {"vmem", "cmem", "hbm", "hbm_bw", "oci_bw", "ici_links", "ici_link_bw",
                  "dram_burst"},
                 "memory");
  if (sec.contains("vmem")) cfg.vmem_bytes = json_bytes(sec.at("vmem"), "memory.vmem");
  if (sec.contains("cmem")) cfg.cmem_bytes = json_bytes(sec.at("cmem"), "memory.cmem");
  if (sec.contains("hbm")) cfg.hbm_bytes = json_bytes(sec.at("hbm"), "memory.hbm");
  if (sec.contains("hbm_bw")) cfg.hbm_bw = json_rate(sec.at("hbm_bw"), "memory.hbm_bw");
  if (sec.contains("oci_bw")) cfg.oci_bw = json_rate(sec.at("oci_bw"), "memory.oci_bw");
  if (sec.contains("ici_links")) assign_uint(sec.at("ici_links"), cfg.ici_links, "memory.ici_links");
  if (sec.contains("ici_link_bw"))
    cfg.ici_link_bw = json_rate(sec.at("ici_link_bw"), "memory.ici_link_bw");
  if (sec.contains("dram_burst"))
    cfg.dram_burst_bytes = json_bytes(sec.at("dram_burst"), "memory.dram_burst");
}

inline void apply_energy(const json& sec, TpuConfig& cfg) {
  reject_unknown(sec,
                 {"mac_digital_j", "mac_cim_j", "vpu_lane_op_j", "vmem_j_per_byte",
                  "cmem_j_per_byte", "hbm_j_per_byte", "ici_j_per_byte"},
                 "energy");
  auto set = [&](const char* key, double& out) {
    if (sec.contains(key)) out = sec.at(key).get<double>();
  };
  set("mac_digital_j", cfg.energy.mac_energy_digital);
  set("mac_cim_j", cfg.energy.mac_energy_cim);
  set("vpu_lane_op_j", cfg.energy.vpu_lane_op_energy);
  set("vmem_j_per_byte", cfg.energy.vmem_energy_per_byte);
  set("cmem_j_per_byte", cfg.energy.cmem_energy_per_byte);
  set("hbm_j_per_byte", cfg.energy.hbm_energy_per_byte);
  set("ici_j_per_byte", cfg.energy.ici_energy_per_byte);
}

}  // namespace detail

// Parses a hardware description document. An optional "preset" key selects a
// named configuration as the base; the remaining sections override individual
// fields. Without "preset" the defaults are the TPUv4i baseline values.
inline TpuConfig parse_config(const std::string& text) {
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  detail::reject_unknown(doc, {"preset", "hardware", "mxu", "vpu", "memory", "energy", "assumptions"},
                         "top level");

  TpuConfig cfg;
  if (doc.contains("preset")) {
    cfg = builtin_preset(doc.at("preset").get<std::string>());
  }
  if (doc.contains("hardware")) detail::apply_hardware(doc.at("hardware"), cfg);
  if (doc.contains("mxu")) detail::apply_mxu(doc.at("mxu"), cfg);
  if (doc.contains("vpu")) detail::apply_vpu(doc.at("vpu"), cfg);
  if (doc.contains("memory")) detail::apply_memory(doc.at("memory"), cfg);
  if (doc.contains("energy")) detail::apply_energy(doc.at("energy"), cfg);
  if (doc.contains("assumptions")) {
    cfg.assumptions = doc.at("assumptions").get<std::vector<std::string>>();
  }
  validate(cfg);
  return cfg;
}

inline std::string serialize_config(const TpuConfig& cfg) {
  detail::json doc;
  doc["hardware"] = {{"name", cfg.name},
                     {"frequency_hz", cfg.frequency_hz},
                     {"mxu_count", cfg.mxu_count}};
  if (const auto* d = std::get_if<DigitalSystolic>(&cfg.mxu)) {
    doc["mxu"] = {{"kind", "systolic"}, {"rows", d->rows}, {"cols", d->cols}};
  } else {
    const auto& g = std::get<CimGrid>(cfg.mxu);
    doc["mxu"] = {{"kind", "cim"},
                  {"grid_rows", g.grid_rows},
                  {"grid_cols", g.grid_cols},
                  {"core_inputs", g.core_inputs},
                  {"core_weight_cols", g.core_weight_cols},
                  {"weight_bits", g.weight_bits},
                  {"wave_cycles", g.wave_cycles},
                  {"active_outputs_per_wave", g.active_outputs_per_wave},
                  {"input_bus_bits", g.input_bus_bits},
                  {"weight_io_bytes_per_cycle", g.weight_io_bytes_per_cycle},
                  {"fp_pre_cycles", g.fp_pre_cycles},
                  {"fp_post_cycles", g.fp_post_cycles}};
  }
  doc["vpu"] = {{"lanes", cfg.vpu.lanes},   {"c_add", cfg.vpu.c_add}, {"c_mul", cfg.vpu.c_mul},
                {"c_cmp", cfg.vpu.c_cmp},   {"c_exp", cfg.vpu.c_exp}, {"c_tanh", cfg.vpu.c_tanh},
                {"c_div", cfg.vpu.c_div},   {"c_rsqrt", cfg.vpu.c_rsqrt}};
  doc["memory"] = {{"vmem", cfg.vmem_bytes},
                   {"cmem", cfg.cmem_bytes},
                   {"hbm", cfg.hbm_bytes},
                   {"hbm_bw", cfg.hbm_bw},
                   {"oci_bw", cfg.oci_bw},
                   {"ici_links", cfg.ici_links},
                   {"ici_link_bw", cfg.ici_link_bw},
                   {"dram_burst", cfg.dram_burst_bytes}};
  doc["energy"] = {{"mac_digital_j", cfg.energy.mac_energy_digital},
                   {"mac_cim_j", cfg.energy.mac_energy_cim},
                   {"vpu_lane_op_j", cfg.energy.vpu_lane_op_energy},
                   {"vmem_j_per_byte", cfg.energy.vmem_energy_per_byte},
                   {"cmem_j_per_byte", cfg.energy.cmem_energy_per_byte},
                   {"hbm_j_per_byte", cfg.energy.hbm_energy_per_byte},
                   {"ici_j_per_byte", cfg.energy.ici_energy_per_byte}};
  doc["assumptions"] = cfg.assumptions;
  return doc.dump(2);
}

}  // namespace cimtpu
