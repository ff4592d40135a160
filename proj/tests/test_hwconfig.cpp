#include <catch2/catch_amalgamated.hpp>

#include "cimtpu/config_json.hpp"
#include "cimtpu/hwconfig.hpp"

using namespace cimtpu;

TEST_CASE("byte quantity parsing") {
  CHECK(parse_bytes("614") == 614);
  CHECK(parse_bytes("16MB") == 16'000'000);
  CHECK(parse_bytes("16MiB") == 16ull << 20);
  CHECK(parse_bytes("8GiB") == 8ull << 30);
  CHECK(parse_bytes("614 GB/s") == 614'000'000'000ull);
  CHECK(parse_bytes("1.5KB") == 1500);
  CHECK_THROWS_AS(parse_bytes("12XB"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bytes("MB"), std::invalid_argument);
}

TEST_CASE("baseline preset matches the published parameters") {
  TpuConfig cfg = builtin_preset("tpuv4i-baseline");
  validate(cfg);
  const auto& d = std::get<DigitalSystolic>(cfg.mxu);
  CHECK(d.rows == 128);
  CHECK(d.cols == 128);
  CHECK(cfg.mxu_count == 4);
  CHECK(cfg.vmem_bytes == 16ull << 20);
  CHECK(cfg.cmem_bytes == 128ull << 20);
  CHECK(cfg.hbm_bytes == 8ull << 30);
  CHECK(cfg.hbm_bw == 614e9);
  CHECK(cfg.ici_links == 2);
  CHECK(cfg.ici_link_bw == 100e9);
  CHECK(cfg.vpu.lanes == 8 * 128);
}

TEST_CASE("cim presets") {
  TpuConfig cim = builtin_preset("cim-16x8-x4");
  const auto& g = std::get<CimGrid>(cim.mxu);
  CHECK(g.grid_rows == 16);
  CHECK(g.grid_cols == 8);
  CHECK(g.core_inputs == 128);
  CHECK(g.core_weight_cols == 256);
  CHECK(g.n_core() == 32);
  CHECK(cim.mxu_count == 4);

  TpuConfig a = builtin_preset("design-a");
  const auto& ga = std::get<CimGrid>(a.mxu);
  CHECK(ga.grid_rows == 8);
  CHECK(ga.grid_cols == 8);
  CHECK(a.mxu_count == 4);

  TpuConfig b = builtin_preset("design-b");
  const auto& gb = std::get<CimGrid>(b.mxu);
  CHECK(gb.grid_rows == 16);
  CHECK(gb.grid_cols == 8);
  CHECK(b.mxu_count == 8);

  TpuConfig small = builtin_preset("cim-8x8-x2");
  CHECK(std::get<CimGrid>(small.mxu).grid_rows == 8);
  CHECK(small.mxu_count == 2);

  CHECK_THROWS_AS(builtin_preset("cim-3x3-x9"), ConfigError);
}

TEST_CASE("peak MACs per cycle") {
  TpuConfig base = builtin_preset("tpuv4i-baseline");
  TpuConfig cim = builtin_preset("cim-16x8-x4");
  CHECK(peak_macs_per_cycle_per_mxu(base) == 16384);
  CHECK(peak_macs_per_cycle_per_mxu(cim) == 16384);
  CHECK(peak_macs_per_cycle_total(base) == 65536);
  CHECK(peak_macs_per_cycle_total(cim) == 65536);

  TpuConfig unit;
  CimGrid g;
  g.grid_rows = g.grid_cols = 1;
  g.core_inputs = 1;
  g.core_weight_cols = 8;
  g.weight_bits = 8;
  g.wave_cycles = 1;
  g.active_outputs_per_wave = 1;
  unit.mxu = g;
  unit.mxu_count = 1;
  CHECK(peak_macs_per_cycle_per_mxu(unit) == 1);
}

TEST_CASE("exploration grid peak scales linearly in cores and MXU count") {
  for (const auto& cfg : exploration_grid()) {
    const auto& g = std::get<CimGrid>(cfg.mxu);
    const std::uint64_t per_core = g.core_inputs * g.active_outputs_per_wave / g.wave_cycles;
    CHECK(peak_macs_per_cycle_per_mxu(cfg) == g.cores() * per_core);
    CHECK(peak_macs_per_cycle_total(cfg) == g.cores() * per_core * cfg.mxu_count);
  }
  CHECK(exploration_grid().size() == 9);
}

TEST_CASE("validation rejects bad configs") {
  TpuConfig cfg = builtin_preset("tpuv4i-baseline");
  cfg.vmem_bytes = 0;
  CHECK_THROWS_WITH(validate(cfg), Catch::Matchers::ContainsSubstring("vmem_bytes"));

  cfg = builtin_preset("tpuv4i-baseline");
  cfg.mxu_count = 0;
  CHECK_THROWS_WITH(validate(cfg), Catch::Matchers::ContainsSubstring("mxu_count"));

  cfg = builtin_preset("cim-16x8-x4");
  auto& g = std::get<CimGrid>(cfg.mxu);
  g.active_outputs_per_wave = 64;  // 64 * 8 bits > 256 columns
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = builtin_preset("tpuv4i-baseline");
  cfg.vmem_bytes = cfg.cmem_bytes;  // must be strictly increasing
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("parse_config: preset with overrides") {
  TpuConfig cfg = parse_config(R"({"preset": "tpuv4i-baseline"})");
  CHECK(cfg == builtin_preset("tpuv4i-baseline"));
  CHECK(std::get<DigitalSystolic>(cfg.mxu).rows == 128);
  CHECK(cfg.mxu_count == 4);

  TpuConfig tweaked = parse_config(R"({
    "preset": "tpuv4i-baseline",
    "memory": {"hbm_bw": "1228 GB/s"}
  })");
  CHECK(tweaked.hbm_bw == 1228e9);
  tweaked.hbm_bw = cfg.hbm_bw;
  CHECK(tweaked == cfg);  // nothing else changed
}

TEST_CASE("parse_config: errors") {
  CHECK_THROWS_WITH(parse_config("{\"preset\": "),
                    Catch::Matchers::ContainsSubstring("syntax error at byte"));
  CHECK_THROWS_WITH(parse_config(R"({"hardwear": {}})"),
                    Catch::Matchers::ContainsSubstring("unknown key 'hardwear'"));
  CHECK_THROWS_WITH(parse_config(R"({"mxu": {"kind": "cim", "rows": 4}})"),
                    Catch::Matchers::ContainsSubstring("unknown key 'rows'"));
  CHECK_THROWS_WITH(parse_config(R"({"memory": {"vmem": 0}})"),
                    Catch::Matchers::ContainsSubstring("vmem_bytes"));
  CHECK_THROWS_AS(parse_config(R"({"preset": "nope"})"), ConfigError);
}

TEST_CASE("parse_config round-trips serialize_config") {
  for (const auto& name : preset_names()) {
    TpuConfig cfg = builtin_preset(name);
    TpuConfig back = parse_config(serialize_config(cfg));
    CHECK(back == cfg);
  }
  // and through a second cycle
  TpuConfig cfg = parse_config(R"({
    "preset": "design-b",
    "hardware": {"name": "tweaked", "mxu_count": 6},
    "mxu": {"wave_cycles": 4, "active_outputs_per_wave": 4},
    "memory": {"vmem": "8MiB", "oci_bw": 2.048e12},
    "energy": {"hbm_j_per_byte": 3.9e-12}
  })");
  CHECK(parse_config(serialize_config(cfg)) == cfg);
  CHECK(cfg.mxu_count == 6);
  CHECK(std::get<CimGrid>(cfg.mxu).wave_cycles == 4);
}
