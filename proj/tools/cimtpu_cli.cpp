// cimtpu: analytical latency/energy simulator for TPU-class accelerators with
// digital-systolic or compute-in-memory matrix units.

#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cimtpu/cimtpu.hpp"

namespace {

using namespace cimtpu;

constexpr int kExitBadArgs = 2;
constexpr int kExitInfeasible = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

TpuConfig load_config(const std::string& spec) {
  if (file_exists(spec)) return parse_config(read_file(spec));
  return builtin_preset(spec);
}

ModelConfig load_model(const std::string& spec) {
  if (file_exists(spec)) return parse_model_config(read_file(spec));
  return builtin_model(spec);
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::string iso_timestamp() {
  char buf[32];
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SimulateArgs {
  std::string config = "tpuv4i-baseline";
  std::string model;
  std::string stage = "prefill";
  std::uint64_t batch = 8;
  std::uint64_t seq_in = 1024;
  std::uint64_t out_len = 512;
  std::uint64_t decode_pos = 256;
  std::uint64_t resolution = 512;
  std::string precision = "int8";
  std::uint32_t tp = 1;
  std::uint32_t pp = 1;
  std::uint64_t microbatches = 0;
  std::uint32_t dit_steps = 50;
  std::string format = "json";
  std::string output;
  std::string trace_mappings;
  bool stamp = false;
};

InferenceParams to_params(const SimulateArgs& a) {
  InferenceParams p;
  p.batch = a.batch;
  p.seq_in = a.seq_in;
  p.out_len = a.out_len;
  p.decode_pos = a.decode_pos;
  p.image_resolution = a.resolution;
  p.precision = a.precision == "bf16" ? Precision::BF16 : Precision::INT8;
  return p;
}

std::string layer_report_csv(const LayerReport& r) {
  std::ostringstream out;
  out << "operator,category,cycles,seconds,utilization,energy_j,mxu_power_time_j\n";
  out << std::setprecision(12);
  for (const auto& op : r.ops) {
    out << op.name << ',' << category_name(op.category) << ',' << op.le.cycles << ','
        << op.le.seconds << ',' << op.le.utilization << ',' << op.le.energy.total() << ','
        << op.le.mxu_power_time_j << '\n';
  }
  out << "total,," << r.total_cycles << ',' << r.total_seconds << ",,"
      << r.total_energy.total() << ',' << r.mxu_power_time_j << '\n';
  return out.str();
}

void dump_mapping_trace(const LayerGraph& graph, const TpuConfig& cfg, const std::string& path) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& op : graph.ops) {
    if (!std::holds_alternative<GemmOp>(op.kind)) continue;
    nlohmann::json entry;
    entry["operator"] = op.name;
    nlohmann::json cands = nlohmann::json::array();
    for (const Mapping& m : enumerate_mappings(op, cfg)) {
      nlohmann::json c;
      c["mapping"] = detail::mapping_json(m);
      try {
        const LatencyEnergy le = evaluate_mapping(op, m, cfg);
        c["cycles"] = le.cycles;
        c["energy_j"] = le.energy.total();
        c["feasible"] = true;
      } catch (const InfeasibleError& e) {
        c["feasible"] = false;
        c["error"] = e.what();
      }
      cands.push_back(std::move(c));
    }
    const auto [best, le] = best_mapping(op, cfg);
    entry["chosen"] = detail::mapping_json(best);
    entry["chosen_cycles"] = le.cycles;
    entry["candidates"] = std::move(cands);
    trace.push_back(std::move(entry));
  }
  write_output(trace.dump(2), path);
}

int run_simulate(const SimulateArgs& a) {
  TpuConfig cfg = load_config(a.config);
  ModelConfig model = load_model(a.model);
  InferenceParams params = to_params(a);
  ParallelismPlan plan{a.tp, a.pp, a.microbatches};
  validate(plan);

  auto stamp_json = [&](nlohmann::json& doc) {
    if (a.stamp) doc["generated_at"] = iso_timestamp();
  };

  if (a.stage == "end2end") {
    const EndToEndReport rep = model.family == ModelFamily::LLM
                                   ? llm_end_to_end(model, params, plan, cfg)
                                   : dit_end_to_end(model, params, plan, cfg, a.dit_steps);
    if (a.format == "text") {
      write_output(end_to_end_text(rep), a.output);
    } else {
      nlohmann::json doc = end_to_end_json(rep, cfg);
      stamp_json(doc);
      write_output(doc.dump(2), a.output);
    }
    return 0;
  }

  LayerGraph graph;
  if (a.stage == "prefill") {
    graph = build_llm_prefill_layer(model, params);
  } else if (a.stage == "decode") {
    graph = build_llm_decode_layer(model, params);
  } else if (a.stage == "block") {
    graph = build_dit_block(model, params);
  } else {
    throw CLI::ValidationError("--stage must be prefill, decode, block or end2end");
  }
  graph = shard_graph(graph, a.tp);
  const LayerReport report = evaluate_graph(graph, cfg);

  if (!a.trace_mappings.empty()) dump_mapping_trace(graph, cfg, a.trace_mappings);

  if (a.format == "text") {
    write_output(layer_report_text(report, cfg), a.output);
  } else if (a.format == "csv") {
    write_output(layer_report_csv(report), a.output);
  } else {
    nlohmann::json doc = layer_report_json(report, cfg, graph);
    stamp_json(doc);
    write_output(doc.dump(2), a.output);
  }
  return 0;
}

struct SweepArgs {
  std::string grid_file;
  bool table_v = false;
  std::string model = "gpt3-30b";
  std::uint64_t batch = 8;
  std::uint64_t seq_in = 1024;
  std::uint64_t out_len = 512;
  std::uint64_t resolution = 512;
  std::string precision = "int8";
  std::uint32_t tp = 1;
  std::uint32_t pp = 1;
  std::uint32_t dit_steps = 50;
  std::string baseline;
  std::string format = "csv";
  std::string output;
  bool pareto = false;
  bool stamp = false;
};

std::vector<TpuConfig> load_grid(const SweepArgs& a) {
  std::vector<TpuConfig> grid;
  if (a.table_v) {
    grid = exploration_grid();
  }
  if (!a.grid_file.empty()) {
    nlohmann::json doc = nlohmann::json::parse(read_file(a.grid_file));
    const nlohmann::json& entries = doc.is_array() ? doc : doc.at("configs");
    for (const auto& entry : entries) {
      if (entry.is_string()) {
        grid.push_back(builtin_preset(entry.get<std::string>()));
      } else {
        grid.push_back(parse_config(entry.dump()));
      }
    }
  }
  if (grid.empty())
    throw CLI::ValidationError("sweep needs --table-v and/or --grid with at least one config");
  return grid;
}

int run_sweep(const SweepArgs& a) {
  const std::vector<TpuConfig> grid = load_grid(a);
  SweepWorkload w;
  w.model = load_model(a.model);
  w.params.batch = a.batch;
  w.params.seq_in = a.seq_in;
  w.params.out_len = a.out_len;
  w.params.image_resolution = a.resolution;
  w.params.precision = a.precision == "bf16" ? Precision::BF16 : Precision::INT8;
  w.dit_steps = a.dit_steps;
  ParallelismPlan plan{a.tp, a.pp};
  validate(plan);

  SweepTable table = sweep(grid, w, plan);

  std::optional<SweepRow> baseline;
  if (!a.baseline.empty()) {
    baseline = evaluate_sweep_point(load_config(a.baseline), w, plan);
  }

  auto with_pareto_tables = [&](auto render) {
    std::string text = render(table);
    if (a.pareto) {
      SweepTable front;
      front.workload = table.workload;
      front.plan = table.plan;
      front.rows = pareto_front(table);
      text += "\npareto front\n" + render(front);
    }
    return text;
  };

  if (a.format == "csv") {
    write_output(with_pareto_tables([](const SweepTable& t) { return sweep_csv(t); }), a.output);
  } else if (a.format == "text") {
    write_output(with_pareto_tables([](const SweepTable& t) { return sweep_text(t); }), a.output);
  } else {
    nlohmann::json doc = sweep_json(table);
    if (baseline)
      doc["baseline_ratios"] =
          baseline_ratios_json(compare_to_baseline(table, *baseline), baseline->config_name);
    if (a.pareto) {
      nlohmann::json front = nlohmann::json::array();
      for (const auto& r : pareto_front(table)) front.push_back(r.config_name);
      doc["pareto_front"] = std::move(front);
    }
    if (a.stamp) doc["generated_at"] = iso_timestamp();
    write_output(doc.dump(2), a.output);
  }
  return 0;
}

int run_presets() {
  std::cout << "configs:\n";
  for (const auto& name : preset_names()) {
    TpuConfig cfg = builtin_preset(name);
    std::cout << "  " << std::left << std::setw(18) << name << " mxu_count=" << cfg.mxu_count
              << " peak_macs_per_cycle=" << peak_macs_per_cycle_total(cfg) << "\n";
  }
  std::cout << "models:\n";
  for (const auto& name : model_names()) {
    ModelConfig m = builtin_model(name);
    std::cout << "  " << std::left << std::setw(18) << name << " layers=" << m.n_layers
              << " heads=" << m.n_heads << " d_model=" << m.d_model << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analytical simulator for TPU-class accelerators with CIM or systolic MXUs"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "evaluate one layer/block or a full run");
  simulate->add_option("--config", sim.config, "preset name or config JSON file");
  simulate->add_option("--model", sim.model, "builtin model name or model JSON file")->required();
  simulate->add_option("--stage", sim.stage, "prefill | decode | block | end2end")
      ->check(CLI::IsMember({"prefill", "decode", "block", "end2end"}));
  simulate->add_option("--batch", sim.batch);
  simulate->add_option("--seq-in", sim.seq_in, "prompt tokens");
  simulate->add_option("--out-len", sim.out_len, "generated tokens (end2end)");
  simulate->add_option("--decode-pos", sim.decode_pos, "output token index (decode stage)");
  simulate->add_option("--resolution", sim.resolution, "image resolution (DiT)");
  simulate->add_option("--precision", sim.precision)->check(CLI::IsMember({"int8", "bf16"}));
  simulate->add_option("--tp", sim.tp, "tensor-parallel degree");
  simulate->add_option("--pp", sim.pp, "pipeline stages");
  simulate->add_option("--microbatches", sim.microbatches, "pipeline microbatches (0 = pp)");
  simulate->add_option("--dit-steps", sim.dit_steps, "diffusion steps (DiT end2end)");
  simulate->add_option("--format", sim.format)->check(CLI::IsMember({"json", "csv", "text"}));
  simulate->add_option("--output", sim.output, "write to file instead of stdout");
  simulate->add_option("--trace-mappings", sim.trace_mappings,
                       "dump every candidate mapping and its cost to this file");
  simulate->add_flag("--stamp", sim.stamp, "include a timestamp in JSON reports");

  SweepArgs sw;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "evaluate a configuration grid");
  sweep_cmd->add_option("--grid", sw.grid_file, "grid-spec JSON (array or {\"configs\": [...]})");
  sweep_cmd->add_flag("--table-v", sw.table_v, "use the builtin cim-{dims}-x{count} grid");
  sweep_cmd->add_option("--model", sw.model);
  sweep_cmd->add_option("--batch", sw.batch);
  sweep_cmd->add_option("--seq-in", sw.seq_in);
  sweep_cmd->add_option("--out-len", sw.out_len);
  sweep_cmd->add_option("--resolution", sw.resolution);
  sweep_cmd->add_option("--precision", sw.precision)->check(CLI::IsMember({"int8", "bf16"}));
  sweep_cmd->add_option("--tp", sw.tp);
  sweep_cmd->add_option("--pp", sw.pp);
  sweep_cmd->add_option("--dit-steps", sw.dit_steps);
  sweep_cmd->add_option("--baseline", sw.baseline, "emit ratios against this config (json)");
  sweep_cmd->add_option("--format", sw.format)->check(CLI::IsMember({"json", "csv", "text"}));
  sweep_cmd->add_option("--output", sw.output);
  sweep_cmd->add_flag("--pareto", sw.pareto, "append the latency/MXU-energy Pareto front");
  sweep_cmd->add_flag("--stamp", sw.stamp);

  CLI::App* presets_cmd = app.add_subcommand("presets", "list builtin configs and models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitBadArgs;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (sweep_cmd->parsed()) return run_sweep(sw);
    if (presets_cmd->parsed()) return run_presets();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const CapacityError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const PlanError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const WorkloadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
