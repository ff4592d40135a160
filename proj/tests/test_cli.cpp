#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

std::string cli_path() {
  const char* env = std::getenv("CIMTPU_CLI");
  REQUIRE(env != nullptr);
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string out_file = "cli_stdout.tmp";
  const std::string cmd = cli_path() + " " + args + " >" + out_file + " 2>cli_stderr.tmp";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

std::string repo_file(const std::string& rel) {
  const char* root = std::getenv("CIMTPU_SOURCE_DIR");
  REQUIRE(root != nullptr);
  return std::string(root) + "/" + rel;
}

// Checks the report object against the schema definition's "required" lists.
void check_required(const nlohmann::json& schema_def, const nlohmann::json& doc) {
  for (const auto& key : schema_def.at("required")) {
    INFO("missing key " << key.get<std::string>());
    REQUIRE(doc.contains(key.get<std::string>()));
  }
}

}  // namespace

TEST_CASE("presets listing is stable and complete") {
  const RunResult a = run("presets");
  const RunResult b = run("presets");
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("tpuv4i-baseline") != std::string::npos);
  CHECK(a.out.find("design-a") != std::string::npos);
  CHECK(a.out.find("design-b") != std::string::npos);
  CHECK(a.out.find("gpt3-30b") != std::string::npos);
  CHECK(a.out.find("dit-xl-2") != std::string::npos);
}

TEST_CASE("simulate prefill emits a schema-conforming JSON report") {
  const RunResult r = run(
      "simulate --config tpuv4i-baseline --model gpt3-30b --stage prefill --batch 8 "
      "--seq-in 128");
  REQUIRE(r.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("kind") == "layer");
  CHECK(doc.at("schema_version") == 1);

  std::ifstream schema_in(repo_file("docs/report.schema.json"));
  REQUIRE(schema_in.good());
  const nlohmann::json schema = nlohmann::json::parse(schema_in);
  const auto& defs = schema.at("definitions");
  check_required(defs.at("layer_report"), doc);
  for (const auto& op : doc.at("operators")) {
    check_required(defs.at("operator"), op);
    check_required(defs.at("energy"), op.at("energy"));
    if (op.contains("mapping")) check_required(defs.at("mapping"), op.at("mapping"));
  }
  check_required(defs.at("layer_report").at("properties").at("totals"), doc.at("totals"));

  // config echo and assumption flags are part of the report
  CHECK(doc.at("config").at("hardware").at("name") == "tpuv4i-baseline");
  CHECK(!doc.at("assumptions").empty());
  // category shares sum to one
  double share = 0;
  for (const auto& c : doc.at("categories")) share += c.at("share").get<double>();
  CHECK(share == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("simulate decode at a given position") {
  const RunResult r = run(
      "simulate --config cim-16x8-x4 --model gpt3-30b --stage decode --batch 8 --seq-in 1024 "
      "--decode-pos 256");
  REQUIRE(r.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  for (const auto& op : doc.at("operators")) {
    if (op.at("name") == "attn_qk") {
      // context = 1024 prompt + 256 generated
      CHECK(op.at("bytes").at("weight").get<std::uint64_t>() == 448ull * 128 * 1280);
    }
  }
}

TEST_CASE("bad invocations exit with code 2") {
  CHECK(run("simulate --stage prefill").exit_code == 2);             // missing --model
  CHECK(run("simulate --model gpt3-30b --stage warmup").exit_code == 2);
  CHECK(run("simulate --model no-such-model --stage prefill").exit_code == 2);
  CHECK(run("simulate --model gpt3-30b --config no-such-preset").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);
}

TEST_CASE("infeasible workloads exit with code 3") {
  // KV cache far beyond the 8 GiB main memory
  const RunResult r = run(
      "simulate --config tpuv4i-baseline --model gpt3-30b --stage end2end --batch 512 "
      "--seq-in 8192 --out-len 1");
  CHECK(r.exit_code == 3);
}

TEST_CASE("output is byte-identical across runs unless stamped") {
  const std::string args =
      "simulate --config design-b --model dit-xl-2 --stage block --batch 2 --resolution 256";
  const RunResult a = run(args);
  const RunResult b = run(args);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  const RunResult stamped = run(args + " --stamp");
  CHECK(nlohmann::json::parse(stamped.out).contains("generated_at"));
}

TEST_CASE("sweep from a grid file, csv and json") {
  {
    std::ofstream grid("grid.tmp.json");
    grid << R"({"configs": ["tpuv4i-baseline", "design-a",
                {"preset": "design-b", "hardware": {"name": "fast-b"},
                 "memory": {"hbm_bw": "1228 GB/s"}}]})";
  }
  const std::string common =
      " --model gpt3-30b --batch 2 --seq-in 64 --out-len 4 --grid grid.tmp.json";
  const RunResult csv = run("sweep --format csv" + common);
  REQUIRE(csv.exit_code == 0);
  int lines = 0;
  for (char c : csv.out) lines += c == '\n';
  CHECK(lines == 4);  // header + one row per grid entry
  CHECK(csv.out.find("fast-b") != std::string::npos);

  const RunResult js =
      run("sweep --format json --baseline tpuv4i-baseline --pareto" + common);
  REQUIRE(js.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(js.out);
  CHECK(doc.at("kind") == "sweep");
  CHECK(doc.at("rows").size() == 3);
  CHECK(doc.at("baseline_ratios").at("rows").size() == 3);
  CHECK(doc.at("baseline_ratios").at("rows")[0].at("latency_ratio") == 1.0);
  CHECK(!doc.at("pareto_front").empty());
}

TEST_CASE("mapping trace lists candidates and the chosen mapping") {
  const RunResult r = run(
      "simulate --config tpuv4i-baseline --model gpt3-30b --stage decode --batch 2 --seq-in 64 "
      "--decode-pos 1 --trace-mappings trace.tmp.json --output report.tmp.json");
  REQUIRE(r.exit_code == 0);
  std::ifstream in("trace.tmp.json");
  REQUIRE(in.good());
  const nlohmann::json trace = nlohmann::json::parse(in);
  REQUIRE(!trace.empty());
  for (const auto& entry : trace) {
    REQUIRE(entry.contains("chosen"));
    REQUIRE(!entry.at("candidates").empty());
    const std::uint64_t chosen = entry.at("chosen_cycles").get<std::uint64_t>();
    for (const auto& cand : entry.at("candidates")) {
      if (cand.at("feasible").get<bool>()) {
        CHECK(chosen <= cand.at("cycles").get<std::uint64_t>());
      }
    }
  }
}
