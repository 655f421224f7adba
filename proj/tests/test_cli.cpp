#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "helpers.hpp"

using testutil::TempDir;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MANIAPIPE_CLI_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_tiny_config(const std::filesystem::path& path) {
  std::ofstream f(path);
  f << R"({
  "seed": 7,
  "synth": {
    "n_per_class_per_split": {"Train": 1, "Dev": 1, "Test": 1},
    "task_durations_s": [0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9]
  },
  "selection": {"target_k": 20, "epochs": 30},
  "train": {"max_epochs": 6},
  "tasks": [6, 7]
})";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("--definitely-not-a-flag") == 2);
  CHECK(run_cli("") == 2);  // missing subcommand
}

TEST_CASE("stage ordering is enforced with exit code 3") {
  TempDir tmp("cli_order");
  write_tiny_config(tmp / "cfg.json");
  const std::string common =
      "--config " + (tmp / "cfg.json").string() + " --out " + (tmp / "run").string();

  // extract before synth/segment exists
  CHECK(run_cli("extract " + common) == 3);

  REQUIRE(run_cli("synth " + common) == 0);
  // still missing segment outputs
  CHECK(run_cli("extract " + common) == 3);
  REQUIRE(run_cli("segment " + common) == 0);
  CHECK(run_cli("extract " + common) == 0);

  // report before experiment
  CHECK(run_cli("report " + common) == 3);
}

TEST_CASE("staged pipeline and experiment/report produce the full run directory") {
  TempDir tmp("cli_full");
  write_tiny_config(tmp / "cfg.json");
  const std::filesystem::path run = tmp / "run";
  const std::string common =
      "--config " + (tmp / "cfg.json").string() + " --out " + run.string();

  REQUIRE(run_cli("synth " + common) == 0);
  REQUIRE(run_cli("segment " + common) == 0);
  REQUIRE(run_cli("extract " + common) == 0);
  REQUIRE(run_cli("select " + common) == 0);
  REQUIRE(run_cli("train " + common) == 0);
  REQUIRE(run_cli("eval " + common) == 0);
  REQUIRE(run_cli("experiment " + common) == 0);
  REQUIRE(run_cli("report " + common) == 0);

  CHECK(std::filesystem::exists(run / "config.echo.json"));
  CHECK(std::filesystem::exists(run / "corpus" / "manifest.json"));
  CHECK(std::filesystem::exists(run / "segment" / "proposals.jsonl"));
  CHECK(std::filesystem::exists(run / "extract" / "tasks_train.csv"));
  CHECK(std::filesystem::exists(run / "extract" / "whole_dev.csv"));
  CHECK(std::filesystem::exists(run / "select" / "norm.json"));
  CHECK(std::filesystem::exists(run / "select" / "mask.json"));
  CHECK(std::filesystem::exists(run / "train" / "model.json"));
  CHECK(std::filesystem::exists(run / "train" / "history.csv"));
  CHECK(std::filesystem::exists(run / "eval" / "eval.json"));
  CHECK(std::filesystem::exists(run / "report" / "report.txt"));
  CHECK(std::filesystem::exists(run / "report" / "uar_by_task.svg"));
  CHECK(std::filesystem::exists(run / "report" / "cm_same.svg"));
  CHECK(std::filesystem::exists(run / "report" / "cm_whole.svg"));

  // rows.json carries the 7 single tasks plus 3 groups.
  nlohmann::json rows;
  std::ifstream in(run / "experiment" / "rows.json");
  in >> rows;
  REQUIRE(rows.is_array());
  CHECK(rows.size() == 10);
  CHECK(rows[9]["tasks"] == nlohmann::json::array({6, 7}));

  // The mask honors the configured target_k.
  nlohmann::json mask;
  std::ifstream min(run / "select" / "mask.json");
  min >> mask;
  CHECK(mask["selected"].size() == 20);

  // proposals.jsonl lines parse and reference known recordings.
  std::ifstream prop(run / "segment" / "proposals.jsonl");
  std::string line;
  std::size_t n_lines = 0;
  while (std::getline(prop, line)) {
    const nlohmann::json event = nlohmann::json::parse(line);
    CHECK(event.contains("recording_id"));
    CHECK(event["end_s"].get<double>() > event["start_s"].get<double>());
    ++n_lines;
  }
  CHECK(n_lines == 9 * 7);
}

TEST_CASE("two identical experiment runs produce byte-identical rows.json") {
  TempDir tmp("cli_det");
  write_tiny_config(tmp / "cfg.json");
  for (const char* run_name : {"run_a", "run_b"}) {
    const std::string common = "--config " + (tmp / "cfg.json").string() + " --out " +
                               (tmp / run_name).string();
    REQUIRE(run_cli("synth " + common) == 0);
    REQUIRE(run_cli("experiment " + common) == 0);
  }
  const std::string a = slurp(tmp / "run_a" / "experiment" / "rows.json");
  const std::string b = slurp(tmp / "run_b" / "experiment" / "rows.json");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("flag overrides reach the pipeline") {
  TempDir tmp("cli_flags");
  write_tiny_config(tmp / "cfg.json");
  const std::filesystem::path run = tmp / "run";
  const std::string common =
      "--config " + (tmp / "cfg.json").string() + " --out " + run.string();

  REQUIRE(run_cli("synth " + common) == 0);
  REQUIRE(run_cli("segment " + common) == 0);
  REQUIRE(run_cli("extract " + common) == 0);
  REQUIRE(run_cli("select " + common + " --target-k 12 --tasks 4,5") == 0);

  nlohmann::json mask;
  std::ifstream in(run / "select" / "mask.json");
  in >> mask;
  CHECK(mask["selected"].size() == 12);

  nlohmann::json echo;
  std::ifstream ein(run / "select" / "config.echo.json");
  ein >> echo;
  CHECK(echo["selection"]["target_k"] == 12);
  CHECK(echo["tasks"] == nlohmann::json::array({4, 5}));
}
