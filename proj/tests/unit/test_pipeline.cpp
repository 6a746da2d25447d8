#include <doctest.h>

#include <filesystem>

#include "codeprep/errors.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/pipeline.hpp"
#include "test_support.hpp"

using namespace codeprep;
namespace fs = std::filesystem;

namespace {

fs::path copy_mini(const testing::TempDir& dir) {
  const fs::path root = dir.path() / "mini";
  fs::copy(testing::data_dir() / "mini_corpus", root, fs::copy_options::recursive);
  return root;
}

std::vector<std::string> stage_names(const RunReport& r) {
  std::vector<std::string> out;
  for (const auto& s : r.stages) out.push_back(s.stage);
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config toml round trip") {
  const PipelineConfig mini =
      load_pipeline_config(testing::data_dir() / "mini_corpus" / "pipeline.toml");
  CHECK(mini.seed == 20240917);
  CHECK(mini.budgeter == "byte-quarter");
  CHECK(mini.ingest.sources.size() == 3);
  CHECK(mini.pack.budget == 512);
  CHECK(mini.needle.lengths == std::vector<std::uint64_t>{256, 512});
  CHECK(parse_pipeline_config(pipeline_config_toml(mini)) == mini);
  const PipelineConfig defaults;
  CHECK(parse_pipeline_config(pipeline_config_toml(defaults)) == defaults);
  CHECK(parse_pipeline_config("") == defaults);
  const PipelineConfig off = PipelineConfig::disabled();
  CHECK(parse_pipeline_config(pipeline_config_toml(off)) == off);

  testing::TempDir dir("cfg");
  save_pipeline_config(mini, dir.path() / "p.toml");
  CHECK(load_pipeline_config(dir.path() / "p.toml") == mini);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_pipeline_config("sed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("[pack]\nbudgett = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("budgeter = \"bpe\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("[fim]\nrate = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("[mix.targets]\ncode = -1.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("seed = \"x\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("[needle]\nlengths = [262144]\n"), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("not toml ="), ConfigError);
  CHECK_THROWS_AS(load_pipeline_config("/nonexistent/p.toml"), IoError);
}

TEST_CASE("nothing enabled runs nothing") {
  testing::TempDir dir("off");
  const RunReport r = run_pipeline(PipelineConfig::disabled(), dir.path());
  CHECK(r.stages.empty());
  CHECK(run_report_text(r) == "no stages ran\n");
}

TEST_CASE("mini corpus run, stamps and report") {
  testing::TempDir dir("run");
  const fs::path root = copy_mini(dir);
  const PipelineConfig config = load_pipeline_config(root / "pipeline.toml");
  const RunReport first = run_pipeline(config, root, {.workers = 2});
  CHECK(stage_names(first) ==
        std::vector<std::string>{"ingest", "filter", "decontam", "fim", "pack", "mix", "gate",
                                 "needle"});
  for (const auto& s : first.stages) CHECK(s.status == "ran");
  CHECK(first.stages[0].output == 24);
  CHECK(first.stages[2].dropped >= 1);
  CHECK(first.stages[7].output == 6);
  for (const std::string f : {"ingest/manifest.jsonl", "decontam/removals.jsonl", "pack/units.jsonl",
                        "pack/shard.txt", "mix/stream.jsonl", "mix/report.json", "gate/kept.jsonl",
                        "needle/instances.jsonl", "run_report.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(root / "out" / f));
  }

  const RunReport second = run_pipeline(config, root, {.workers = 1});
  for (const auto& s : second.stages) CHECK(s.status == "cached");
  REQUIRE(second.stages.size() == first.stages.size());
  for (std::size_t i = 0; i < first.stages.size(); ++i) {
    CHECK(second.stages[i].output == first.stages[i].output);
    CHECK(second.stages[i].details == first.stages[i].details);
  }
  const RunReport loaded =
      run_report_from_json(nlohmann::json::parse(read_file(root / "out" / "run_report.json")));
  CHECK(run_report_json(loaded).dump() == run_report_json(second).dump());

  // a tampered output invalidates its stage and everything after it
  write_file(root / "out" / "mix" / "stream.jsonl", "");
  const RunReport third = run_pipeline(config, root);
  CHECK(third.stages[4].status == "cached");
  CHECK(third.stages[5].status == "ran");

  // a config change reruns from the changed stage
  PipelineConfig changed = config;
  changed.fim.rate = 0.25;
  const RunReport fourth = run_pipeline(changed, root);
  CHECK(fourth.stages[2].status == "cached");
  CHECK(fourth.stages[3].status == "ran");
  CHECK(fourth.stages[4].status == "ran");
}

TEST_CASE("worker count does not change the outputs") {
  testing::TempDir dir("workers");
  const fs::path a = dir.path() / "a";
  const fs::path b = dir.path() / "b";
  fs::copy(testing::data_dir() / "mini_corpus", a, fs::copy_options::recursive);
  fs::copy(testing::data_dir() / "mini_corpus", b, fs::copy_options::recursive);
  const PipelineConfig config = load_pipeline_config(a / "pipeline.toml");
  run_pipeline(config, a, {.workers = 1});
  run_pipeline(config, b, {.workers = 8});
  const auto files = testing::list_files(a / "out");
  REQUIRE(files == testing::list_files(b / "out"));
  CHECK(files.size() > 20);
  for (const auto& f : files) {
    CAPTURE(f);
    CHECK(testing::files_identical(a / "out" / f, b / "out" / f));
  }
}

TEST_CASE("stage failures name the stage") {
  testing::TempDir dir("fail");
  const fs::path root = copy_mini(dir);
  PipelineConfig config = load_pipeline_config(root / "pipeline.toml");
  config.filter.cascade = "missing.toml";
  try {
    run_pipeline(config, root);
    FAIL("expected a failure");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("missing.toml") != std::string::npos);
  }
}

TEST_CASE("summary json round trip") {
  StageSummary s;
  s.stage = "pack";
  s.status = "ran";
  s.input = 3;
  s.output = 2;
  s.dropped = 1;
  s.tokens = 99;
  s.details = {{"z", 1}, {"a", {{"b", 2}}}};
  const StageSummary back = summary_from_json(nlohmann::json::parse(summary_json(s).dump()));
  CHECK(back.stage == s.stage);
  CHECK(back.tokens == 99);
  CHECK(back.details == s.details);
  RunReport r;
  r.stages = {s};
  CHECK(run_report_text(r).find("pack") != std::string::npos);
}

}
