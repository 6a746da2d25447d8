#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeprep/budget.hpp"
#include "codeprep/document.hpp"
#include "codeprep/fim.hpp"
#include "codeprep/ingest.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/needle.hpp"
#include "codeprep/quality_filter.hpp"
#include "codeprep/repo_pack.hpp"
#include "codeprep/syntax_gate.hpp"

namespace codeprep {

struct IngestSource {
  std::string path;
  Domain domain = Domain::code;
  RepoLayout layout = RepoLayout::subdirs;
  std::string repo_name;  // single layout only

  bool operator==(const IngestSource&) const = default;
};

struct IngestSettings {
  bool enabled = true;
  std::vector<IngestSource> sources;
  std::uint64_t max_file_bytes = 1 << 20;
  std::string languages;  // language map JSON, empty = built-in

  bool operator==(const IngestSettings&) const = default;
};

struct FilterSettings {
  bool enabled = true;
  std::string cascade;  // cascade TOML, empty = one stage of every rule

  bool operator==(const FilterSettings&) const = default;
};

struct DecontamSettings {
  bool enabled = true;
  std::vector<std::string> test_sets;
  std::uint64_t n = 10;

  bool operator==(const DecontamSettings&) const = default;
};

struct FimSettings {
  bool enabled = true;
  double rate = 0.5;
  std::uint64_t min_middle_chars = 1;
  double max_middle_fraction = 0.5;
  std::vector<std::string> ast_languages;

  bool operator==(const FimSettings&) const = default;
};

struct PackSettings {
  bool enabled = true;
  std::uint64_t budget = kRepoStageBudget;
  std::string order = "path-lex";
  bool fim_last = true;

  bool operator==(const PackSettings&) const = default;
};

struct MixSettings {
  bool enabled = true;
  std::map<std::string, double> targets{{"code", 0.7}, {"text", 0.2}, {"math", 0.1}};
  double max_epochs = 4.0;

  bool operator==(const MixSettings&) const = default;
};

struct GateSettings {
  bool enabled = false;
  std::string input;   // JSON-Lines {sample_id, question, answer}
  std::string scores;  // optional external checklist scores
  GatePolicy policy;   // seed comes from the pipeline seed

  bool operator==(const GateSettings&) const = default;
};

struct NeedleSettings {
  bool enabled = false;
  std::vector<double> depths{kDefaultDepths.begin(), kDefaultDepths.end()};
  std::vector<std::uint64_t> lengths{kDefaultLengths.begin(), kDefaultLengths.end()};
  std::string needle_file;  // empty = built-in needle
  std::string needle_path = "needle.py";
  std::string language = "python";

  bool operator==(const NeedleSettings&) const = default;
};

// Relative paths are resolved against the directory of the config file.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string budgeter = "whitespace-word";
  IngestSettings ingest;
  FilterSettings filter;
  DecontamSettings decontam;
  FimSettings fim;
  PackSettings pack;
  MixSettings mix;
  GateSettings gate;
  NeedleSettings needle;

  // Every stage switched off.
  static PipelineConfig disabled();
  bool operator==(const PipelineConfig&) const = default;
};

// Throws ConfigError on unknown keys or bad values.
PipelineConfig parse_pipeline_config(std::string_view toml_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_toml(const PipelineConfig& config);
void save_pipeline_config(const PipelineConfig& config, const std::filesystem::path& path);

struct StageSummary {
  std::string stage;
  std::string status;  // ran, cached
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t dropped = 0;
  std::size_t tokens = 0;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::ordered_json summary_json(const StageSummary& s);
StageSummary summary_from_json(const nlohmann::json& j);

// Shared state for running stages by hand or from run().
struct StageEnv {
  std::filesystem::path blobs;
  TokenBudgeter budgeter;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  // Receives the doc_id most recently handled, for error reports.
  std::string* last_doc_id = nullptr;
};

// Each stage writes into its own directory. Document stages write
// manifest.jsonl with dropped records inline (drop_reason set); output
// stages also write units.jsonl ({unit_id, domain, blob, tokens}) and a
// concatenated shard.txt.
StageSummary ingest_stage(const std::vector<IngestSource>& sources, std::uint64_t max_file_bytes,
                          const LanguageMap& languages, const std::filesystem::path& out_dir,
                          const StageEnv& env);
StageSummary filter_stage(const std::filesystem::path& in_manifest, const CascadeConfig& cascade,
                          const std::filesystem::path& out_dir, const StageEnv& env);
StageSummary decontam_stage(const std::filesystem::path& in_manifest,
                            const std::vector<std::filesystem::path>& test_sets, std::size_t n,
                            const std::filesystem::path& out_dir, const StageEnv& env);
StageSummary fim_stage(const std::filesystem::path& in_manifest, const FimOptions& options,
                       const std::filesystem::path& out_dir, const StageEnv& env);
StageSummary pack_stage(const std::filesystem::path& in_manifest, const PackOptions& options,
                        const std::filesystem::path& out_dir, const StageEnv& env);
// Input is a units.jsonl or a document manifest (documents become
// {content}<|endoftext|> units).
StageSummary mix_stage(const std::filesystem::path& input,
                       const std::map<std::string, double>& targets, double max_epochs,
                       const std::filesystem::path& out_dir, const StageEnv& env);
StageSummary gate_stage(const std::filesystem::path& instructions, const GatePolicy& policy,
                        const ExternalScores& scores, const std::filesystem::path& out_dir,
                        const StageEnv& env);
// Haystack = code documents of a manifest.
StageSummary needle_stage(const std::filesystem::path& in_manifest,
                          const std::vector<double>& depths,
                          const std::vector<std::size_t>& lengths, const NeedleSpec& spec,
                          const std::filesystem::path& out_dir, const StageEnv& env);
// needle/instances.jsonl + responses {instance_id, response} -> results.csv
StageSummary needle_score_stage(const std::filesystem::path& instances,
                                const std::filesystem::path& responses,
                                const std::filesystem::path& out_csv);

struct RunReport {
  std::vector<StageSummary> stages;
};

nlohmann::ordered_json run_report_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::json& j);
std::string run_report_text(const RunReport& report);

struct RunOptions {
  unsigned workers = 1;
  bool force = false;  // ignore stage stamps
};

// Runs the enabled stages in order: ingest, filter, decontam, fim, pack,
// mix, gate, needle. A stage whose stamp matches its inputs, config and
// outputs is not recomputed. Writes <output_dir>/run_report.json. Stage
// failures are rethrown as Error naming the stage and the last doc_id.
RunReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& base_dir,
                       const RunOptions& options = {});

}  // namespace codeprep
