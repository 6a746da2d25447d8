#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeprep/budget.hpp"
#include "codeprep/document.hpp"

namespace codeprep {

struct Verdict {
  bool keep = true;
  std::string reason;  // name of the failing rule when !keep

  static Verdict pass() { return {}; }
  static Verdict drop(std::string reason) { return {false, std::move(reason)}; }
};

struct FilterRule {
  std::string name;
  std::function<Verdict(const SourceDocument&)> predicate;
  int stage = 1;
};

// Thresholds of the built-in rules. Every value is overridable per cascade
// stage in the cascade config.
struct RuleThresholds {
  std::size_t min_content_chars = 1;  // non-whitespace bytes
  std::size_t max_line_length = 10000;
  double max_mean_line_length = 250.0;
  double min_alnum_fraction = 0.25;
  double max_replacement_fraction = 0.01;
  std::vector<std::string> autogenerated_markers{"DO NOT EDIT", "@generated",
                                                 "Code generated by", "auto-generated",
                                                 "autogenerated"};
  std::size_t autogenerated_header_lines = 20;
};

// Rule names: min-content, max-line-length, mean-line-length, alnum-fraction,
// replacement-fraction, autogenerated. Throws ConfigError otherwise.
FilterRule make_rule(std::string_view name, const RuleThresholds& thresholds = {},
                     int stage = 1);

const std::vector<std::string>& builtin_rule_names();

// All built-in rules, in builtin_rule_names() order.
std::vector<FilterRule> default_rules(const RuleThresholds& thresholds = {});

// First failing rule wins; keep when every rule passes.
Verdict apply_rules(const SourceDocument& doc, std::span<const FilterRule> rules);

// Text statistics the rules are built from. Lengths count characters
// (malformed UTF-8 bytes count as one replacement character each).
struct TextStats {
  std::size_t chars = 0;
  std::size_t non_space_bytes = 0;
  std::size_t max_line_chars = 0;
  double mean_line_chars = 0.0;
  std::size_t alnum_chars = 0;
  std::size_t replacement_chars = 0;
};
TextStats text_stats(std::string_view content);

// Scores in [0, 1] rewarding a mix of prose and code: with c the fraction of
// non-blank lines that are code (inside ``` fences, or code-shaped), the score
// is 4 c (1 - c).
double grounding_score(std::string_view content);

struct DocumentScorer {
  std::string name;
  // nullopt = no score available for the document
  std::function<std::optional<double>(const SourceDocument&)> score;
  double min_score = 0.0;
  bool keep_unscored = false;
};

DocumentScorer heuristic_grounding_scorer(double min_score);
// Scores from a file keyed by doc_id, e.g. the output of an external
// fastText-style classifier.
DocumentScorer external_scorer(std::unordered_map<std::string, double> scores,
                               double min_score, bool keep_unscored = false);
// JSON-Lines {doc_id, score}.
std::unordered_map<std::string, double> load_score_file(const std::filesystem::path& path);

struct CascadeStage {
  int index = 1;
  std::vector<FilterRule> rules;
  std::optional<DocumentScorer> scorer;
};

struct CascadeConfig {
  std::vector<CascadeStage> stages;
  // Deepest-survived stage a document needs to be emitted; unset means it
  // must survive every stage.
  std::optional<int> min_emit_stage;

  // At least one stage, strictly increasing indices starting at >= 1.
  void validate() const;
  int last_stage() const { return stages.back().index; }
};

// One stage holding every built-in rule.
CascadeConfig default_cascade(const RuleThresholds& thresholds = {});

// Paths inside the table (external score files) resolve against `base_dir`.
CascadeConfig parse_cascade_config(std::string_view toml_text,
                                   const std::filesystem::path& base_dir);
CascadeConfig load_cascade_config(const std::filesystem::path& file);

struct StageStats {
  std::size_t docs = 0;
  std::size_t bytes = 0;
  std::size_t approx_tokens = 0;

  bool operator==(const StageStats&) const = default;
};

struct DropRecord {
  std::string doc_id;
  int stage = 0;
  std::string reason;
};

struct CascadeResult {
  std::vector<SourceDocument> kept;  // input order, quality_stage set
  std::vector<DropRecord> drops;     // every document that failed a stage
  // 0 = input; k = documents that survived stage k.
  std::map<int, StageStats> stage_report;
};

CascadeResult run_cascade(std::vector<SourceDocument> docs, const CascadeConfig& config,
                          const TokenBudgeter& budgeter = TokenBudgeter::whitespace_word(),
                          unsigned workers = 1);

nlohmann::ordered_json stage_report_json(const std::map<int, StageStats>& report);

}  // namespace codeprep
