#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeprep/syntax.hpp"

namespace codeprep {

inline constexpr std::string_view kNoProgrammingLanguage = "No Programming Language";

inline constexpr std::array<std::string_view, 9> kChecklistCriteria{
    "consistency", "relevance",  "difficulty", "code-exist",       "code-correctness",
    "best-practices", "clarity", "comments",   "educational-value"};

struct CodeBlock {
  std::string language;  // normalized info tag, "unknown" when absent
  std::string snippet;

  bool operator==(const CodeBlock&) const = default;
};

struct BlockExtraction {
  std::vector<CodeBlock> blocks;
  std::vector<std::string> warnings;
};

// ``` fences paired greedily in document order. The snippet is the text
// between the opening line and the closing fence line, without the final
// newline. An unclosed fence is ignored with a warning.
BlockExtraction extract_code_blocks_checked(std::string_view text);
std::vector<CodeBlock> extract_code_blocks(std::string_view text);

// Lowercased first word of a fence info string with common aliases folded
// (py -> python, js -> javascript, c++ -> cpp, sh -> shell, ...).
std::string normalize_language_tag(std::string_view info);

struct InstructionSample {
  std::string sample_id;
  std::string question;
  std::string answer;
  std::vector<CodeBlock> code_blocks;  // question blocks, then answer blocks
  std::string language_label;

  // Extracts blocks and classifies the language.
  static InstructionSample make(std::string sample_id, std::string question, std::string answer);
  // {sample_id, question, answer}; throws FormatError.
  static InstructionSample from_json(const nlohmann::json& j);
};

enum class CheckStatus { ok, reject, unsupported };

struct StaticCheck {
  CheckStatus status = CheckStatus::ok;
  std::size_t error_nodes = 0;
};

// ok iff the parse tree has no ERROR or MISSING node.
StaticCheck static_check(std::string_view snippet, std::string_view language,
                         syntax::Parser& parser);

// Keyword-density guess for untagged text: a language tag, or
// kNoProgrammingLanguage when fewer than half of the non-blank lines (and
// fewer than two) look like code.
std::string guess_language(std::string_view text);

// Majority tag over the sample's blocks (known tags beat "unknown", ties go
// to the smaller tag); without blocks, guess_language(question + answer).
std::string classify_language(const InstructionSample& sample);

// Exact weighted sum. Throws ContractError on a length mismatch or a
// negative weight.
double checklist_score(std::span<const double> scores, std::span<const double> weights);

struct ChecklistScore {
  std::vector<std::pair<std::string, double>> criteria;  // kChecklistCriteria order
  std::vector<double> weights;
  double total = 0.0;
};

// sample_id -> criterion -> score
using ExternalScores = std::map<std::string, std::map<std::string, double>>;

// JSON-Lines {sample_id, criterion, score}; throws FormatError on unknown
// criteria.
ExternalScores load_external_scores(const std::filesystem::path& path);

struct GatePolicy {
  std::uint64_t seed = 0;
  double no_code_keep = 0.1;    // p
  double long_tail_keep = 0.5;  // q
  bool require_static = true;
  bool keep_unsupported = true;  // blocks without a grammar
  std::optional<double> min_total;
  double score_max = 10.0;
  std::set<std::string> mainstream{"cpp",    "csharp", "java",  "javascript",
                                   "php",    "python", "shell", "typescript"};
  std::array<double, 9> weights{1, 1, 1, 1, 1, 1, 1, 1, 1};

  void validate() const;
  bool operator==(const GatePolicy&) const = default;
};

GatePolicy parse_gate_policy(std::string_view toml_text);
GatePolicy load_gate_policy(const std::filesystem::path& path);
std::string gate_policy_toml(const GatePolicy& policy);

// code-exist = score_max when any block exists; code-correctness =
// score_max times the passing fraction of checkable blocks (score_max / 2
// when none is checkable, 0 without code). The rest come from `external`,
// 0 when missing.
ChecklistScore score_sample(const InstructionSample& sample, const GatePolicy& policy,
                            const ExternalScores& external, syntax::Parser& parser);

struct GateDrop {
  std::string sample_id;
  std::string reason;  // no-code, long-tail, static-check, checklist-below-min
};

struct GatedSample {
  InstructionSample sample;
  ChecklistScore score;
};

struct GateResult {
  std::vector<GatedSample> kept;  // input order
  std::vector<GateDrop> drops;
};

// Checks run in order no-code, long-tail, static-check, checklist minimum;
// the first failure is the reason. Coins are keyed by (seed, sample_id).
GateResult gate_instruction_corpus(const std::vector<InstructionSample>& samples,
                                   const GatePolicy& policy, const ExternalScores& external,
                                   unsigned workers = 1);

nlohmann::ordered_json gated_record(const GatedSample& gated);

}  // namespace codeprep
