#include "codeprep/syntax_gate.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <fmt/format.h>

#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/parallel.hpp"
#include "toml_tables.hpp"

namespace codeprep {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Info string of a fence line, or nullopt when the line is not a fence.
std::optional<std::string_view> fence_info(std::string_view line) {
  std::size_t indent = 0;
  while (indent < line.size() && indent < 3 && line[indent] == ' ') ++indent;
  line.remove_prefix(indent);
  if (line.substr(0, 3) != "```") return std::nullopt;
  std::size_t ticks = 3;
  while (ticks < line.size() && line[ticks] == '`') ++ticks;
  return trim(line.substr(ticks));
}

}  // namespace

std::string normalize_language_tag(std::string_view info) {
  info = trim(info);
  const std::size_t end = info.find_first_of(" \t{,");
  std::string tag(info.substr(0, end));
  std::transform(tag.begin(), tag.end(), tag.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (tag.empty()) return "unknown";
  static const std::map<std::string, std::string, std::less<>> kAliases{
      {"py", "python"},       {"python3", "python"}, {"py3", "python"},
      {"js", "javascript"},   {"jsx", "javascript"}, {"node", "javascript"},
      {"mjs", "javascript"},  {"ts", "typescript"},  {"tsx", "typescript"},
      {"c++", "cpp"},         {"cc", "cpp"},         {"cxx", "cpp"},
      {"hpp", "cpp"},         {"h", "c"},            {"cs", "csharp"},
      {"c#", "csharp"},       {"sh", "shell"},       {"bash", "shell"},
      {"zsh", "shell"},       {"console", "shell"},  {"golang", "go"},
      {"rs", "rust"},         {"rb", "ruby"},        {"kt", "kotlin"},
      {"text", "unknown"},    {"plaintext", "unknown"}, {"txt", "unknown"},
  };
  const auto it = kAliases.find(tag);
  return it == kAliases.end() ? tag : it->second;
}

BlockExtraction extract_code_blocks_checked(std::string_view text) {
  BlockExtraction out;
  std::optional<CodeBlock> open;
  std::size_t open_line = 0;
  std::size_t body_begin = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const std::size_t next = end == std::string_view::npos ? text.size() : end + 1;
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    if (const auto info = fence_info(text.substr(pos, end - pos))) {
      if (open) {
        // snippet excludes the newline right before the closing fence
        const std::size_t body_end = pos > body_begin ? pos - 1 : body_begin;
        open->snippet = std::string(text.substr(body_begin, body_end - body_begin));
        out.blocks.push_back(std::move(*open));
        open.reset();
      } else {
        open = CodeBlock{normalize_language_tag(*info), {}};
        open_line = line_no;
        body_begin = next;
      }
    }
    pos = next;
  }
  if (open) {
    out.warnings.push_back(fmt::format("unclosed code fence opened on line {}", open_line));
  }
  return out;
}

std::vector<CodeBlock> extract_code_blocks(std::string_view text) {
  return extract_code_blocks_checked(text).blocks;
}

InstructionSample InstructionSample::make(std::string sample_id, std::string question,
                                          std::string answer) {
  InstructionSample s;
  s.sample_id = std::move(sample_id);
  s.question = std::move(question);
  s.answer = std::move(answer);
  s.code_blocks = extract_code_blocks(s.question);
  for (auto& b : extract_code_blocks(s.answer)) s.code_blocks.push_back(std::move(b));
  s.language_label = classify_language(s);
  return s;
}

InstructionSample InstructionSample::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("sample_id")) {
    throw FormatError("instruction record needs sample_id, question and answer");
  }
  const auto text = [&](const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_string()) throw FormatError(fmt::format("field {} must be a string", key));
    return j[key].get<std::string>();
  };
  const auto& id = j["sample_id"];
  std::string sample_id = id.is_string() ? id.get<std::string>() : id.dump();
  return make(std::move(sample_id), text("question"), text("answer"));
}

StaticCheck static_check(std::string_view snippet, std::string_view language,
                         syntax::Parser& parser) {
  if (!syntax::supports(language)) return {CheckStatus::unsupported, 0};
  const syntax::SyntaxTree tree = parser.parse(language, snippet);
  const std::size_t errors = tree.error_node_count();
  if (errors == 0 && !tree.has_error()) return {CheckStatus::ok, 0};
  return {CheckStatus::reject, std::max<std::size_t>(errors, 1)};
}

std::string guess_language(std::string_view text) {
  struct Cue {
    std::string_view language;
    std::string_view token;
  };
  static constexpr Cue kCues[] = {
      {"python", "def "},          {"python", "import "},      {"python", "elif "},
      {"python", "print("},        {"python", "self."},        {"javascript", "function "},
      {"javascript", "const "},    {"javascript", "=>"},       {"javascript", "console.log"},
      {"c", "#include"},           {"c", "printf("},           {"cpp", "std::"},
      {"java", "public class"},    {"java", "System.out"},     {"java", "public static"},
      {"go", "func "},             {"go", "package main"},     {"go", ":="},
      {"rust", "fn "},             {"rust", "let mut"},        {"rust", "println!"},
      {"shell", "#!/bin/"},        {"shell", "echo "},         {"sql", "SELECT "},
  };
  std::size_t lines = 0;
  std::size_t code_lines = 0;
  std::map<std::string_view, std::size_t> votes;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    ++lines;
    bool code = false;
    for (const Cue& cue : kCues) {
      if (line.find(cue.token) != std::string_view::npos) {
        ++votes[cue.language];
        code = true;
      }
    }
    const char last = line.back();
    if (last == ';' || last == '{' || last == '}') code = true;
    if (code) ++code_lines;
  }
  if (votes.empty() || code_lines < 2 || code_lines * 2 < lines) {
    return std::string(kNoProgrammingLanguage);
  }
  const auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
    return a.second < b.second;  // first maximum = smallest tag on ties
  });
  return std::string(best->first);
}

std::string classify_language(const InstructionSample& sample) {
  if (sample.code_blocks.empty()) return guess_language(sample.question + "\n" + sample.answer);
  std::map<std::string, std::size_t> counts;
  for (const auto& b : sample.code_blocks) {
    if (b.language != "unknown") ++counts[b.language];
  }
  if (counts.empty()) return "unknown";
  const auto best = std::max_element(counts.begin(), counts.end(), [](const auto& a,
                                                                      const auto& b) {
    return a.second < b.second;
  });
  return best->first;
}

double checklist_score(std::span<const double> scores, std::span<const double> weights) {
  if (scores.size() != weights.size()) {
    throw ContractError(fmt::format("checklist has {} scores but {} weights", scores.size(),
                                    weights.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw ContractError("checklist weights must be non-negative");
    total += weights[i] * scores[i];
  }
  return total;
}

ExternalScores load_external_scores(const std::filesystem::path& path) {
  ExternalScores out;
  for (const auto& j : read_jsonl(path)) {
    if (!j.contains("sample_id") || !j.contains("criterion") || !j.contains("score")) {
      throw FormatError(fmt::format("{}: score record needs sample_id, criterion, score",
                                    path.string()));
    }
    const std::string criterion = j["criterion"].get<std::string>();
    if (std::find(kChecklistCriteria.begin(), kChecklistCriteria.end(), criterion) ==
        kChecklistCriteria.end()) {
      throw FormatError(fmt::format("{}: unknown criterion '{}'", path.string(), criterion));
    }
    const auto& id = j["sample_id"];
    out[id.is_string() ? id.get<std::string>() : id.dump()][criterion] =
        j["score"].get<double>();
  }
  return out;
}

void GatePolicy::validate() const {
  const auto fraction = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("{} {} outside [0, 1]", name, v));
  };
  fraction("no_code_keep", no_code_keep);
  fraction("long_tail_keep", long_tail_keep);
  if (!(score_max > 0.0)) throw ConfigError("score_max must be positive");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("checklist weights must be non-negative");
  }
}

GatePolicy parse_gate_policy(std::string_view toml_text) {
  return detail::gate_policy_from_table(detail::parse_toml(toml_text, "gate policy"),
                                        "gate policy");
}

GatePolicy load_gate_policy(const std::filesystem::path& path) {
  return parse_gate_policy(read_file(path));
}

std::string gate_policy_toml(const GatePolicy& policy) {
  std::ostringstream out;
  out << detail::gate_policy_table(policy, true) << '\n';
  return out.str();
}

ChecklistScore score_sample(const InstructionSample& sample, const GatePolicy& policy,
                            const ExternalScores& external, syntax::Parser& parser) {
  const auto ext = external.find(sample.sample_id);
  std::vector<double> scores;
  for (std::string_view criterion : kChecklistCriteria) {
    double s = 0.0;
    if (criterion == "code-exist") {
      s = sample.code_blocks.empty() ? 0.0 : policy.score_max;
    } else if (criterion == "code-correctness") {
      std::size_t checked = 0;
      std::size_t passed = 0;
      for (const auto& b : sample.code_blocks) {
        const StaticCheck r = static_check(b.snippet, b.language, parser);
        if (r.status == CheckStatus::unsupported) continue;
        ++checked;
        if (r.status == CheckStatus::ok) ++passed;
      }
      if (checked > 0) {
        s = policy.score_max * static_cast<double>(passed) / static_cast<double>(checked);
      } else if (!sample.code_blocks.empty()) {
        s = policy.score_max / 2;
      }
    } else if (ext != external.end()) {
      const auto it = ext->second.find(std::string(criterion));
      if (it != ext->second.end()) s = std::clamp(it->second, 0.0, policy.score_max);
    }
    scores.push_back(s);
  }
  ChecklistScore out;
  out.weights.assign(policy.weights.begin(), policy.weights.end());
  out.total = checklist_score(scores, out.weights);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.criteria.emplace_back(std::string(kChecklistCriteria[i]), scores[i]);
  }
  return out;
}

GateResult gate_instruction_corpus(const std::vector<InstructionSample>& samples,
                                   const GatePolicy& policy, const ExternalScores& external,
                                   unsigned workers) {
  policy.validate();
  struct Slot {
    ChecklistScore score;
    std::string reason;
  };
  std::vector<Slot> slots(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    thread_local std::optional<syntax::Parser> parser;
    if (!parser) parser.emplace();
    const InstructionSample& s = samples[i];
    Slot& slot = slots[i];
    if (s.language_label == kNoProgrammingLanguage) {
      if (!(keyed_unit(policy.seed, "gate-no-code", s.sample_id) < policy.no_code_keep)) {
        slot.reason = "no-code";
        return;
      }
    } else if (!policy.mainstream.count(s.language_label)) {
      if (!(keyed_unit(policy.seed, "gate-long-tail", s.sample_id) < policy.long_tail_keep)) {
        slot.reason = "long-tail";
        return;
      }
    }
    if (policy.require_static) {
      for (const auto& b : s.code_blocks) {
        const StaticCheck r = static_check(b.snippet, b.language, *parser);
        if (r.status == CheckStatus::reject ||
            (r.status == CheckStatus::unsupported && !policy.keep_unsupported)) {
          slot.reason = "static-check";
          return;
        }
      }
    }
    slot.score = score_sample(s, policy, external, *parser);
    if (policy.min_total && slot.score.total < *policy.min_total) {
      slot.reason = "checklist-below-min";
    }
  });
  GateResult result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (slots[i].reason.empty()) {
      result.kept.push_back({samples[i], std::move(slots[i].score)});
    } else {
      result.drops.push_back({samples[i].sample_id, std::move(slots[i].reason)});
    }
  }
  return result;
}

nlohmann::ordered_json gated_record(const GatedSample& gated) {
  nlohmann::ordered_json j;
  j["sample_id"] = gated.sample.sample_id;
  j["question"] = gated.sample.question;
  j["answer"] = gated.sample.answer;
  j["language"] = gated.sample.language_label;
  nlohmann::ordered_json criteria = nlohmann::ordered_json::object();
  for (const auto& [name, score] : gated.score.criteria) criteria[name] = score;
  j["criteria"] = std::move(criteria);
  j["score"] = gated.score.total;
  return j;
}

}  // namespace codeprep
