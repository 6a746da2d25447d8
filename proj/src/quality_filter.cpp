#include "codeprep/quality_filter.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <toml++/toml.hpp>
#include <unicode/uchar.h>

#include "codeprep/errors.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/parallel.hpp"
#include "codeprep/utf8.hpp"

namespace fs = std::filesystem;

namespace codeprep {

namespace {

constexpr char32_t kReplacementChar = 0xFFFD;

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool looks_like_code(std::string_view line) {
  const std::string_view t = trim(line);
  if (t.empty()) return false;
  if (t.ends_with(';') || t.ends_with('{') || t.ends_with('}')) return true;
  static constexpr std::string_view kStarts[] = {
      "def ", "return ", "import ", "from ", "#include", "for (", "if (", "while (",
      "class ", "function ", "const ", "let ", "var ", "fn ", "func ", "public ", "private "};
  for (auto s : kStarts) {
    if (t.starts_with(s)) return true;
  }
  std::size_t symbols = 0;
  for (char c : t) {
    if (std::string_view("{}()[];=<>+-*/&|!").find(c) != std::string_view::npos) ++symbols;
  }
  return static_cast<double>(symbols) / static_cast<double>(t.size()) >= 0.15;
}

}  // namespace

TextStats text_stats(std::string_view content) {
  TextStats s;
  std::size_t line_chars = 0;
  std::size_t lines = 0;
  std::size_t newlines = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const utf8::Decoded d = utf8::decode(content, pos);
    pos += d.length;
    ++s.chars;
    if (d.code_point == '\n') {
      s.max_line_chars = std::max(s.max_line_chars, line_chars);
      line_chars = 0;
      ++lines;
      ++newlines;
      continue;
    }
    ++line_chars;
    if (d.code_point == utf8::kInvalid || d.code_point == kReplacementChar) {
      ++s.replacement_chars;
    } else if (u_isalnum(static_cast<UChar32>(d.code_point))) {
      ++s.alnum_chars;
    }
    if (d.code_point >= 0x80 || !std::isspace(static_cast<int>(d.code_point))) {
      s.non_space_bytes += d.length;
    }
  }
  if (line_chars > 0) {
    s.max_line_chars = std::max(s.max_line_chars, line_chars);
    ++lines;
  }
  if (lines > 0) {
    s.mean_line_chars = static_cast<double>(s.chars - newlines) / static_cast<double>(lines);
  }
  return s;
}

const std::vector<std::string>& builtin_rule_names() {
  static const std::vector<std::string> names{"min-content",      "max-line-length",
                                              "mean-line-length", "alnum-fraction",
                                              "replacement-fraction", "autogenerated"};
  return names;
}

FilterRule make_rule(std::string_view name, const RuleThresholds& t, int stage) {
  FilterRule rule;
  rule.name = std::string(name);
  rule.stage = stage;
  const std::string rule_name = rule.name;
  if (name == "min-content") {
    rule.predicate = [min = t.min_content_chars, rule_name](const SourceDocument& d) {
      std::size_t n = 0;
      for (char c : d.content) n += !std::isspace(static_cast<unsigned char>(c));
      return n >= min ? Verdict::pass() : Verdict::drop(rule_name);
    };
  } else if (name == "max-line-length") {
    rule.predicate = [max = t.max_line_length, rule_name](const SourceDocument& d) {
      return text_stats(d.content).max_line_chars <= max ? Verdict::pass()
                                                         : Verdict::drop(rule_name);
    };
  } else if (name == "mean-line-length") {
    rule.predicate = [max = t.max_mean_line_length, rule_name](const SourceDocument& d) {
      return text_stats(d.content).mean_line_chars <= max ? Verdict::pass()
                                                          : Verdict::drop(rule_name);
    };
  } else if (name == "alnum-fraction") {
    rule.predicate = [min = t.min_alnum_fraction, rule_name](const SourceDocument& d) {
      const TextStats s = text_stats(d.content);
      if (s.chars == 0) return Verdict::drop(rule_name);
      const double frac = static_cast<double>(s.alnum_chars) / static_cast<double>(s.chars);
      return frac >= min ? Verdict::pass() : Verdict::drop(rule_name);
    };
  } else if (name == "replacement-fraction") {
    rule.predicate = [max = t.max_replacement_fraction, rule_name](const SourceDocument& d) {
      const TextStats s = text_stats(d.content);
      if (s.chars == 0) return Verdict::pass();
      const double frac =
          static_cast<double>(s.replacement_chars) / static_cast<double>(s.chars);
      return frac <= max ? Verdict::pass() : Verdict::drop(rule_name);
    };
  } else if (name == "autogenerated") {
    std::vector<std::string> markers;
    for (const auto& m : t.autogenerated_markers) markers.push_back(lower_ascii(m));
    rule.predicate = [markers, lines = t.autogenerated_header_lines,
                      rule_name](const SourceDocument& d) {
      std::size_t end = 0;
      for (std::size_t i = 0; i < lines; ++i) {
        const std::size_t nl = d.content.find('\n', end);
        if (nl == std::string::npos) {
          end = d.content.size();
          break;
        }
        end = nl + 1;
      }
      const std::string header =
          lower_ascii(std::string_view(d.content).substr(0, end));
      for (const auto& m : markers) {
        if (header.find(m) != std::string::npos) return Verdict::drop(rule_name);
      }
      return Verdict::pass();
    };
  } else {
    throw ConfigError("unknown filter rule: " + rule.name);
  }
  return rule;
}

std::vector<FilterRule> default_rules(const RuleThresholds& thresholds) {
  std::vector<FilterRule> rules;
  for (const auto& name : builtin_rule_names()) rules.push_back(make_rule(name, thresholds));
  return rules;
}

Verdict apply_rules(const SourceDocument& doc, std::span<const FilterRule> rules) {
  for (const auto& rule : rules) {
    Verdict v = rule.predicate(doc);
    if (!v.keep) {
      if (v.reason.empty()) v.reason = rule.name;
      return v;
    }
  }
  return Verdict::pass();
}

double grounding_score(std::string_view content) {
  std::size_t nonblank = 0;
  std::size_t code = 0;
  bool in_fence = false;
  for (std::string_view line : split_lines(content)) {
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    ++nonblank;
    if (t.starts_with("```")) {
      in_fence = !in_fence;
      ++code;
      continue;
    }
    if (in_fence || looks_like_code(line)) ++code;
  }
  if (nonblank == 0) return 0.0;
  const double c = static_cast<double>(code) / static_cast<double>(nonblank);
  return 4.0 * c * (1.0 - c);
}

DocumentScorer heuristic_grounding_scorer(double min_score) {
  return {"heuristic-grounding",
          [](const SourceDocument& d) -> std::optional<double> {
            return grounding_score(d.content);
          },
          min_score, false};
}

DocumentScorer external_scorer(std::unordered_map<std::string, double> scores,
                               double min_score, bool keep_unscored) {
  auto shared = std::make_shared<const std::unordered_map<std::string, double>>(std::move(scores));
  return {"external",
          [shared](const SourceDocument& d) -> std::optional<double> {
            const auto it = shared->find(d.doc_id);
            if (it == shared->end()) return std::nullopt;
            return it->second;
          },
          min_score, keep_unscored};
}

std::unordered_map<std::string, double> load_score_file(const fs::path& path) {
  std::unordered_map<std::string, double> scores;
  for (const auto& r : read_jsonl(path)) {
    try {
      scores[r.at("doc_id").get<std::string>()] = r.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": score record needs doc_id and score: " + e.what());
    }
  }
  return scores;
}

void CascadeConfig::validate() const {
  if (stages.empty()) throw ConfigError("cascade needs at least one stage");
  int prev = 0;
  for (const auto& s : stages) {
    if (s.index <= prev) {
      throw ConfigError("cascade stage indices must be >= 1 and strictly increasing");
    }
    prev = s.index;
  }
  if (min_emit_stage && (*min_emit_stage < 0 || *min_emit_stage > last_stage())) {
    throw ConfigError("min_emit_stage outside the cascade's stage range");
  }
}

CascadeConfig default_cascade(const RuleThresholds& thresholds) {
  CascadeConfig config;
  config.stages.push_back({1, default_rules(thresholds), std::nullopt});
  return config;
}

namespace {

RuleThresholds thresholds_from(const toml::table* t) {
  RuleThresholds th;
  if (!t) return th;
  th.min_content_chars = (*t)["min_content_chars"].value_or<std::int64_t>(th.min_content_chars);
  th.max_line_length = (*t)["max_line_length"].value_or<std::int64_t>(th.max_line_length);
  th.max_mean_line_length = (*t)["max_mean_line_length"].value_or(th.max_mean_line_length);
  th.min_alnum_fraction = (*t)["min_alnum_fraction"].value_or(th.min_alnum_fraction);
  th.max_replacement_fraction =
      (*t)["max_replacement_fraction"].value_or(th.max_replacement_fraction);
  th.autogenerated_header_lines = (*t)["autogenerated_header_lines"].value_or<std::int64_t>(
      th.autogenerated_header_lines);
  if (const auto* markers = (*t)["autogenerated_markers"].as_array()) {
    th.autogenerated_markers.clear();
    for (const auto& m : *markers) {
      if (auto s = m.value<std::string>()) th.autogenerated_markers.push_back(*s);
    }
  }
  return th;
}

}  // namespace

CascadeConfig parse_cascade_config(std::string_view toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string("cascade config: ") + std::string(e.description()));
  }
  CascadeConfig config;
  if (auto v = root["min_emit_stage"].value<std::int64_t>()) {
    config.min_emit_stage = static_cast<int>(*v);
  }
  const auto* stages = root["stage"].as_array();
  if (!stages) throw ConfigError("cascade config needs [[stage]] entries");
  int next_index = 1;
  for (const auto& node : *stages) {
    const auto* st = node.as_table();
    if (!st) throw ConfigError("cascade [[stage]] must be a table");
    CascadeStage stage;
    stage.index = static_cast<int>((*st)["index"].value_or<std::int64_t>(next_index));
    next_index = stage.index + 1;
    const RuleThresholds th = thresholds_from((*st)["thresholds"].as_table());
    if (const auto* rules = (*st)["rules"].as_array()) {
      for (const auto& r : *rules) {
        const auto name = r.value<std::string>();
        if (!name) throw ConfigError("cascade rule names must be strings");
        stage.rules.push_back(make_rule(*name, th, stage.index));
      }
    }
    if (const auto* sc = (*st)["scorer"].as_table()) {
      const std::string kind = (*sc)["kind"].value_or<std::string>("heuristic");
      const double min_score = (*sc)["min_score"].value_or(0.0);
      if (kind == "heuristic") {
        stage.scorer = heuristic_grounding_scorer(min_score);
      } else if (kind == "external") {
        const auto path = (*sc)["path"].value<std::string>();
        if (!path) throw ConfigError("external scorer needs a path");
        const bool keep = (*sc)["missing"].value_or<std::string>("drop") == "keep";
        stage.scorer = external_scorer(load_score_file(base_dir / *path), min_score, keep);
      } else {
        throw ConfigError("unknown scorer kind: " + kind);
      }
    }
    config.stages.push_back(std::move(stage));
  }
  config.validate();
  return config;
}

CascadeConfig load_cascade_config(const fs::path& file) {
  return parse_cascade_config(read_file(file), file.parent_path());
}

CascadeResult run_cascade(std::vector<SourceDocument> docs, const CascadeConfig& config,
                          const TokenBudgeter& budgeter, unsigned workers) {
  config.validate();
  struct Outcome {
    int deepest = 0;  // deepest stage survived
    int failed_stage = 0;
    std::string reason;
    std::size_t tokens = 0;
  };
  std::vector<Outcome> outcomes(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) {
    const SourceDocument& doc = docs[i];
    Outcome& out = outcomes[i];
    out.tokens = budgeter.count(doc.content);
    for (const auto& stage : config.stages) {
      Verdict v = apply_rules(doc, stage.rules);
      if (v.keep && stage.scorer) {
        const std::optional<double> s = stage.scorer->score(doc);
        if (!s ? !stage.scorer->keep_unscored : *s < stage.scorer->min_score) {
          v = Verdict::drop(stage.scorer->name + (s ? "-score" : "-unscored"));
        }
      }
      if (!v.keep) {
        out.failed_stage = stage.index;
        out.reason = std::move(v.reason);
        return;
      }
      out.deepest = stage.index;
    }
  });

  const int emit_at = config.min_emit_stage.value_or(config.last_stage());
  CascadeResult result;
  auto& input = result.stage_report[0];
  for (const auto& stage : config.stages) result.stage_report[stage.index];
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Outcome& o = outcomes[i];
    input.docs += 1;
    input.bytes += docs[i].byte_len;
    input.approx_tokens += o.tokens;
    for (const auto& stage : config.stages) {
      if (stage.index > o.deepest) break;
      auto& s = result.stage_report[stage.index];
      s.docs += 1;
      s.bytes += docs[i].byte_len;
      s.approx_tokens += o.tokens;
    }
    if (o.failed_stage != 0) result.drops.push_back({docs[i].doc_id, o.failed_stage, o.reason});
    if (o.deepest >= emit_at && o.deepest > 0) {
      docs[i].quality_stage = o.deepest;
      result.kept.push_back(std::move(docs[i]));
    }
  }
  return result;
}

nlohmann::ordered_json stage_report_json(const std::map<int, StageStats>& report) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [stage, s] : report) {
    out[std::to_string(stage)] = {
        {"docs", s.docs}, {"bytes", s.bytes}, {"approx_tokens", s.approx_tokens}};
  }
  return out;
}

}  // namespace codeprep
