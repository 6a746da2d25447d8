#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <random>

#include "codeprep/errors.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/quality_filter.hpp"
#include "test_support.hpp"

using namespace codeprep;

namespace {

SourceDocument doc(std::string content, std::string path = "f.txt") {
  return SourceDocument::make("r", std::move(path), std::move(content));
}

// Plain-byte re-evaluation of the default rules for ASCII documents where
// 0xFF bytes stand in for malformed input.
std::vector<std::string> oracle_violations(const std::string& s, const RuleThresholds& t) {
  std::vector<std::string> out;
  std::size_t non_space = 0, alnum = 0, bad = 0, chars = s.size();
  for (unsigned char c : s) {
    if (c == 0xFF) {
      ++bad;
      ++non_space;
    } else {
      if (!std::isspace(c)) ++non_space;
      if (std::isalnum(c)) ++alnum;
    }
  }
  std::vector<std::size_t> line_lengths;
  std::size_t cur = 0;
  for (char c : s) {
    if (c == '\n') {
      line_lengths.push_back(cur);
      cur = 0;
    } else {
      ++cur;
    }
  }
  if (cur) line_lengths.push_back(cur);
  std::size_t longest = 0, total = 0;
  for (auto l : line_lengths) {
    longest = std::max(longest, l);
    total += l;
  }
  const double mean = line_lengths.empty() ? 0.0 : double(total) / double(line_lengths.size());
  if (non_space < t.min_content_chars) out.push_back("min-content");
  if (longest > t.max_line_length) out.push_back("max-line-length");
  if (mean > t.max_mean_line_length) out.push_back("mean-line-length");
  if (chars == 0 || double(alnum) / double(chars) < t.min_alnum_fraction) out.push_back("alnum-fraction");
  if (chars && double(bad) / double(chars) > t.max_replacement_fraction) out.push_back("replacement-fraction");
  std::string header;
  std::size_t lines = 0;
  for (char c : s) {
    header += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '\n' && ++lines == t.autogenerated_header_lines) break;
  }
  for (const auto& m : t.autogenerated_markers) {
    std::string lm = m;
    std::transform(lm.begin(), lm.end(), lm.begin(), [](unsigned char c) { return std::tolower(c); });
    if (header.find(lm) != std::string::npos) {
      out.push_back("autogenerated");
      break;
    }
  }
  return out;
}

std::string planted_doc(std::mt19937_64& rng) {
  std::string s;
  const int lines = 1 + static_cast<int>(rng() % 8);
  for (int i = 0; i < lines; ++i) {
    s += testing::random_words(rng, 1 + rng() % 8);
    s += '\n';
  }
  switch (rng() % 8) {
    case 0: s = std::string(rng() % 3, ' '); break;
    case 1: s += std::string(10001 + rng() % 5, 'a') + "\n"; break;
    case 2: s = std::string(300, 'x'); break;
    case 3: s += std::string(200, '~') + "\n"; break;
    case 4: s += std::string(1 + rng() % 3, '\xff'); break;
    case 5: s = "// Code generated by tool. DO NOT EDIT.\n" + s; break;
    default: break;
  }
  return s;
}

}  // namespace

TEST_SUITE("quality_filter") {

TEST_CASE("empty document fails min-content") {
  const auto v = apply_rules(doc(""), default_rules());
  CHECK_FALSE(v.keep);
  CHECK(v.reason == "min-content");
}

TEST_CASE("overlong line fails max-line-length") {
  const auto v = apply_rules(doc("int x;\n" + std::string(100001, 'a') + "\n"), default_rules());
  CHECK_FALSE(v.keep);
  CHECK(v.reason == "max-line-length");
}

TEST_CASE("ordinary code is kept") {
  CHECK(apply_rules(doc("def f(x):\n    return x + 1\n", "f.py"), default_rules()).keep);
}

TEST_CASE("autogenerated marker only counts in the header") {
  RuleThresholds t;
  t.autogenerated_header_lines = 2;
  const std::vector<FilterRule> rules{make_rule("autogenerated", t)};
  CHECK_FALSE(apply_rules(doc("x\n// @generated\n"), rules).keep);
  CHECK(apply_rules(doc("x\ny\n// @generated\n"), rules).keep);
}

TEST_CASE("unknown rule throws") { CHECK_THROWS_AS(make_rule("entropy"), ConfigError); }

TEST_CASE("text stats count characters, not bytes") {
  const TextStats s = text_stats("é\n日本\xff");
  CHECK(s.chars == 5);
  CHECK(s.max_line_chars == 3);
  CHECK(s.replacement_chars == 1);
  CHECK(s.alnum_chars == 3);
  CHECK(s.mean_line_chars == doctest::Approx(2.0));
}

TEST_CASE("planted violations match the independent oracle") {
  std::mt19937_64 rng(1234);
  const RuleThresholds t;
  const auto rules = default_rules(t);
  for (int i = 0; i < 1000; ++i) {
    const std::string content = planted_doc(rng);
    const auto expected = oracle_violations(content, t);
    const Verdict v = apply_rules(doc(content), rules);
    CAPTURE(content);
    CHECK(v.keep == expected.empty());
    if (!expected.empty()) CHECK(v.reason == expected.front());
  }
}

TEST_CASE("verdict does not depend on rule order") {
  std::mt19937_64 rng(99);
  auto rules = default_rules();
  for (int i = 0; i < 300; ++i) {
    const auto d = doc(planted_doc(rng));
    const bool keep = apply_rules(d, rules).keep;
    std::shuffle(rules.begin(), rules.end(), rng);
    CHECK(apply_rules(d, rules).keep == keep);
  }
}

TEST_CASE("identity cascade emits every document at stage 1") {
  CascadeConfig config;
  config.stages.push_back({1, {}, std::nullopt});
  std::vector<SourceDocument> docs{doc("a"), doc(""), doc(std::string(20000, 'x'))};
  const auto r = run_cascade(docs, config);
  REQUIRE(r.kept.size() == 3);
  for (const auto& d : r.kept) CHECK(d.quality_stage == 1);
  CHECK(r.drops.empty());
}

TEST_CASE("tightening cascade: non-increasing survivors, sequential oracle, idempotence") {
  std::mt19937_64 rng(77);
  std::vector<SourceDocument> docs;
  for (int i = 0; i < 400; ++i) {
    docs.push_back(doc(testing::random_words(rng, rng() % 60), "f" + std::to_string(i)));
  }
  CascadeConfig config;
  const std::size_t mins[] = {1, 40, 120, 250};
  for (int k = 0; k < 4; ++k) {
    RuleThresholds t;
    t.min_content_chars = mins[k];
    config.stages.push_back({k + 1, {make_rule("min-content", t, k + 1)}, std::nullopt});
  }
  const auto r = run_cascade(docs, config, TokenBudgeter::whitespace_word(), 4);
  for (int k = 1; k <= 4; ++k) CHECK(r.stage_report.at(k).docs <= r.stage_report.at(k - 1).docs);

  std::vector<std::string> oracle;
  for (const auto& d : docs) {
    std::size_t ns = 0;
    for (char c : d.content) ns += !std::isspace(static_cast<unsigned char>(c));
    if (ns >= 250) oracle.push_back(d.doc_id);
  }
  std::vector<std::string> kept;
  for (const auto& d : r.kept) {
    kept.push_back(d.doc_id);
    CHECK(d.quality_stage == 4);
  }
  CHECK(kept == oracle);
  CHECK(r.drops.size() + r.kept.size() == docs.size());

  const auto again = run_cascade(r.kept, config);
  CHECK(again.kept == r.kept);
}

TEST_CASE("min_emit_stage keeps partial survivors with their depth") {
  CascadeConfig config;
  RuleThresholds loose, tight;
  tight.min_content_chars = 10;
  config.stages.push_back({1, {make_rule("min-content", loose, 1)}, std::nullopt});
  config.stages.push_back({2, {make_rule("min-content", tight, 2)}, std::nullopt});
  config.min_emit_stage = 1;
  const auto r = run_cascade({doc("short"), doc("long enough text"), doc(" ")}, config);
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].quality_stage == 1);
  CHECK(r.kept[1].quality_stage == 2);
  REQUIRE(r.drops.size() == 2);
  CHECK(r.drops[0].stage == 2);
  CHECK(r.drops[1].stage == 1);
}

TEST_CASE("cascade validation") {
  CascadeConfig empty;
  CHECK_THROWS_AS(empty.validate(), ConfigError);
  CascadeConfig bad;
  bad.stages.push_back({2, {}, std::nullopt});
  bad.stages.push_back({2, {}, std::nullopt});
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("grounding score rewards mixed prose and code") {
  CHECK(grounding_score("") == 0.0);
  CHECK(grounding_score("Just prose here.\nMore prose.\n") == doctest::Approx(0.0));
  CHECK(grounding_score("Explain:\n```\nx = 1;\n```\n") > 0.5);
  const double s = grounding_score("Explain this.\n```python\nx = 1\n```\nDone.\n");
  CHECK(s >= 0.0);
  CHECK(s <= 1.0);
}

TEST_CASE("cascade config from toml with scorers") {
  testing::TempDir dir("cascade");
  const auto a = doc("alpha beta gamma delta", "a");
  const auto b = doc("epsilon zeta eta theta", "b");
  write_file(dir.path() / "scores.jsonl",
             "{\"doc_id\":\"" + a.doc_id + "\",\"score\":0.9}\n");
  const std::string text = R"(
min_emit_stage = 2
[[stage]]
rules = ["min-content", "autogenerated"]
[stage.thresholds]
min_content_chars = 5
[[stage]]
[stage.scorer]
kind = "external"
path = "scores.jsonl"
min_score = 0.5
)";
  const CascadeConfig config = parse_cascade_config(text, dir.path());
  REQUIRE(config.stages.size() == 2);
  CHECK(config.stages[1].index == 2);
  const auto r = run_cascade({a, b}, config);
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].doc_id == a.doc_id);
  REQUIRE(r.drops.size() == 1);
  CHECK(r.drops[0].reason == "external-unscored");
  CHECK_THROWS_AS(parse_cascade_config("[[stage]]\nrules = [\"nope\"]\n", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_cascade_config("x = 1\n", dir.path()), ConfigError);
}

TEST_CASE("stage report json shape") {
  std::map<int, StageStats> report{{0, {3, 30, 6}}, {1, {2, 20, 4}}};
  const auto j = stage_report_json(report);
  CHECK(j["0"]["docs"] == 3);
  CHECK(j["1"]["approx_tokens"] == 4);
}

}
