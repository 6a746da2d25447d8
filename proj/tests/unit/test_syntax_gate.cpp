#include <doctest.h>

#include <cmath>
#include <random>

#include "codeprep/errors.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/syntax_gate.hpp"
#include "test_support.hpp"

using namespace codeprep;

namespace {

const char* kValid[][2] = {
    {"python", "def f(x):\n    return x + 1\n"},
    {"javascript", "function f(x) { return x + 1; }\n"},
    {"c", "int f(int x) { return x + 1; }\n"},
    {"go", "package main\n\nfunc f(x int) int { return x + 1 }\n"},
    {"java", "class A { int f(int x) { return x + 1; } }\n"},
    {"rust", "fn f(x: i32) -> i32 { x + 1 }\n"},
};

InstructionSample no_code(int i) {
  return InstructionSample::make("n" + std::to_string(i), "What is a monad, informally?",
                                 "It is a pattern for sequencing computations.");
}

}  // namespace

TEST_SUITE("syntax_gate") {

TEST_CASE("extract code blocks examples") {
  const auto one = extract_code_blocks("Here:\n```python\nx=1\n```\nDone.");
  REQUIRE(one.size() == 1);
  CHECK(one[0] == CodeBlock{"python", "x=1"});
  CHECK(extract_code_blocks("no fences at all").empty());
  const auto untagged = extract_code_blocks("```\na\nb\n```\n```JS extra\ny\n```");
  REQUIRE(untagged.size() == 2);
  CHECK(untagged[0] == CodeBlock{"unknown", "a\nb"});
  CHECK(untagged[1] == CodeBlock{"javascript", "y"});
  const auto unclosed = extract_code_blocks_checked("```go\nx := 1\n");
  CHECK(unclosed.blocks.empty());
  CHECK(unclosed.warnings.size() == 1);
  CHECK(extract_code_blocks("```c\n```")[0].snippet.empty());
}

TEST_CASE("planted fences are recovered exactly") {
  std::mt19937_64 rng(13);
  const char* tags[] = {"python", "javascript", "", "rust", "go", "c"};
  for (int d = 0; d < 200; ++d) {
    std::string text;
    std::vector<CodeBlock> planted;
    const int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      text += testing::random_words(rng, 1 + rng() % 8) + "\n";
      const std::string tag = tags[rng() % 6];
      std::string body;
      const int lines = static_cast<int>(rng() % 4);
      for (int l = 0; l < lines; ++l) body += (l ? "\n" : "") + testing::random_words(rng, 1 + rng() % 5);
      text += "```" + tag + "\n" + body + (lines ? "\n" : "") + "```\n";
      planted.push_back({tag.empty() ? "unknown" : tag, body});
    }
    text += testing::random_words(rng, 3);
    CHECK(extract_code_blocks(text) == planted);
  }
}

TEST_CASE("language tag normalization") {
  CHECK(normalize_language_tag("py") == "python");
  CHECK(normalize_language_tag("  C++ {.numberLines}") == "cpp");
  CHECK(normalize_language_tag("bash") == "shell");
  CHECK(normalize_language_tag("") == "unknown");
  CHECK(normalize_language_tag("Rust") == "rust");
}

TEST_CASE("static check: valid minimal programs pass, broken ones reject") {
  syntax::Parser parser;
  for (const auto& [lang, code] : kValid) {
    CAPTURE(lang);
    CHECK(static_check(code, lang, parser).status == CheckStatus::ok);
    CHECK(static_check(std::string(code) + "\n", lang, parser).status == CheckStatus::ok);
  }
  const StaticCheck bad = static_check("def f(:", "python", parser);
  CHECK(bad.status == CheckStatus::reject);
  CHECK(bad.error_nodes >= 1);
  CHECK(static_check("main = pure ()", "haskell", parser).status == CheckStatus::unsupported);
}

TEST_CASE("classify language") {
  CHECK(InstructionSample::make("a", "```python\nx = 1\n```", "```python\ny = 2\n```").language_label ==
        "python");
  CHECK(no_code(0).language_label == kNoProgrammingLanguage);
  CHECK(InstructionSample::make("b", "```\nx\n```", "").language_label == "unknown");
  // ties go to the smaller tag
  CHECK(InstructionSample::make("c", "```rust\nfn a(){}\n```", "```go\nfunc a(){}\n```").language_label ==
        "go");
}

TEST_CASE("majority vote matches a hand count") {
  std::mt19937_64 rng(3);
  const char* tags[] = {"python", "rust", "java", "go"};
  for (int i = 0; i < 300; ++i) {
    std::map<std::string, int> count;
    std::string answer;
    const int n = 1 + static_cast<int>(rng() % 7);
    for (int b = 0; b < n; ++b) {
      const std::string t = tags[rng() % 4];
      count[t] += 1;
      answer += "```" + t + "\ncode\n```\n";
    }
    std::string best;
    int best_n = -1;
    for (const auto& [t, c] : count) {
      if (c > best_n) {
        best = t;
        best_n = c;
      }
    }
    CHECK(InstructionSample::make("s", "q", answer).language_label == best);
  }
}

TEST_CASE("guess language for untagged text") {
  CHECK(guess_language("import os\ndef f(x):\n    return x\n") == "python");
  CHECK(guess_language("Plain words and nothing else.\nAnother sentence.") == kNoProgrammingLanguage);
  CHECK(guess_language("#include <stdio.h>\nint main(void) { return 0; }\n") != kNoProgrammingLanguage);
}

TEST_CASE("checklist score examples and errors") {
  const std::vector<double> s{3, 5};
  const std::vector<double> w{1, 1};
  CHECK(checklist_score(s, w) == 8.0);
  const std::vector<double> zero{0, 0};
  CHECK(checklist_score(s, zero) == 0.0);
  const std::vector<double> short_w{1};
  CHECK_THROWS_AS(checklist_score(s, short_w), ContractError);
  const std::vector<double> neg{1, -1};
  CHECK_THROWS_AS(checklist_score(s, neg), ContractError);
}

TEST_CASE("scoring a sample") {
  syntax::Parser parser;
  GatePolicy policy;
  ExternalScores ext{{"s1", {{"clarity", 7.0}, {"relevance", 42.0}}}};
  const auto good = InstructionSample::make("s1", "q", "```python\nx = 1\n```");
  const ChecklistScore sc = score_sample(good, policy, ext, parser);
  REQUIRE(sc.criteria.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(sc.criteria[i].first == kChecklistCriteria[i]);
  CHECK(sc.criteria[3].second == 10.0);  // code-exist
  CHECK(sc.criteria[4].second == 10.0);  // code-correctness
  CHECK(sc.criteria[6].second == 7.0);   // clarity
  CHECK(sc.criteria[1].second == 10.0);  // clamped
  CHECK(sc.total == doctest::Approx(37.0));
  const auto mixed = InstructionSample::make("s2", "```python\ndef f(:\n```", "```python\nx = 1\n```");
  CHECK(score_sample(mixed, policy, {}, parser).criteria[4].second == 5.0);
  const auto hs = InstructionSample::make("s3", "", "```haskell\nmain = pure ()\n```");
  CHECK(score_sample(hs, policy, {}, parser).criteria[4].second == 5.0);
  CHECK(score_sample(no_code(1), policy, {}, parser).total == 0.0);
}

TEST_CASE("gate: p = 0 drops every no-code sample") {
  std::vector<InstructionSample> samples;
  for (int i = 0; i < 50; ++i) samples.push_back(no_code(i));
  GatePolicy policy;
  policy.no_code_keep = 0.0;
  const auto r = gate_instruction_corpus(samples, policy, {});
  CHECK(r.kept.empty());
  REQUIRE(r.drops.size() == 50);
  CHECK(r.drops[0].reason == "no-code");
}

TEST_CASE("gate: p = q = 1 without thresholds is the identity") {
  std::vector<InstructionSample> samples{
      no_code(0), InstructionSample::make("k", "q", "```kotlin\nfun main() {}\n```"),
      InstructionSample::make("b", "q", "```python\ndef f(:\n```"),
      InstructionSample::make("g", "q", "```go\npackage main\n```")};
  GatePolicy policy;
  policy.no_code_keep = 1.0;
  policy.long_tail_keep = 1.0;
  policy.require_static = false;
  const auto r = gate_instruction_corpus(samples, policy, {}, 3);
  REQUIRE(r.kept.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(r.kept[i].sample.sample_id == samples[i].sample_id);
}

TEST_CASE("gate reasons, determinism and idempotence") {
  std::vector<InstructionSample> samples;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    switch (i % 5) {
      case 0: samples.push_back(no_code(i)); break;
      case 1: samples.push_back(InstructionSample::make("k" + std::to_string(i), "q", "```kotlin\nval x = 1\n```")); break;
      case 2: samples.push_back(InstructionSample::make("b" + std::to_string(i), "q", "```python\ndef f(:\n```")); break;
      default: samples.push_back(InstructionSample::make("ok" + std::to_string(i), "q", std::string("```python\nx = ") + std::to_string(i) + "\n```")); break;
    }
  }
  GatePolicy policy;
  policy.seed = 4;
  policy.min_total = 15.0;
  const ExternalScores ext;
  const auto a = gate_instruction_corpus(samples, policy, ext, 1);
  const auto b = gate_instruction_corpus(samples, policy, ext, 8);
  REQUIRE(a.kept.size() == b.kept.size());
  REQUIRE(a.drops.size() == b.drops.size());
  for (std::size_t i = 0; i < a.drops.size(); ++i) {
    CHECK(a.drops[i].sample_id == b.drops[i].sample_id);
    CHECK(a.drops[i].reason == b.drops[i].reason);
  }
  std::map<std::string, int> reasons;
  for (const auto& d : a.drops) reasons[d.reason] += 1;
  CHECK(reasons["static-check"] == 60);
  CHECK(reasons["no-code"] > 30);
  CHECK(reasons["long-tail"] > 10);
  std::vector<InstructionSample> kept;
  for (const auto& k : a.kept) kept.push_back(k.sample);
  // a second pass re-flips coins with the same keys, so survivors survive again
  const auto again = gate_instruction_corpus(kept, policy, ext, 2);
  CHECK(again.kept.size() == kept.size());

  GatePolicy strict = policy;
  strict.min_total = 25.0;
  const auto s = gate_instruction_corpus(samples, strict, ext);
  for (const auto& d : s.drops) {
    if (d.sample_id.rfind("ok", 0) == 0) CHECK(d.reason == "checklist-below-min");
  }
}

TEST_CASE("no-code keep rate lies within 3 sigma of p") {
  std::vector<InstructionSample> samples;
  for (int i = 0; i < 10000; ++i) samples.push_back(no_code(i));
  GatePolicy policy;
  policy.seed = 11;
  policy.no_code_keep = 0.1;
  const auto r = gate_instruction_corpus(samples, policy, {}, 4);
  const double frac = static_cast<double>(r.kept.size()) / 10000.0;
  CHECK(std::abs(frac - 0.1) <= 3 * std::sqrt(0.1 * 0.9 / 10000.0));
}

TEST_CASE("policy toml round trip and validation") {
  GatePolicy p;
  p.seed = 9;
  p.no_code_keep = 0.25;
  p.min_total = 40.0;
  p.mainstream = {"python", "go"};
  p.weights[2] = 2.5;
  CHECK(parse_gate_policy(gate_policy_toml(p)) == p);
  CHECK_THROWS_AS(parse_gate_policy("no_code_keep = 2.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_gate_policy("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_gate_policy("[weights]\nnot-a-criterion = 1.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_gate_policy("[weights]\nclarity = -1.0\n"), ConfigError);
}

TEST_CASE("external scores and sample json") {
  testing::TempDir dir("scores");
  write_file(dir.path() / "s.jsonl",
             "{\"sample_id\":\"a\",\"criterion\":\"clarity\",\"score\":3}\n"
             "{\"sample_id\":7,\"criterion\":\"comments\",\"score\":2.5}\n");
  const auto scores = load_external_scores(dir.path() / "s.jsonl");
  CHECK(scores.at("a").at("clarity") == 3.0);
  CHECK(scores.at("7").at("comments") == 2.5);
  write_file(dir.path() / "bad.jsonl", "{\"sample_id\":\"a\",\"criterion\":\"vibes\",\"score\":3}\n");
  CHECK_THROWS_AS(load_external_scores(dir.path() / "bad.jsonl"), FormatError);
  const auto s = InstructionSample::from_json(
      nlohmann::json{{"sample_id", "x"}, {"question", "```c\nint a;\n```"}, {"answer", "ok"}});
  CHECK(s.code_blocks.size() == 1);
  CHECK(s.language_label == "c");
  CHECK_THROWS_AS(InstructionSample::from_json(nlohmann::json{{"question", "q"}}), FormatError);
}

}
