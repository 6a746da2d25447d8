#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "codeprep/errors.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/repo_pack.hpp"
#include "codeprep/sentinels.hpp"
#include "test_support.hpp"

using namespace codeprep;

namespace {

std::string golden(const char* name) { return read_file(testing::data_dir() / "golden" / name); }

RepoBundle bundle_of(std::string repo, std::vector<std::pair<std::string, std::string>> files) {
  RepoBundle b{repo, {}};
  for (auto& [p, c] : files) b.files.push_back(SourceDocument::make(repo, p, c));
  return b;
}

RepoBundle random_bundle(std::mt19937_64& rng, const std::string& repo, std::size_t files) {
  RepoBundle b{repo, {}};
  for (std::size_t i = 0; i < files; ++i) {
    std::string content;
    const std::size_t lines = rng() % 12;
    for (std::size_t l = 0; l < lines; ++l) content += testing::random_words(rng, rng() % 10) + "\n";
    if (rng() % 3 == 0) content += testing::random_text(rng, 6);
    if (rng() % 4 == 0) content += std::string(rng() % 3, '\n');
    b.files.push_back(SourceDocument::make(repo, "dir" + std::to_string(i % 3) + "/f" + std::to_string(i) + ".txt",
                                           content));
  }
  return b;
}

// Independent topological sort: repeatedly take the smallest path whose
// dependencies have all been emitted.
std::vector<std::string> reference_toposort(const std::map<std::string, std::set<std::string>>& deps) {
  std::vector<std::string> out;
  std::set<std::string> emitted;
  while (out.size() < deps.size()) {
    for (const auto& [path, ds] : deps) {
      if (emitted.count(path)) continue;
      bool ready = true;
      for (const auto& d : ds) ready = ready && emitted.count(d);
      if (ready) {
        out.push_back(path);
        emitted.insert(path);
        break;
      }
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("repo_pack") {

TEST_CASE("two-file repo matches the golden rendering") {
  const auto seqs = pack_repo(bundle_of("r", {{"a.txt", "A"}, {"b.txt", "B"}}), 1000,
                              TokenBudgeter::whitespace_word());
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].rendered ==
        "<|repo_name|>r\n<|file_sep|>a.txt\nA\n<|file_sep|>b.txt\nB<|endoftext|>");
  CHECK(seqs[0].rendered == golden("repo_two_files.txt"));
  CHECK(seqs[0].included_paths == std::vector<std::string>{"a.txt", "b.txt"});
  CHECK_FALSE(seqs[0].fim_applied);
}

TEST_CASE("single empty file") {
  const auto seqs = pack_repo(bundle_of("r", {{"e.txt", ""}}), 100, TokenBudgeter::whitespace_word());
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].rendered == golden("repo_single_empty.txt"));
}

TEST_CASE("repo-level FIM renderings match golden files") {
  FimSample b;
  b.prefix = "a";
  b.middle = "b";
  b.suffix = "c";
  b.origin = FimOrigin::random_span;
  CHECK(render_repo_sequence("r", {{"m.txt", "abc"}}, &b) == golden("repo_fim_one_file.txt"));
  FimSample empty_mid;
  empty_mid.prefix = "a";
  empty_mid.suffix = "c";
  empty_mid.origin = FimOrigin::random_span;
  CHECK(render_repo_sequence("r", {{"m.txt", "ac"}}, &empty_mid) ==
        golden("repo_fim_empty_middle.txt"));
  FimSample three;
  three.prefix = "from lib.b import *\nprint(";
  three.middle = "a()";
  three.suffix = ")\n";
  three.origin = FimOrigin::ast_block;
  CHECK(render_repo_sequence("demo",
                             {{"lib/a.py", "def a():\n    return 1\n"},
                              {"lib/b.py", "from lib.a import a\n"},
                              {"main.py", three.content()}},
                             &three) == golden("repo_fim_three_files.txt"));
}

TEST_CASE("render_repo_fim picks a span of the target and renders it last") {
  const RepoBundle bundle = bundle_of("r", {{"m.txt", "abc"}});
  SpanPolicy policy;
  policy.fim_rate = 1.0;
  bool found_b = false;
  for (std::uint64_t seed = 0; seed < 64 && !found_b; ++seed) {
    policy.seed = seed;
    const PackedSequence seq =
        render_repo_fim(bundle, "m.txt", policy, TokenBudgeter::whitespace_word(), 100);
    CHECK(seq.fim_applied);
    const auto parsed = parse_repo_sequence(seq.rendered);
    REQUIRE(parsed.last_fim);
    CHECK(parsed.files[0].content == "abc");
    if (parsed.last_fim->middle == "b") {
      CHECK(seq.rendered == golden("repo_fim_one_file.txt"));
      found_b = true;
    }
  }
  CHECK(found_b);
}

TEST_CASE("render_repo_fim contract errors") {
  const RepoBundle bundle = bundle_of("r", {{"a.txt", "A"}, {"b.txt", "BBBB"}});
  SpanPolicy policy;
  policy.fim_rate = 1.0;
  CHECK_THROWS_AS(render_repo_fim(bundle, "a.txt", policy, TokenBudgeter::whitespace_word(), 100),
                  ContractError);
  CHECK_THROWS_AS(render_repo_fim(bundle, "zzz", policy, TokenBudgeter::whitespace_word(), 100),
                  ContractError);
  const auto seq = render_repo_fim(bundle, "b.txt", policy, TokenBudgeter::whitespace_word(), 100);
  CHECK(seq.rendered.rfind("<|file_sep|>b.txt\n<|fim_prefix|>", std::string::npos) !=
        std::string::npos);
  policy.fim_rate = 0.0;
  const auto plain = render_repo_fim(bundle, "b.txt", policy, TokenBudgeter::whitespace_word(), 100);
  CHECK_FALSE(plain.fim_applied);
  CHECK(plain.rendered == "<|repo_name|>r\n<|file_sep|>a.txt\nA\n<|file_sep|>b.txt\nBBBB<|endoftext|>");
}

TEST_CASE("sentinels and newlines in names are rejected") {
  CHECK_THROWS_AS(render_repo_sequence("r", {{"a\nb", "x"}}), FormatError);
  CHECK_THROWS_AS(render_repo_sequence("r<|file_sep|>", {{"a", "x"}}), FormatError);
  CHECK_THROWS_AS(render_repo_sequence("r", {{"a", "<|endoftext|>"}, {"b", "y"}}), FormatError);
  CHECK_THROWS_AS(render_repo_sequence("r", {}), ContractError);
  CHECK_THROWS_AS(pack_repo(RepoBundle{"r", {}}, 100, TokenBudgeter::whitespace_word()),
                  ContractError);
  CHECK_THROWS_AS(pack_repo(bundle_of("r", {{"a", "x"}}), 1, TokenBudgeter::byte_quarter()),
                  ContractError);
}

TEST_CASE("parse rejects malformed sequences") {
  CHECK_THROWS_AS(parse_repo_sequence("r\n<|file_sep|>a\nx<|endoftext|>"), FormatError);
  CHECK_THROWS_AS(parse_repo_sequence("<|repo_name|>r\nx<|file_sep|>a\nx<|endoftext|>"), FormatError);
  CHECK_THROWS_AS(parse_repo_sequence("<|repo_name|>r\n<|file_sep|>a\nx<|file_sep|>b\ny<|endoftext|>"),
                  FormatError);
  CHECK_THROWS_AS(parse_repo_sequence("<|repo_name|>r\n<|file_sep|>a\ny"), FormatError);
}

TEST_CASE("budget sweep: every sequence fits and coverage is exact") {
  std::mt19937_64 rng(44);
  const RepoBundle bundle = random_bundle(rng, "synthetic", 100);
  for (const auto& budgeter : {TokenBudgeter::whitespace_word(), TokenBudgeter::byte_quarter()}) {
    for (std::size_t budget : {64, 128, 512, 4096}) {
      const auto seqs = pack_repo(bundle, budget, budgeter);
      std::vector<RepoFile> recovered;
      std::set<std::string> truncated;
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        CHECK(seqs[i].sequence_idx == i);
        CHECK(budgeter.count(seqs[i].rendered) <= budget);
        CHECK(seqs[i].approx_tokens == budgeter.count(seqs[i].rendered));
        const auto parsed = parse_repo_sequence(seqs[i].rendered);
        CHECK(parsed.repo_name == "synthetic");
        for (auto& f : parsed.files) recovered.push_back(f);
        for (auto& t : seqs[i].truncated_paths) truncated.insert(t);
      }
      REQUIRE(recovered.size() == bundle.files.size());
      for (std::size_t i = 0; i < recovered.size(); ++i) {
        const auto& original = bundle.files[i];
        CHECK(recovered[i].path == original.path);
        if (truncated.count(original.path)) {
          CHECK(original.content.rfind(recovered[i].content, 0) == 0);
          CHECK((recovered[i].content.empty() || recovered[i].content.back() == '\n' ||
                 recovered[i].content == original.content));
        } else {
          CHECK(recovered[i].content == original.content);
        }
      }
    }
  }
}

TEST_CASE("random repos with FIM targets reassemble every file") {
  std::mt19937_64 rng(12);
  PackOptions options;
  options.budget = 256;
  options.fim_last = true;
  options.policy.fim_rate = 1.0;
  options.policy.seed = 5;
  std::vector<SourceDocument> docs;
  for (int r = 0; r < 20; ++r) {
    const auto b = random_bundle(rng, "repo" + std::to_string(r), 1 + rng() % 15);
    docs.insert(docs.end(), b.files.begin(), b.files.end());
  }
  const auto a = pack_corpus(docs, options, 1);
  const auto b = pack_corpus(docs, options, 4);
  REQUIRE(a.sequences.size() == b.sequences.size());
  std::map<std::pair<std::string, std::string>, std::string> got;
  std::set<std::string> truncated;
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    CHECK(a.sequences[i].rendered == b.sequences[i].rendered);
    CHECK(a.sequences[i].approx_tokens <= options.budget);
    const auto parsed = parse_repo_sequence(a.sequences[i].rendered);
    CHECK(parsed.last_fim.has_value() == a.sequences[i].fim_applied);
    for (const auto& f : parsed.files) got[{parsed.repo_name, f.path}] = f.content;
    for (const auto& t : a.sequences[i].truncated_paths) truncated.insert(a.sequences[i].repo_name + "/" + t);
  }
  CHECK(got.size() == docs.size());
  for (const auto& d : docs) {
    if (truncated.count(d.repo + "/" + d.path)) continue;
    CHECK(got[{d.repo, d.path}] == d.content);
  }
}

TEST_CASE("fim overhead bound holds for the built-in budgeters") {
  std::mt19937_64 rng(3);
  for (const auto& budgeter : {TokenBudgeter::whitespace_word(), TokenBudgeter::byte_quarter()}) {
    for (int i = 0; i < 2000; ++i) {
      const std::string content = testing::random_text(rng, 20);
      const auto doc = SourceDocument::make("r", "p", content);
      SpanPolicy p;
      p.fim_rate = 1.0;
      p.seed = static_cast<std::uint64_t>(i);
      const FimSample s = random_span(doc, p);
      const std::size_t plain = budgeter.count(render_file_fim(FimSample::plain(content)));
      const std::size_t fim = budgeter.count(render_file_fim(s));
      CHECK(fim <= plain + budgeter.fim_overhead_bound());
    }
  }
}

TEST_CASE("dependency-first resolves includes and rust module paths") {
  const auto c = order_files(bundle_of("r", {{"src/a.c", "#include \"ring.h\"\nint a;\n"},
                                             {"include/ring.h", "int ring;\n"}}),
                             FileOrder::dependency_first);
  CHECK(c.files[0].path == "include/ring.h");
  const auto rs = order_files(bundle_of("r", {{"src/lib.rs", "use crate::parse::Token;\n"},
                                              {"src/parse.rs", "pub struct Token;\n"}}),
                              FileOrder::dependency_first);
  CHECK(rs.files[0].path == "src/parse.rs");
}

TEST_CASE("order_files examples") {
  const auto lex = order_files(bundle_of("r", {{"b", "1"}, {"a", "2"}}), FileOrder::path_lex);
  CHECK(lex.files[0].path == "a");
  const auto dep = order_files(bundle_of("r", {{"a.py", "from b import x\n"}, {"b.py", "x = 1\n"}}),
                               FileOrder::dependency_first);
  CHECK(dep.files[0].path == "b.py");
  CHECK(dep.files[1].path == "a.py");
  const auto cyc = order_files(bundle_of("r", {{"b.py", "import a\n"}, {"a.py", "import b\n"}}),
                               FileOrder::dependency_first);
  CHECK(cyc.files[0].path == "a.py");
  CHECK(parse_file_order("dependency-first") == FileOrder::dependency_first);
  CHECK_THROWS_AS(parse_file_order("random"), ConfigError);
}

TEST_CASE("reference extraction across languages") {
  CHECK(extract_references("import os.path\n") == std::vector<std::string>{"os.path", "os/path"});
  CHECK(extract_references("from .util import helper\n") ==
        std::vector<std::string>{"helper", "util"});
  CHECK(extract_references("#include \"ring.h\"\n") == std::vector<std::string>{"ring.h", "ring/h"});
  CHECK(extract_references("use crate::parse::Token;\n") ==
        std::vector<std::string>{"crate/parse/Token"});
  CHECK(extract_references("const q = require('./queue');\n") ==
        std::vector<std::string>{"q", "queue"});
  CHECK(extract_references("x = 1\nprint(import_thing)\n").empty());
}

TEST_CASE("dependency-first matches an independent toposort on random DAGs") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("m" + std::to_string(i));
    std::vector<std::string> topo = names;
    std::shuffle(topo.begin(), topo.end(), rng);
    std::map<std::string, std::set<std::string>> deps;
    RepoBundle b{"r", {}};
    for (std::size_t i = 0; i < n; ++i) {
      std::string content = "x = 1\n";
      auto& ds = deps[topo[i] + ".py"];
      for (std::size_t j = 0; j < i; ++j) {
        if (rng() % 3 == 0) {
          content = "import " + topo[j] + "\n" + content;
          ds.insert(topo[j] + ".py");
        }
      }
      b.files.push_back(SourceDocument::make("r", topo[i] + ".py", content));
    }
    const auto ordered = order_files(b, FileOrder::dependency_first);
    std::vector<std::string> got;
    for (const auto& f : ordered.files) got.push_back(f.path);
    CHECK(got == reference_toposort(deps));
  }
}

TEST_CASE("pack_corpus drops colliding files and emits index records") {
  std::vector<SourceDocument> docs{SourceDocument::make("r", "a.txt", "hello"),
                                   SourceDocument::make("r", "b.txt", "<|fim_pad|>"),
                                   SourceDocument::make("s", "c.txt", "world")};
  PackOptions options;
  options.budget = 100;
  const auto result = pack_corpus(docs, options, 2);
  REQUIRE(result.drops.size() == 1);
  CHECK(result.drops[0].reason == "sentinel-collision");
  REQUIRE(result.sequences.size() == 2);
  const auto rec = pack_index_record(result.sequences[0]);
  CHECK(rec["repo"] == "r");
  CHECK(rec["sequence_idx"] == 0);
  CHECK(rec["paths"] == nlohmann::ordered_json::array({"a.txt"}));
  CHECK(rec["fim_applied"] == false);
  CHECK(rec.contains("approx_tokens"));
}

}
