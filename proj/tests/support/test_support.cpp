#include "test_support.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "codeprep/sentinels.hpp"

namespace fs = std::filesystem;

namespace codeprep::testing {

fs::path data_dir() { return fs::path(CODEPREP_TEST_DATA_DIR); }

TempDir::TempDir(std::string_view tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          fmt::format("codeprep-{}-{:x}-{}", tag, rd(), counter.fetch_add(1));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

constexpr std::array<std::string_view, 20> kPieces{
    "a", "b", "z", " ", "  ", "\n", "\t", "{", "}", "(", ")", ";", "é", "日本", "λ",
    "<|", "|>", "<|fim", "endoftext", "x = 1"};

constexpr std::array<std::string_view, 40> kVocab{
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
    "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey", "xray",
    "yankee", "zulu", "list", "sum", "value", "index", "return", "number",
    "string", "array", "given", "function", "check", "closer", "threshold", "each"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::string random_text(std::mt19937_64& rng, std::size_t max_pieces) {
  std::string out;
  do {
    out.clear();
    const std::size_t pieces = pick(rng, max_pieces + 1);
    for (std::size_t i = 0; i < pieces; ++i) out += kPieces[pick(rng, kPieces.size())];
  } while (contains_sentinel(out));
  return out;
}

std::string random_words(std::mt19937_64& rng, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += kVocab[pick(rng, kVocab.size())];
  }
  return out;
}

std::string random_source(std::mt19937_64& rng, std::string_view language) {
  const std::size_t fns = 1 + pick(rng, 3);
  std::string out;
  for (std::size_t f = 0; f < fns; ++f) {
    const std::string name = std::string(kVocab[pick(rng, kVocab.size())]) + std::to_string(f);
    const int k = static_cast<int>(pick(rng, 100));
    if (language == "python") {
      out += fmt::format("def {}(x):\n    if x > {}:\n        x = x - 1\n    for i in range(x):\n        x += i\n    return x\n\n", name, k);
    } else if (language == "javascript") {
      out += fmt::format("function {}(x) {{\n  if (x > {}) {{\n    x = x - 1;\n  }}\n  for (let i = 0; i < x; i++) {{\n    x += i;\n  }}\n  return x;\n}}\n\n", name, k);
    } else if (language == "c") {
      out += fmt::format("int {}(int x) {{\n    if (x > {}) {{\n        x = x - 1;\n    }}\n    for (int i = 0; i < x; i++) {{\n        x += i;\n    }}\n    return x;\n}}\n\n", name, k);
    } else if (language == "go") {
      if (f == 0) out += "package main\n\n";
      out += fmt::format("func {}(x int) int {{\n\tif x > {} {{\n\t\tx = x - 1\n\t}}\n\tfor i := 0; i < x; i++ {{\n\t\tx += i\n\t}}\n\treturn x\n}}\n\n", name, k);
    } else if (language == "java") {
      out += fmt::format("class C{} {{\n    int {}(int x) {{\n        if (x > {}) {{\n            x = x - 1;\n        }}\n        for (int i = 0; i < x; i++) {{\n            x += i;\n        }}\n        return x;\n    }}\n}}\n\n", f, name, k);
    } else if (language == "rust") {
      out += fmt::format("fn {}(mut x: i64) -> i64 {{\n    if x > {} {{\n        x = x - 1;\n    }}\n    for i in 0..x {{\n        x += i;\n    }}\n    x\n}}\n\n", name, k);
    } else {
      out += random_words(rng, 12) + "\n";
    }
  }
  return out;
}

bool files_identical(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary);
  std::ifstream fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

std::vector<std::string> list_files(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace codeprep::testing
