#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codeprep/document.hpp"

namespace codeprep {

// Lowercased maximal runs of Unicode letters, decimal digits and '_'.
// Everything else (including malformed UTF-8) separates words.
std::vector<std::string> normalize_words(std::string_view text);

struct TestDocument {
  std::string benchmark;
  std::string text;
};

// Fingerprints of every n-word window of the benchmark documents. Each
// fingerprint keeps the exact window text so hash hits can be verified.
class NGramIndex {
 public:
  struct Gram {
    std::string words;  // window words joined by ' '
    std::vector<std::string> benchmarks;  // sorted, unique
  };

  explicit NGramIndex(std::size_t n = 10);

  std::size_t n() const { return n_; }
  // Number of distinct windows.
  std::size_t size() const { return grams_; }
  bool empty() const { return grams_ == 0; }

  void add(std::string_view benchmark, std::string_view text);

  // Grams sharing a fingerprint; empty when absent.
  std::span<const Gram> lookup(std::uint64_t fingerprint) const;

 private:
  std::size_t n_;
  std::size_t grams_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Gram>> table_;
};

// Fingerprinting shared by the index and the scanner: a polynomial rolling
// hash over per-word 64-bit hashes.
std::uint64_t word_hash(std::string_view word);
std::vector<std::uint64_t> window_fingerprints(std::span<const std::string> words,
                                               std::size_t n);

NGramIndex build_index(std::span<const TestDocument> test_docs, std::size_t n = 10);
NGramIndex build_index(std::span<const std::string> test_docs, std::size_t n = 10,
                       std::string_view benchmark = "test");

struct NGramMatch {
  std::string benchmark;
  std::size_t offset = 0;  // word offset of the window in the scanned doc

  bool operator==(const NGramMatch&) const = default;
};

struct DecontamReport {
  std::string doc_id;
  std::vector<NGramMatch> matches;

  bool flagged() const { return !matches.empty(); }
};

DecontamReport scan_text(std::string_view text, const NGramIndex& index);
DecontamReport scan(const SourceDocument& doc, const NGramIndex& index);

struct DecontamResult {
  std::vector<SourceDocument> clean;      // input order
  std::vector<DecontamReport> removals;   // one per removed document
};

DecontamResult filter_corpus(std::vector<SourceDocument> docs, const NGramIndex& index,
                             unsigned workers = 1);

// A file, or every file of a directory in name order. *.jsonl contributes one
// document per line's "text" field; any other file is one document. The
// benchmark name is the file stem.
std::vector<TestDocument> load_test_sets(const std::filesystem::path& path);

}  // namespace codeprep
