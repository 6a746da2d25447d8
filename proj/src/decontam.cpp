#include "codeprep/decontam.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>
#include <unicode/uchar.h>

#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"
#include "codeprep/manifest.hpp"
#include "codeprep/parallel.hpp"
#include "codeprep/utf8.hpp"

namespace fs = std::filesystem;

namespace codeprep {

namespace {

constexpr std::uint64_t kRollBase = 0x9e3779b97f4a7c15ULL | 1;

bool is_word_char(char32_t cp) {
  return cp == '_' || (cp != utf8::kInvalid && u_isalnum(static_cast<UChar32>(cp)));
}

std::string join_window(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const utf8::Decoded d = utf8::decode(text, pos);
    pos += d.length;
    if (is_word_char(d.code_point)) {
      utf8::append(current, static_cast<char32_t>(u_tolower(static_cast<UChar32>(d.code_point))));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::uint64_t word_hash(std::string_view word) { return mix64(fnv1a64(word)); }

std::vector<std::uint64_t> window_fingerprints(std::span<const std::string> words,
                                               std::size_t n) {
  std::vector<std::uint64_t> out;
  if (n == 0 || words.size() < n) return out;
  out.reserve(words.size() - n + 1);
  std::vector<std::uint64_t> hashes(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) hashes[i] = word_hash(words[i]);

  std::uint64_t top = 1;  // kRollBase^(n-1), arithmetic mod 2^64
  for (std::size_t i = 1; i < n; ++i) top *= kRollBase;
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < n; ++i) h = h * kRollBase + hashes[i];
  out.push_back(h);
  for (std::size_t i = n; i < words.size(); ++i) {
    h = (h - hashes[i - n] * top) * kRollBase + hashes[i];
    out.push_back(h);
  }
  return out;
}

NGramIndex::NGramIndex(std::size_t n) : n_(n) {
  if (n == 0) throw ContractError("n-gram length must be >= 1");
}

void NGramIndex::add(std::string_view benchmark, std::string_view text) {
  const std::vector<std::string> words = normalize_words(text);
  const std::vector<std::uint64_t> fps = window_fingerprints(words, n_);
  for (std::size_t i = 0; i < fps.size(); ++i) {
    std::string gram = join_window(std::span(words).subspan(i, n_));
    auto& bucket = table_[fps[i]];
    auto it = std::find_if(bucket.begin(), bucket.end(),
                           [&](const Gram& g) { return g.words == gram; });
    if (it == bucket.end()) {
      bucket.push_back({std::move(gram), {std::string(benchmark)}});
      ++grams_;
      continue;
    }
    auto pos = std::lower_bound(it->benchmarks.begin(), it->benchmarks.end(), benchmark);
    if (pos == it->benchmarks.end() || *pos != benchmark) {
      it->benchmarks.insert(pos, std::string(benchmark));
    }
  }
}

std::span<const NGramIndex::Gram> NGramIndex::lookup(std::uint64_t fingerprint) const {
  const auto it = table_.find(fingerprint);
  if (it == table_.end()) return {};
  return it->second;
}

NGramIndex build_index(std::span<const TestDocument> test_docs, std::size_t n) {
  NGramIndex index(n);
  for (const auto& doc : test_docs) index.add(doc.benchmark, doc.text);
  return index;
}

NGramIndex build_index(std::span<const std::string> test_docs, std::size_t n,
                       std::string_view benchmark) {
  NGramIndex index(n);
  for (const auto& doc : test_docs) index.add(benchmark, doc);
  return index;
}

DecontamReport scan_text(std::string_view text, const NGramIndex& index) {
  DecontamReport report;
  if (index.empty()) return report;
  const std::vector<std::string> words = normalize_words(text);
  const std::vector<std::uint64_t> fps = window_fingerprints(words, index.n());
  for (std::size_t i = 0; i < fps.size(); ++i) {
    const auto grams = index.lookup(fps[i]);
    if (grams.empty()) continue;
    // verify: a hash hit alone never flags a document
    const std::string window = join_window(std::span(words).subspan(i, index.n()));
    for (const auto& g : grams) {
      if (g.words != window) continue;
      for (const auto& b : g.benchmarks) report.matches.push_back({b, i});
    }
  }
  return report;
}

DecontamReport scan(const SourceDocument& doc, const NGramIndex& index) {
  DecontamReport report = scan_text(doc.content, index);
  report.doc_id = doc.doc_id;
  return report;
}

DecontamResult filter_corpus(std::vector<SourceDocument> docs, const NGramIndex& index,
                             unsigned workers) {
  std::vector<DecontamReport> reports(docs.size());
  parallel_for(docs.size(), workers,
               [&](std::size_t i) { reports[i] = scan(docs[i], index); });
  DecontamResult result;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (reports[i].flagged()) {
      result.removals.push_back(std::move(reports[i]));
    } else {
      result.clean.push_back(std::move(docs[i]));
    }
  }
  return result;
}

std::vector<TestDocument> load_test_sets(const fs::path& path) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path, ec)) {
    files.push_back(path);
  } else {
    throw IoError("test set path not found: " + path.string());
  }

  std::vector<TestDocument> docs;
  for (const auto& file : files) {
    const std::string benchmark = file.stem().string();
    if (file.extension() == ".jsonl") {
      for (const auto& record : read_jsonl(file)) {
        if (!record.contains("text") || !record["text"].is_string()) {
          throw IoError(file.string() + ": every record needs a string \"text\" field");
        }
        docs.push_back({benchmark, record["text"].get<std::string>()});
      }
    } else {
      docs.push_back({benchmark, read_file(file)});
    }
  }
  return docs;
}

}  // namespace codeprep
