#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codeprep/document.hpp"
#include "codeprep/syntax.hpp"

namespace codeprep {

enum class FimOrigin { plain, random_span, ast_block };

std::string_view to_string(FimOrigin origin);
// "plain", "random-span" or "ast-block"; throws ConfigError otherwise.
FimOrigin parse_fim_origin(std::string_view name);

struct SpanPolicy {
  double fim_rate = 0.5;
  std::size_t min_middle_chars = 1;
  double max_middle_fraction = 0.5;
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct FimSample {
  std::string prefix;
  std::string middle;
  std::string suffix;
  FimOrigin origin = FimOrigin::plain;
  std::string source_doc_id;
  // Set when AST selection fell back to a random span.
  bool fallback = false;

  bool is_fim() const { return origin != FimOrigin::plain; }
  std::string content() const { return prefix + middle + suffix; }

  static FimSample plain(std::string content, std::string doc_id = {});
};

// Equal when the rendered forms are equal: spans plus FIM-ness. The origin
// kind and fallback flag are not part of the text format.
bool same_rendering(const FimSample& a, const FimSample& b);

// Seeded coin for whether a document becomes a FIM sample.
bool fim_selected(const SpanPolicy& policy, std::string_view doc_id);

// Uniform over all (start, end) character offsets whose middle length is in
// [min_middle_chars, floor(max_middle_fraction * chars)]. Plain when no such
// split exists. Ignores fim_rate.
FimSample random_span(const SourceDocument& doc, const SpanPolicy& policy);

// fim_rate coin, then random_span.
FimSample select_span_random(const SourceDocument& doc, const SpanPolicy& policy);

// Middle is the exact source of one block node picked uniformly from every
// nesting level. Falls back to random_span when the parse has errors or no
// candidate exists. Throws UnsupportedLanguage.
FimSample select_span_ast(const SourceDocument& doc, syntax::Parser& parser,
                          const SpanPolicy& policy);

// Candidate middles for select_span_ast, in tree pre-order.
std::vector<syntax::NodeSpan> ast_candidates(const syntax::SyntaxTree& tree,
                                             std::string_view language);

// <|fim_prefix|>{pre}<|fim_suffix|>{suf}<|fim_middle|>{mid}<|endoftext|>, or
// {prefix}<|endoftext|> for plain samples. Throws FormatError on a sentinel
// collision.
std::string render_file_fim(const FimSample& sample);

// Inverse of render_file_fim. A parsed FIM sample reports random_span.
// Throws FormatError naming the first violated expectation.
FimSample parse_file_fim(std::string_view text);

// Throws FormatError if any field holds a sentinel surface.
void check_no_sentinels(const FimSample& sample);

struct FimOptions {
  SpanPolicy policy;
  std::set<std::string> ast_languages;  // AST mode for these, random otherwise
};

struct FimRecord {
  std::string doc_id;
  FimSample sample;
  std::string rendered;
};

struct FimDrop {
  std::string doc_id;
  std::string reason;
};

struct FimBuildResult {
  std::vector<FimRecord> records;  // sorted by doc_id
  std::vector<FimDrop> drops;
};

// Builds one record per document. Documents holding sentinel surfaces are
// dropped with reason "sentinel-collision".
FimBuildResult build_fim_corpus(const std::vector<SourceDocument>& docs,
                                const FimOptions& options, unsigned workers);

}  // namespace codeprep
