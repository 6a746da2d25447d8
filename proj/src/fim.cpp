#include "codeprep/fim.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"
#include "codeprep/parallel.hpp"
#include "codeprep/sentinels.hpp"
#include "codeprep/utf8.hpp"

namespace codeprep {

std::string_view to_string(FimOrigin origin) {
  switch (origin) {
    case FimOrigin::plain: return "plain";
    case FimOrigin::random_span: return "random-span";
    case FimOrigin::ast_block: return "ast-block";
  }
  return "plain";
}

FimOrigin parse_fim_origin(std::string_view name) {
  if (name == "plain") return FimOrigin::plain;
  if (name == "random-span") return FimOrigin::random_span;
  if (name == "ast-block") return FimOrigin::ast_block;
  throw ConfigError(fmt::format("unknown FIM origin '{}'", name));
}

void SpanPolicy::validate() const {
  if (!(fim_rate >= 0.0 && fim_rate <= 1.0)) {
    throw ConfigError(fmt::format("fim_rate {} outside [0, 1]", fim_rate));
  }
  if (min_middle_chars < 1) throw ConfigError("min_middle_chars must be >= 1");
  if (!(max_middle_fraction > 0.0 && max_middle_fraction <= 1.0)) {
    throw ConfigError(fmt::format("max_middle_fraction {} outside (0, 1]", max_middle_fraction));
  }
}

FimSample FimSample::plain(std::string content, std::string doc_id) {
  FimSample s;
  s.prefix = std::move(content);
  s.source_doc_id = std::move(doc_id);
  return s;
}

bool same_rendering(const FimSample& a, const FimSample& b) {
  return a.is_fim() == b.is_fim() && a.prefix == b.prefix && a.middle == b.middle &&
         a.suffix == b.suffix;
}

bool fim_selected(const SpanPolicy& policy, std::string_view doc_id) {
  if (policy.fim_rate <= 0.0) return false;
  if (policy.fim_rate >= 1.0) return true;
  return keyed_unit(policy.seed, "fim-rate", doc_id) < policy.fim_rate;
}

namespace {

FimSample split_at(const SourceDocument& doc, std::size_t start, std::size_t end,
                   FimOrigin origin) {
  FimSample s;
  s.prefix = doc.content.substr(0, start);
  s.middle = doc.content.substr(start, end - start);
  s.suffix = doc.content.substr(end);
  s.origin = origin;
  s.source_doc_id = doc.doc_id;
  return s;
}

}  // namespace

FimSample random_span(const SourceDocument& doc, const SpanPolicy& policy) {
  const std::vector<std::size_t> offsets = utf8::boundaries(doc.content);
  const std::size_t n = offsets.size() - 1;
  const std::size_t lo = policy.min_middle_chars;
  const auto hi = static_cast<std::size_t>(
      std::floor(policy.max_middle_fraction * static_cast<double>(n)));
  if (n < lo || hi < lo) return FimSample::plain(doc.content, doc.doc_id);

  // A middle of length L has n - L + 1 placements.
  std::uint64_t total = 0;
  for (std::size_t len = lo; len <= hi; ++len) total += n - len + 1;
  KeyedRng rng(policy.seed, "fim-span", doc.doc_id);
  std::uint64_t pick = rng.below(total);
  std::size_t len = lo;
  while (pick >= n - len + 1) {
    pick -= n - len + 1;
    ++len;
  }
  const std::size_t start = static_cast<std::size_t>(pick);
  return split_at(doc, offsets[start], offsets[start + len], FimOrigin::random_span);
}

FimSample select_span_random(const SourceDocument& doc, const SpanPolicy& policy) {
  if (!fim_selected(policy, doc.doc_id)) return FimSample::plain(doc.content, doc.doc_id);
  return random_span(doc, policy);
}

std::vector<syntax::NodeSpan> ast_candidates(const syntax::SyntaxTree& tree,
                                             std::string_view language) {
  return tree.collect(syntax::block_kinds(language));
}

FimSample select_span_ast(const SourceDocument& doc, syntax::Parser& parser,
                          const SpanPolicy& policy) {
  const syntax::SyntaxTree tree = parser.parse(doc.language, doc.content);
  std::vector<syntax::NodeSpan> candidates;
  if (!tree.has_error()) candidates = ast_candidates(tree, doc.language);
  if (candidates.empty()) {
    FimSample s = random_span(doc, policy);
    s.fallback = true;
    return s;
  }
  KeyedRng rng(policy.seed, "fim-ast", doc.doc_id);
  const syntax::NodeSpan& node = candidates[rng.below(candidates.size())];
  return split_at(doc, node.start_byte, node.end_byte, FimOrigin::ast_block);
}

void check_no_sentinels(const FimSample& sample) {
  for (const std::string* field : {&sample.prefix, &sample.middle, &sample.suffix}) {
    const auto hits = find_sentinel_collisions(*field);
    if (!hits.empty()) {
      throw FormatError(fmt::format("sentinel-collision: {} at offset {} of document {}",
                                    surface(hits.front().kind), hits.front().offset,
                                    sample.source_doc_id));
    }
  }
}

std::string render_file_fim(const FimSample& sample) {
  check_no_sentinels(sample);
  const std::string_view eot = surface(Sentinel::endoftext);
  std::string out;
  if (!sample.is_fim()) {
    if (!sample.middle.empty() || !sample.suffix.empty()) {
      throw ContractError("plain sample must hold all content in its prefix");
    }
    out.reserve(sample.prefix.size() + eot.size());
    out.append(sample.prefix).append(eot);
    return out;
  }
  out.reserve(sample.prefix.size() + sample.middle.size() + sample.suffix.size() + 64);
  out.append(surface(Sentinel::fim_prefix)).append(sample.prefix);
  out.append(surface(Sentinel::fim_suffix)).append(sample.suffix);
  out.append(surface(Sentinel::fim_middle)).append(sample.middle);
  out.append(eot);
  return out;
}

FimSample parse_file_fim(std::string_view text) {
  const std::vector<SentinelHit> hits = find_sentinel_collisions(text);
  const auto describe = [](const SentinelHit& hit) {
    return fmt::format("{} at offset {}", surface(hit.kind), hit.offset);
  };
  const auto is_fim_token = [](Sentinel kind) {
    return kind == Sentinel::fim_prefix || kind == Sentinel::fim_suffix ||
           kind == Sentinel::fim_middle;
  };
  const bool any_fim = std::any_of(hits.begin(), hits.end(),
                                   [&](const SentinelHit& h) { return is_fim_token(h.kind); });
  const std::size_t eot_len = surface(Sentinel::endoftext).size();

  if (!any_fim) {
    if (hits.empty() || hits.back().kind != Sentinel::endoftext ||
        hits.back().offset + eot_len != text.size()) {
      throw FormatError("expected <|endoftext|> at end of sample");
    }
    if (hits.size() > 1) throw FormatError("unexpected " + describe(hits.front()));
    return FimSample::plain(std::string(text.substr(0, hits.back().offset)));
  }

  static constexpr Sentinel kExpected[] = {Sentinel::fim_prefix, Sentinel::fim_suffix,
                                           Sentinel::fim_middle, Sentinel::endoftext};
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= hits.size()) {
      throw FormatError(fmt::format("missing {} sentinel", surface(kExpected[i])));
    }
    if (hits[i].kind != kExpected[i]) {
      throw FormatError(fmt::format("missing {} sentinel (found {})", surface(kExpected[i]),
                                    describe(hits[i])));
    }
  }
  if (hits[0].offset != 0) {
    throw FormatError("expected <|fim_prefix|> at offset 0");
  }
  if (hits.size() > 4) throw FormatError("unexpected " + describe(hits[4]));
  if (hits[3].offset + eot_len != text.size()) {
    throw FormatError("trailing bytes after <|endoftext|>");
  }
  const auto between = [&](std::size_t a, std::size_t b) {
    const std::size_t begin = hits[a].offset + surface(hits[a].kind).size();
    return std::string(text.substr(begin, hits[b].offset - begin));
  };
  FimSample s;
  s.origin = FimOrigin::random_span;
  s.prefix = between(0, 1);
  s.suffix = between(1, 2);
  s.middle = between(2, 3);
  return s;
}

FimBuildResult build_fim_corpus(const std::vector<SourceDocument>& docs,
                                const FimOptions& options, unsigned workers) {
  options.policy.validate();
  struct Slot {
    std::optional<FimRecord> record;
    std::optional<FimDrop> drop;
  };
  std::vector<Slot> slots(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) {
    thread_local std::optional<syntax::Parser> parser;
    const SourceDocument& doc = docs[i];
    if (contains_sentinel(doc.content)) {
      slots[i].drop = FimDrop{doc.doc_id, "sentinel-collision"};
      return;
    }
    FimSample sample;
    if (!fim_selected(options.policy, doc.doc_id)) {
      sample = FimSample::plain(doc.content, doc.doc_id);
    } else if (options.ast_languages.count(doc.language) && syntax::supports(doc.language)) {
      if (!parser) parser.emplace();
      sample = select_span_ast(doc, *parser, options.policy);
    } else {
      sample = random_span(doc, options.policy);
    }
    std::string rendered = render_file_fim(sample);
    slots[i].record = FimRecord{doc.doc_id, std::move(sample), std::move(rendered)};
  });

  FimBuildResult result;
  for (auto& slot : slots) {
    if (slot.record) result.records.push_back(std::move(*slot.record));
    if (slot.drop) result.drops.push_back(std::move(*slot.drop));
  }
  const auto by_id = [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; };
  std::stable_sort(result.records.begin(), result.records.end(), by_id);
  std::stable_sort(result.drops.begin(), result.drops.end(), by_id);
  return result;
}

}  // namespace codeprep
