#include "codeprep/needle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <type_traits>

#include <fmt/format.h>

#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"
#include "codeprep/parallel.hpp"
#include "codeprep/sentinels.hpp"
#include "codeprep/syntax.hpp"

namespace codeprep {

NeedleCorpus NeedleCorpus::from_documents(const std::vector<SourceDocument>& docs,
                                          std::string repo_name) {
  NeedleCorpus corpus;
  corpus.repo_name = std::move(repo_name);
  bool multi = false;
  for (const auto& d : docs) multi = multi || d.repo != docs.front().repo;
  for (const auto& d : docs) {
    corpus.files.push_back({multi ? d.repo + "/" + d.path : d.path, d.content});
  }
  return corpus;
}

NeedleCorpus NeedleCorpus::from_sequences(const std::vector<PackedSequence>& sequences,
                                          std::string repo_name) {
  NeedleCorpus corpus;
  corpus.repo_name = std::move(repo_name);
  for (const auto& seq : sequences) {
    for (auto& f : parse_repo_sequence(seq.rendered).files) {
      corpus.files.push_back({seq.repo_name + "/" + f.path, std::move(f.content)});
    }
  }
  return corpus;
}

namespace {

std::string header_text(std::string_view repo) {
  return fmt::format("{}{}\n", surface(Sentinel::repo_name), repo);
}

std::string unit_text(std::string_view path, std::string_view content) {
  return fmt::format("{}{}\n{}\n", surface(Sentinel::file_sep), path, content);
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

void validate_spec(const NeedleSpec& spec) {
  if (spec.needle_source.empty()) throw ContractError("needle source is empty");
  if (contains_sentinel(spec.needle_source) || contains_sentinel(spec.needle_path)) {
    throw ContractError("needle holds a sentinel surface");
  }
  if (spec.needle_path.find('\n') != std::string::npos) {
    throw ContractError("needle path holds a newline");
  }
  if (!(spec.depth_fraction >= 0.0 && spec.depth_fraction <= 1.0)) {
    throw ContractError(fmt::format("depth {} outside [0, 1]", spec.depth_fraction));
  }
  if (spec.target_length > kMaxContextBudget) {
    throw ContractError(fmt::format("length {} exceeds the {} token ceiling", spec.target_length,
                                    kMaxContextBudget));
  }
  if (syntax::supports(spec.language)) {
    syntax::Parser parser;
    if (parser.parse(spec.language, spec.needle_source).has_error()) {
      throw ContractError(fmt::format("needle does not parse as {}", spec.language));
    }
  }
}

}  // namespace

NeedleInstance generate_instance(const NeedleCorpus& corpus, const NeedleSpec& spec,
                                 const TokenBudgeter& budgeter) {
  validate_spec(spec);
  std::vector<const RepoFile*> usable;
  for (const auto& f : corpus.files) {
    if (f.path == spec.needle_path || f.path.find('\n') != std::string::npos) continue;
    if (contains_sentinel(f.content) || contains_sentinel(f.path)) continue;
    if (f.content.find(spec.needle_source) != std::string::npos) continue;
    usable.push_back(&f);
  }
  if (usable.empty()) throw ContractError("needle corpus has no usable files");

  const std::string header = header_text(corpus.repo_name);
  const std::string needle_unit = unit_text(spec.needle_path, spec.needle_source);
  const std::size_t header_tokens = budgeter.count(header);
  const std::size_t needle_tokens = budgeter.count(needle_unit);
  if (header_tokens + needle_tokens > spec.target_length) {
    throw ContractError(fmt::format("target length {} cannot hold the needle", spec.target_length));
  }
  const std::size_t fill = spec.target_length - header_tokens - needle_tokens;

  // haystack: whole files from a seeded start, the last one cut to fit
  KeyedRng rng(spec.seed, "needle-start", std::to_string(spec.target_length));
  const std::size_t start = rng.below(usable.size());
  std::vector<std::string> units;
  std::vector<std::size_t> unit_tokens;
  std::size_t used = 0;
  for (std::size_t k = 0; k < usable.size() && used < fill; ++k) {
    const RepoFile& f = *usable[(start + k) % usable.size()];
    std::string unit = unit_text(f.path, f.content);
    std::size_t tokens = budgeter.count(unit);
    if (used + tokens > fill) {
      std::vector<std::size_t> ends;
      for (std::size_t i = 0; i < f.content.size(); ++i) {
        if (f.content[i] == '\n') ends.push_back(i + 1);
      }
      std::size_t lo = 0;
      std::size_t hi = ends.size() + 1;
      const auto cut = [&](std::size_t lines) {
        return unit_text(f.path, f.content.substr(0, lines == 0 ? 0 : ends[lines - 1]));
      };
      while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (used + budgeter.count(cut(mid)) <= fill ? lo : hi) = mid;
      }
      if (lo == 0) break;
      unit = cut(lo);
      tokens = budgeter.count(unit);
      units.push_back(std::move(unit));
      unit_tokens.push_back(tokens);
      used += tokens;
      break;
    }
    units.push_back(std::move(unit));
    unit_tokens.push_back(tokens);
    used += tokens;
  }
  if (units.empty() || used * 20 < fill * 19) {
    throw ContractError(fmt::format("corpus supplies {} of the {} haystack tokens needed", used,
                                    fill));
  }

  // boundary nearest depth * haystack, earlier boundary on ties
  const double want = spec.depth_fraction * static_cast<double>(used);
  std::size_t best = 0;
  double best_gap = want;
  std::size_t before = 0;
  for (std::size_t k = 1; k <= units.size(); ++k) {
    before += unit_tokens[k - 1];
    const double gap = std::abs(static_cast<double>(before) - want);
    if (gap < best_gap) {
      best = k;
      best_gap = gap;
    }
  }
  std::size_t tokens_before = 0;
  for (std::size_t k = 0; k < best; ++k) tokens_before += unit_tokens[k];

  NeedleInstance inst;
  inst.context = header;
  for (std::size_t k = 0; k <= units.size(); ++k) {
    if (k == best) inst.context += needle_unit;
    if (k < units.size()) inst.context += units[k];
  }
  if (count_occurrences(inst.context, spec.needle_source) != 1) {
    throw Error("needle does not occur exactly once in the generated context");
  }
  inst.prompt_suffix = spec.prompt_suffix;
  inst.expected = spec.needle_source;
  inst.depth_fraction = spec.depth_fraction;
  inst.target_length = spec.target_length;
  inst.actual_depth = static_cast<double>(tokens_before) / static_cast<double>(used);
  inst.actual_length = budgeter.count(inst.context);
  inst.needle_tokens = needle_tokens;
  inst.max_unit_tokens = *std::max_element(unit_tokens.begin(), unit_tokens.end());
  inst.haystack_tokens = used;
  inst.instance_id = fmt::format(
      "needle-{}",
      hex64(keyed_hash(spec.seed, "needle-id",
                       fmt::format("{}|{}|{}|{}", spec.depth_fraction, spec.target_length,
                                   hex64(fnv1a64(spec.needle_source)), corpus.repo_name))));
  return inst;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool space = false;
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

int score_response(const NeedleInstance& instance, std::string_view response) {
  const std::string want = normalize_whitespace(instance.expected);
  const std::string got = normalize_whitespace(response);
  if (got.empty() || want.empty()) return 0;
  return got.find(want) != std::string::npos ? 1 : 0;
}

std::vector<NeedleInstance> generate_grid(const NeedleCorpus& corpus,
                                          const std::vector<double>& depths,
                                          const std::vector<std::size_t>& lengths,
                                          const NeedleSpec& base, const TokenBudgeter& budgeter,
                                          unsigned workers) {
  for (const std::size_t length : lengths) {
    if (length > kMaxContextBudget) {
      throw ContractError(
          fmt::format("length {} exceeds the {} token ceiling", length, kMaxContextBudget));
    }
  }
  std::vector<NeedleInstance> out(depths.size() * lengths.size());
  parallel_for(out.size(), workers, [&](std::size_t i) {
    NeedleSpec spec = base;
    spec.depth_fraction = depths[i % depths.size()];
    spec.target_length = lengths[i / depths.size()];
    out[i] = generate_instance(corpus, spec, budgeter);
  });
  return out;
}

std::vector<NeedleResult> score_grid(const std::vector<NeedleInstance>& instances,
                                     const std::map<std::string, std::string>& responses) {
  std::vector<NeedleResult> out;
  for (const auto& inst : instances) {
    const auto it = responses.find(inst.instance_id);
    out.push_back({inst.depth_fraction, inst.target_length,
                   it == responses.end() ? 0 : score_response(inst, it->second)});
  }
  return out;
}

std::string results_csv(const std::vector<NeedleResult>& results) {
  std::string out = "depth,length,score\n";
  for (const auto& r : results) out += fmt::format("{},{},{}\n", r.depth, r.length, r.score);
  return out;
}

nlohmann::ordered_json instance_record(const NeedleInstance& inst,
                                       std::string_view context_path) {
  nlohmann::ordered_json j;
  j["instance_id"] = inst.instance_id;
  j["depth"] = inst.depth_fraction;
  j["length"] = inst.target_length;
  j["context_path"] = context_path;
  j["expected"] = inst.expected;
  j["actual_depth"] = inst.actual_depth;
  j["actual_length"] = inst.actual_length;
  return j;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view spec) {
  std::vector<std::string_view> out;
  while (!spec.empty()) {
    const std::size_t comma = spec.find(',');
    out.push_back(spec.substr(0, comma));
    if (comma == std::string_view::npos) break;
    spec.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view text, const char* what) {
  const std::string s(text);
  std::size_t used = 0;
  T value{};
  try {
    if constexpr (std::is_floating_point_v<T>) {
      value = std::stod(s, &used);
    } else {
      value = static_cast<T>(std::stoull(s, &used));
    }
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw ConfigError(fmt::format("bad {} '{}'", what, s));
  return value;
}

}  // namespace

std::vector<double> parse_depths(std::string_view spec) {
  std::vector<double> out;
  for (const auto item : split_commas(spec)) {
    const double d = parse_number<double>(item, "depth");
    if (!(d >= 0.0 && d <= 1.0)) throw ConfigError(fmt::format("depth {} outside [0, 1]", d));
    out.push_back(d);
  }
  if (out.empty()) throw ConfigError("no depths given");
  return out;
}

std::vector<std::size_t> parse_lengths(std::string_view spec) {
  std::vector<std::size_t> out;
  for (const auto item : split_commas(spec)) {
    const std::size_t dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(parse_number<std::size_t>(item, "length"));
      continue;
    }
    const auto first = parse_number<std::size_t>(item.substr(0, dots), "length");
    const auto last = parse_number<std::size_t>(item.substr(dots + 2), "length");
    if (first == 0 || last < first) throw ConfigError(fmt::format("bad length range '{}'", item));
    for (std::size_t len = first; len <= last; len *= 2) out.push_back(len);
  }
  if (out.empty()) throw ConfigError("no lengths given");
  return out;
}

}  // namespace codeprep
