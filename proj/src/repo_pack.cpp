#include "codeprep/repo_pack.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include <fmt/format.h>

#include "codeprep/errors.hpp"
#include "codeprep/parallel.hpp"
#include "codeprep/sentinels.hpp"
#include "codeprep/syntax.hpp"

namespace codeprep {

FileOrder parse_file_order(std::string_view name) {
  if (name == "path-lex") return FileOrder::path_lex;
  if (name == "dependency-first") return FileOrder::dependency_first;
  throw ConfigError(fmt::format("unknown file order '{}'", name));
}

std::string_view to_string(FileOrder order) {
  return order == FileOrder::path_lex ? "path-lex" : "dependency-first";
}

namespace {

void check_field(std::string_view what, std::string_view value, bool single_line) {
  const auto hits = find_sentinel_collisions(value);
  if (!hits.empty()) {
    throw FormatError(fmt::format("sentinel-collision: {} in {} at offset {}",
                                  surface(hits.front().kind), what, hits.front().offset));
  }
  if (single_line && value.find('\n') != std::string_view::npos) {
    throw FormatError(fmt::format("{} contains a newline", what));
  }
}

}  // namespace

std::string render_repo_sequence(std::string_view repo_name, const std::vector<RepoFile>& files,
                                 const FimSample* last) {
  if (files.empty()) throw ContractError("repo sequence needs at least one file");
  check_field("repo name", repo_name, true);
  std::size_t size = repo_name.size() + 32;
  for (const auto& f : files) size += f.path.size() + f.content.size() + 16;
  std::string out;
  out.reserve(size + 64);
  out.append(surface(Sentinel::repo_name)).append(repo_name).push_back('\n');
  for (std::size_t i = 0; i < files.size(); ++i) {
    const RepoFile& f = files[i];
    check_field("path " + f.path, f.path, true);
    out.append(surface(Sentinel::file_sep)).append(f.path).push_back('\n');
    if (i + 1 < files.size()) {
      check_field("content of " + f.path, f.content, false);
      out.append(f.content).push_back('\n');
    } else if (last) {
      out.append(render_file_fim(*last));
    } else {
      check_field("content of " + f.path, f.content, false);
      out.append(f.content).append(surface(Sentinel::endoftext));
    }
  }
  return out;
}

ParsedRepoSequence parse_repo_sequence(std::string_view text) {
  const std::string_view repo_tok = surface(Sentinel::repo_name);
  const std::string_view sep_tok = surface(Sentinel::file_sep);
  if (text.substr(0, repo_tok.size()) != repo_tok) {
    throw FormatError("expected <|repo_name|> at offset 0");
  }
  ParsedRepoSequence parsed;
  std::size_t pos = repo_tok.size();
  std::size_t nl = text.find('\n', pos);
  if (nl == std::string_view::npos) throw FormatError("missing newline after repo name");
  parsed.repo_name = std::string(text.substr(pos, nl - pos));
  pos = nl + 1;

  std::vector<std::size_t> seps;
  for (const SentinelHit& hit : find_sentinel_collisions(text.substr(pos))) {
    if (hit.kind == Sentinel::file_sep) seps.push_back(pos + hit.offset);
  }
  if (seps.empty() || seps.front() != pos) {
    throw FormatError(fmt::format("expected <|file_sep|> at offset {}", pos));
  }
  seps.push_back(text.size());
  for (std::size_t i = 0; i + 1 < seps.size(); ++i) {
    const std::size_t begin = seps[i] + sep_tok.size();
    const std::string_view unit = text.substr(begin, seps[i + 1] - begin);
    const std::size_t path_end = unit.find('\n');
    if (path_end == std::string_view::npos) {
      throw FormatError(fmt::format("missing newline after file path at offset {}", begin));
    }
    RepoFile file{std::string(unit.substr(0, path_end)), {}};
    const std::string_view body = unit.substr(path_end + 1);
    if (i + 2 < seps.size()) {
      if (body.empty() || body.back() != '\n') {
        throw FormatError(fmt::format("missing newline before <|file_sep|> at offset {}",
                                      seps[i + 1]));
      }
      if (contains_sentinel(body)) {
        throw FormatError(fmt::format("unexpected sentinel inside file {}", file.path));
      }
      file.content = std::string(body.substr(0, body.size() - 1));
    } else {
      FimSample sample = parse_file_fim(body);
      file.content = sample.content();
      if (sample.is_fim()) parsed.last_fim = std::move(sample);
    }
    parsed.files.push_back(std::move(file));
  }
  return parsed;
}

namespace {

struct PlannedSequence {
  std::vector<RepoFile> files;
  std::vector<std::string> truncated;
};

// Byte length of the first `lines` lines of content.
std::size_t line_prefix_length(std::string_view content, const std::vector<std::size_t>& ends,
                               std::size_t lines) {
  return lines == 0 ? 0 : std::min(content.size(), ends[lines - 1]);
}

std::vector<PlannedSequence> plan_sequences(const RepoBundle& bundle, std::size_t budget,
                                            const TokenBudgeter& budgeter, std::size_t reserve) {
  if (bundle.files.empty()) {
    throw ContractError(fmt::format("repo {} has no files to pack", bundle.repo_name));
  }
  if (reserve >= budget) throw ContractError("budget does not cover the FIM reserve");
  const std::size_t limit = budget - reserve;
  const auto fits = [&](const std::vector<RepoFile>& files) {
    return budgeter.count(render_repo_sequence(bundle.repo_name, files)) <= limit;
  };

  std::vector<PlannedSequence> out;
  PlannedSequence current;
  const auto flush = [&] {
    if (!current.files.empty()) out.push_back(std::move(current));
    current = PlannedSequence{};
  };

  for (const SourceDocument& doc : bundle.files) {
    current.files.push_back({doc.path, doc.content});
    if (fits(current.files)) continue;
    current.files.pop_back();
    flush();
    current.files.push_back({doc.path, doc.content});
    if (fits(current.files)) continue;

    // Alone and still too large: keep the longest whole-line prefix.
    std::vector<std::size_t> ends;
    for (std::size_t i = 0; i < doc.content.size(); ++i) {
      if (doc.content[i] == '\n') ends.push_back(i + 1);
    }
    if (ends.empty() || ends.back() != doc.content.size()) ends.push_back(doc.content.size());
    std::vector<RepoFile> probe{{doc.path, {}}};
    const auto fits_lines = [&](std::size_t lines) {
      probe.front().content = doc.content.substr(0, line_prefix_length(doc.content, ends, lines));
      return fits(probe);
    };
    if (!fits_lines(0)) {
      throw ContractError(fmt::format("budget {} cannot hold file header of {}/{}", budget,
                                      bundle.repo_name, doc.path));
    }
    std::size_t lo = 0;  // fits
    std::size_t hi = ends.size();  // does not fit
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (fits_lines(mid) ? lo : hi) = mid;
    }
    current.files.back().content =
        doc.content.substr(0, line_prefix_length(doc.content, ends, lo));
    current.truncated.push_back(doc.path);
    flush();
  }
  flush();
  return out;
}

PackedSequence finish(const std::string& repo, std::size_t idx, PlannedSequence plan,
                      const TokenBudgeter& budgeter, const FimSample* last) {
  PackedSequence seq;
  seq.repo_name = repo;
  seq.sequence_idx = idx;
  for (const auto& f : plan.files) seq.included_paths.push_back(f.path);
  seq.rendered = render_repo_sequence(repo, plan.files, last);
  seq.approx_tokens = budgeter.count(seq.rendered);
  seq.fim_applied = last && last->is_fim();
  seq.truncated_paths = std::move(plan.truncated);
  return seq;
}

const SourceDocument* find_file(const RepoBundle& bundle, std::string_view path) {
  for (const auto& doc : bundle.files) {
    if (doc.path == path) return &doc;
  }
  return nullptr;
}

// Fim sample for the last file of a planned sequence, using its packed
// (possibly truncated) content.
FimSample last_file_sample(const RepoBundle& bundle, const PlannedSequence& plan,
                           const SpanPolicy& policy, const std::set<std::string>& ast_languages,
                           std::optional<syntax::Parser>& parser) {
  const RepoFile& last = plan.files.back();
  const SourceDocument* source = find_file(bundle, last.path);
  SourceDocument doc = *source;
  doc.content = last.content;
  if (!fim_selected(policy, doc.doc_id)) return FimSample::plain(doc.content, doc.doc_id);
  if (ast_languages.count(doc.language) && syntax::supports(doc.language)) {
    if (!parser) parser.emplace();
    return select_span_ast(doc, *parser, policy);
  }
  return random_span(doc, policy);
}

}  // namespace

std::vector<PackedSequence> pack_repo(const RepoBundle& bundle, std::size_t budget,
                                      const TokenBudgeter& budgeter, std::size_t reserve) {
  std::vector<PackedSequence> out;
  std::size_t idx = 0;
  for (auto& plan : plan_sequences(bundle, budget, budgeter, reserve)) {
    out.push_back(finish(bundle.repo_name, idx++, std::move(plan), budgeter, nullptr));
  }
  return out;
}

PackedSequence render_repo_fim(const RepoBundle& bundle, std::string_view target_path,
                               const SpanPolicy& policy, const TokenBudgeter& budgeter,
                               std::size_t budget) {
  policy.validate();
  auto plans = plan_sequences(bundle, budget, budgeter, budgeter.fim_overhead_bound());
  for (std::size_t idx = 0; idx < plans.size(); ++idx) {
    auto& files = plans[idx].files;
    const auto it = std::find_if(files.begin(), files.end(),
                                 [&](const RepoFile& f) { return f.path == target_path; });
    if (it == files.end()) continue;
    if (it + 1 != files.end()) {
      throw ContractError(fmt::format("{} is not the last file of sequence {} of {}",
                                      target_path, idx, bundle.repo_name));
    }
    std::optional<syntax::Parser> parser;
    const FimSample sample = last_file_sample(bundle, plans[idx], policy, {}, parser);
    return finish(bundle.repo_name, idx, std::move(plans[idx]), budgeter, &sample);
  }
  throw ContractError(fmt::format("{} is not a file of {}", target_path, bundle.repo_name));
}

namespace {

bool is_ref_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '.' || c == '/' || c == ':' || c == '-';
}

bool is_keyword(std::string_view token) {
  static constexpr std::string_view kWords[] = {"import", "from", "include", "require", "use",
                                                "using",  "as",   "static",  "type",    "pub",
                                                "crate",  "self", "super",   "export",  "const",
                                                "let",    "var",  "mod",     "package"};
  return std::find(std::begin(kWords), std::end(kWords), token) != std::end(kWords);
}

std::string normalize_reference(std::string_view token) {
  std::string ref;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (token.substr(i, 2) == "::") {
      ref.push_back('/');
      ++i;
    } else {
      ref.push_back(token[i]);
    }
  }
  while (ref.rfind("./", 0) == 0 || ref.rfind("../", 0) == 0) {
    ref.erase(0, ref.find('/') + 1);
  }
  // dotted module paths; a trailing file extension is handled by the matcher
  if (ref.find('/') == std::string::npos) {
    std::replace(ref.begin(), ref.end(), '.', '/');
  }
  while (!ref.empty() && (ref.back() == '/' || ref.back() == ';' || ref.back() == ':')) {
    ref.pop_back();
  }
  while (!ref.empty() && ref.front() == '/') ref.erase(0, 1);
  return ref;
}

bool is_import_line(std::string_view line) {
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  for (std::string_view head : {"import ", "from ", "#include", "use ", "using ", "require "}) {
    if (line.substr(0, head.size()) == head) return true;
  }
  return line.find("require(") != std::string_view::npos ||
         (line.substr(0, 7) == "export " && line.find(" from ") != std::string_view::npos);
}

}  // namespace

std::vector<std::string> extract_references(std::string_view content) {
  std::vector<std::string> refs;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(pos, end - pos);
    if (is_import_line(line)) {
      std::size_t i = 0;
      while (i < line.size()) {
        if (!is_ref_char(line[i])) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < line.size() && is_ref_char(line[j])) ++j;
        const std::string_view token = line.substr(i, j - i);
        if (!is_keyword(token)) {
          std::string ref = normalize_reference(token);
          if (!ref.empty() && !is_keyword(ref)) refs.push_back(std::move(ref));
          // "ring.h" is a file name, not a dotted module path
          if (token.find('.') != std::string_view::npos && token.find('/') == std::string_view::npos &&
              token.find("::") == std::string_view::npos && token.front() != '.' &&
              token.back() != '.') {
            refs.emplace_back(token);
          }
        }
        i = j;
      }
    }
    pos = end + 1;
  }
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  return refs;
}

namespace {

std::string strip_extension(std::string_view path) {
  const std::size_t slash = path.rfind('/');
  const std::size_t dot = path.rfind('.');
  if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash) ||
      dot == (slash == std::string_view::npos ? 0 : slash + 1)) {
    return std::string(path);
  }
  return std::string(path.substr(0, dot));
}

bool ends_with_segment(std::string_view path, std::string_view ref) {
  if (path == ref) return true;
  return path.size() > ref.size() && path.substr(path.size() - ref.size()) == ref &&
         path[path.size() - ref.size() - 1] == '/';
}

// Does `ref`, or `ref` minus an imported item name, name `path` by one of
// its trailing segment suffixes?
bool reference_matches(std::string_view path, std::string_view ref) {
  const std::string stem = strip_extension(path);
  const std::size_t last = ref.rfind('/');
  const std::string_view module = last == std::string_view::npos ? std::string_view{} : ref.substr(0, last);
  for (std::string_view candidate : {ref, module}) {
    for (std::string_view r = candidate; !r.empty();) {
      if (ends_with_segment(path, r) || ends_with_segment(stem, r)) return true;
      const std::size_t slash = r.find('/');
      if (slash == std::string_view::npos) break;
      r.remove_prefix(slash + 1);
    }
  }
  return false;
}

}  // namespace

RepoBundle order_files(const RepoBundle& bundle, FileOrder strategy) {
  RepoBundle out{bundle.repo_name, {}};
  std::vector<std::size_t> idx(bundle.files.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto path_less = [&](std::size_t a, std::size_t b) {
    return bundle.files[a].path < bundle.files[b].path;
  };
  std::sort(idx.begin(), idx.end(), path_less);

  if (strategy == FileOrder::dependency_first) {
    // edge dep -> user: dep must come before the file that mentions it
    const std::size_t n = idx.size();
    std::vector<std::vector<std::size_t>> users(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t u = 0; u < n; ++u) {
      const auto refs = extract_references(bundle.files[idx[u]].content);
      for (std::size_t d = 0; d < n; ++d) {
        if (d == u) continue;
        const std::string& path = bundle.files[idx[d]].path;
        if (std::any_of(refs.begin(), refs.end(),
                        [&](const std::string& r) { return reference_matches(path, r); })) {
          users[d].push_back(u);
          ++indegree[u];
        }
      }
    }
    // positions in idx are already path-sorted, so the smallest position is
    // the lexicographically smallest path
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    std::vector<bool> done(n, false);
    for (std::size_t v = 0; v < n; ++v) {
      if (indegree[v] == 0) ready.push(v);
    }
    std::vector<std::size_t> order;
    while (order.size() < n) {
      if (ready.empty()) {
        // cycle: release the smallest remaining path
        for (std::size_t v = 0; v < n; ++v) {
          if (!done[v] && indegree[v] > 0) {
            indegree[v] = 0;
            ready.push(v);
            break;
          }
        }
      }
      const std::size_t v = ready.top();
      ready.pop();
      if (done[v]) continue;
      done[v] = true;
      order.push_back(idx[v]);
      for (std::size_t u : users[v]) {
        if (!done[u] && indegree[u] > 0 && --indegree[u] == 0) ready.push(u);
      }
    }
    idx = std::move(order);
  }
  for (std::size_t i : idx) out.files.push_back(bundle.files[i]);
  return out;
}

PackResult pack_corpus(const std::vector<SourceDocument>& docs, const PackOptions& options,
                       unsigned workers) {
  if (options.fim_last) options.policy.validate();
  PackResult result;
  std::vector<SourceDocument> live;
  for (const auto& doc : docs) {
    if (contains_sentinel(doc.content) || contains_sentinel(doc.path) ||
        contains_sentinel(doc.repo)) {
      result.drops.push_back({doc.doc_id, doc.repo, doc.path, "sentinel-collision"});
    } else if (doc.path.find('\n') != std::string::npos ||
               doc.repo.find('\n') != std::string::npos) {
      result.drops.push_back({doc.doc_id, doc.repo, doc.path, "invalid-path"});
    } else {
      live.push_back(doc);
    }
  }
  const std::vector<RepoBundle> bundles = group_by_repo(std::move(live));
  std::vector<std::vector<PackedSequence>> per_repo(bundles.size());
  const std::size_t reserve = options.fim_last ? options.budgeter.fim_overhead_bound() : 0;
  parallel_for(bundles.size(), workers, [&](std::size_t r) {
    thread_local std::optional<syntax::Parser> parser;
    const RepoBundle bundle = order_files(bundles[r], options.order);
    auto plans = plan_sequences(bundle, options.budget, options.budgeter, reserve);
    for (std::size_t idx = 0; idx < plans.size(); ++idx) {
      if (options.fim_last) {
        const FimSample sample =
            last_file_sample(bundle, plans[idx], options.policy, options.ast_languages, parser);
        per_repo[r].push_back(
            finish(bundle.repo_name, idx, std::move(plans[idx]), options.budgeter, &sample));
      } else {
        per_repo[r].push_back(
            finish(bundle.repo_name, idx, std::move(plans[idx]), options.budgeter, nullptr));
      }
    }
  });
  for (auto& seqs : per_repo) {
    for (auto& s : seqs) result.sequences.push_back(std::move(s));
  }
  return result;
}

nlohmann::ordered_json pack_index_record(const PackedSequence& seq) {
  nlohmann::ordered_json j;
  j["repo"] = seq.repo_name;
  j["sequence_idx"] = seq.sequence_idx;
  j["paths"] = seq.included_paths;
  j["approx_tokens"] = seq.approx_tokens;
  j["fim_applied"] = seq.fim_applied;
  if (!seq.truncated_paths.empty()) j["truncated"] = seq.truncated_paths;
  return j;
}

}  // namespace codeprep
