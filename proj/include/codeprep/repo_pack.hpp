#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeprep/budget.hpp"
#include "codeprep/document.hpp"
#include "codeprep/fim.hpp"

namespace codeprep {

enum class FileOrder { path_lex, dependency_first };

// "path-lex" or "dependency-first"; throws ConfigError otherwise.
FileOrder parse_file_order(std::string_view name);
std::string_view to_string(FileOrder order);

struct PackedSequence {
  std::string repo_name;
  std::size_t sequence_idx = 0;
  std::vector<std::string> included_paths;
  std::string rendered;
  std::size_t approx_tokens = 0;
  bool fim_applied = false;
  // Files cut at a line boundary to fit the budget.
  std::vector<std::string> truncated_paths;
};

struct RepoFile {
  std::string path;
  std::string content;

  bool operator==(const RepoFile&) const = default;
};

// <|repo_name|>{repo}\n, then <|file_sep|>{path}\n{content} per file with a
// "\n" after every file but the last, then <|endoftext|>. When `last` is
// given it replaces the final file's body with its file-level rendering.
// Throws FormatError when a name, path or content holds a sentinel or a path
// holds a newline.
std::string render_repo_sequence(std::string_view repo_name, const std::vector<RepoFile>& files,
                                 const FimSample* last = nullptr);

struct ParsedRepoSequence {
  std::string repo_name;
  std::vector<RepoFile> files;  // the last file's content is reassembled
  std::optional<FimSample> last_fim;
};

// Inverse of render_repo_sequence. Throws FormatError.
ParsedRepoSequence parse_repo_sequence(std::string_view text);

// Greedy packing in bundle order. Each sequence is counted under
// budget - reserve; a file too large for an empty sequence is cut at a line
// boundary. Throws ContractError for an empty bundle or a budget that cannot
// hold a single empty file.
std::vector<PackedSequence> pack_repo(const RepoBundle& bundle, std::size_t budget,
                                      const TokenBudgeter& budgeter, std::size_t reserve = 0);

// Packs with the budgeter's FIM reserve and converts `target_path` into the
// FIM target of its sequence when the policy's rate coin says so. Throws
// ContractError when target_path is not the last file of its sequence.
PackedSequence render_repo_fim(const RepoBundle& bundle, std::string_view target_path,
                               const SpanPolicy& policy, const TokenBudgeter& budgeter,
                               std::size_t budget);

// Module-ish references on import-like lines (import, from, #include,
// require, use, using), normalized to '/'-separated form.
std::vector<std::string> extract_references(std::string_view content);

RepoBundle order_files(const RepoBundle& bundle, FileOrder strategy);

struct PackOptions {
  std::size_t budget = kRepoStageBudget;
  TokenBudgeter budgeter;
  FileOrder order = FileOrder::path_lex;
  bool fim_last = false;
  SpanPolicy policy;
  std::set<std::string> ast_languages;
};

struct PackDrop {
  std::string doc_id;
  std::string repo;
  std::string path;
  std::string reason;
};

struct PackResult {
  std::vector<PackedSequence> sequences;  // by repo, then sequence_idx
  std::vector<PackDrop> drops;
};

PackResult pack_corpus(const std::vector<SourceDocument>& docs, const PackOptions& options,
                       unsigned workers);

// {repo, sequence_idx, paths, approx_tokens, fim_applied, truncated?}
nlohmann::ordered_json pack_index_record(const PackedSequence& seq);

}  // namespace codeprep
