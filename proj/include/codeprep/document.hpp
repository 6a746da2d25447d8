#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace codeprep {

enum class Domain { code, text, math };

std::string_view to_string(Domain domain);
// Throws ConfigError for anything but "code", "text", "math".
Domain parse_domain(std::string_view name);

// One ingested file.
struct SourceDocument {
  std::string doc_id;  // stable hash of (repo, path, content)
  std::string repo;
  std::string path;  // relative, '/'-separated
  std::string language = "unknown";
  std::string content;
  std::size_t byte_len = 0;
  std::size_t line_count = 0;
  int quality_stage = 0;  // 0 = unfiltered
  Domain domain = Domain::code;

  // Builds a document with doc_id, byte_len and line_count derived from the
  // arguments.
  static SourceDocument make(std::string repo, std::string path, std::string content,
                             Domain domain = Domain::code,
                             std::string language = "unknown");

  bool operator==(const SourceDocument&) const = default;
};

std::string make_doc_id(std::string_view repo, std::string_view path,
                        std::string_view content);

// Number of lines; a final line without '\n' still counts.
std::size_t count_lines(std::string_view content);

struct RepoBundle {
  std::string repo_name;
  std::vector<SourceDocument> files;

  // Throws ContractError if a file belongs to another repo or a path repeats.
  void validate() const;
};

// Groups documents by repo; bundles are ordered by repo name and files keep
// their input order.
std::vector<RepoBundle> group_by_repo(std::vector<SourceDocument> docs);

}  // namespace codeprep
