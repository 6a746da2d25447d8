#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codeprep/document.hpp"
#include "codeprep/language.hpp"

namespace codeprep {

enum class RepoLayout {
  single,   // the whole root is one repository
  subdirs,  // each top-level directory is a repository checkout
};

RepoLayout parse_repo_layout(std::string_view name);

struct IngestOptions {
  Domain domain = Domain::code;
  std::uintmax_t max_file_bytes = 1 << 20;
  RepoLayout layout = RepoLayout::subdirs;
  std::string repo_name;  // single layout; defaults to the root's name
  const LanguageMap* languages = nullptr;  // nullptr = defaults
  unsigned workers = 1;
};

struct IngestSkip {
  std::string repo;
  std::string path;
  std::uintmax_t byte_len = 0;
  std::string reason;  // "binary", "oversize" or "unreadable"
};

struct IngestResult {
  std::vector<SourceDocument> documents;  // lexicographic by root-relative path
  std::vector<IngestSkip> skipped;
};

// Walks `root` (skipping .git directories), reads every regular file within
// the size limit, drops binaries (NUL within the first 8 KiB) and tags each
// document's language. Throws IoError when the root is unreadable.
IngestResult ingest_directory(const std::filesystem::path& root,
                              const IngestOptions& options = {});

}  // namespace codeprep
