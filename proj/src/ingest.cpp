#include "codeprep/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "codeprep/errors.hpp"
#include "codeprep/parallel.hpp"

namespace fs = std::filesystem;

namespace codeprep {

namespace {

constexpr std::size_t kBinaryProbeBytes = 8192;

struct Candidate {
  std::string rel;  // generic, '/'-separated, relative to root
  fs::path full;
  std::uintmax_t size = 0;
};

struct ReadOutcome {
  std::optional<std::string> content;
  std::string reason;
};

ReadOutcome read_file(const Candidate& c, std::uintmax_t max_bytes) {
  if (c.size > max_bytes) return {std::nullopt, "oversize"};
  std::ifstream in(c.full, std::ios::binary);
  if (!in) return {std::nullopt, "unreadable"};
  std::string content(c.size, '\0');
  in.read(content.data(), static_cast<std::streamsize>(c.size));
  if (static_cast<std::uintmax_t>(in.gcount()) != c.size) return {std::nullopt, "unreadable"};
  const std::size_t probe = std::min(content.size(), kBinaryProbeBytes);
  if (std::string_view(content).substr(0, probe).find('\0') != std::string_view::npos) {
    return {std::nullopt, "binary"};
  }
  return {std::move(content), {}};
}

}  // namespace

RepoLayout parse_repo_layout(std::string_view name) {
  if (name == "single") return RepoLayout::single;
  if (name == "subdirs") return RepoLayout::subdirs;
  throw ConfigError("unknown repo layout: " + std::string(name));
}

IngestResult ingest_directory(const fs::path& root, const IngestOptions& options) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("ingest root is not a readable directory: " + root.string());
  }
  const LanguageMap& languages =
      options.languages ? *options.languages : LanguageMap::defaults();
  const std::string root_name = fs::weakly_canonical(fs::absolute(root)).filename().string();

  std::vector<Candidate> candidates;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IoError("cannot open ingest root " + root.string() + ": " + ec.message());
  for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw IoError("directory walk failed under " + root.string() + ": " + ec.message());
    const fs::directory_entry& entry = *it;
    if (entry.is_directory(ec) && entry.path().filename() == ".git") {
      it.disable_recursion_pending();
      continue;
    }
    if (!entry.is_regular_file(ec)) continue;
    Candidate c;
    c.full = entry.path();
    c.rel = fs::relative(entry.path(), root).generic_string();
    c.size = entry.file_size(ec);
    candidates.push_back(std::move(c));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.rel < b.rel; });

  const auto split = [&](const std::string& rel) -> std::pair<std::string, std::string> {
    if (options.layout == RepoLayout::single) {
      return {options.repo_name.empty() ? root_name : options.repo_name, rel};
    }
    const auto slash = rel.find('/');
    if (slash == std::string::npos) return {root_name, rel};
    return {rel.substr(0, slash), rel.substr(slash + 1)};
  };

  std::vector<ReadOutcome> outcomes(candidates.size());
  parallel_for(candidates.size(), options.workers, [&](std::size_t i) {
    outcomes[i] = read_file(candidates[i], options.max_file_bytes);
  });

  IngestResult result;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto [repo, path] = split(candidates[i].rel);
    if (!outcomes[i].content) {
      result.skipped.push_back({std::move(repo), std::move(path), candidates[i].size,
                                outcomes[i].reason});
      continue;
    }
    std::string content = std::move(*outcomes[i].content);
    std::string language = languages.detect(path, content);
    result.documents.push_back(SourceDocument::make(std::move(repo), std::move(path),
                                                    std::move(content), options.domain,
                                                    std::move(language)));
  }
  return result;
}

}  // namespace codeprep
