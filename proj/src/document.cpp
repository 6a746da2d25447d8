#include "codeprep/document.hpp"

#include <map>
#include <set>

#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"

namespace codeprep {

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::code:
      return "code";
    case Domain::text:
      return "text";
    case Domain::math:
      return "math";
  }
  return "code";
}

Domain parse_domain(std::string_view name) {
  if (name == "code") return Domain::code;
  if (name == "text") return Domain::text;
  if (name == "math") return Domain::math;
  throw ConfigError("unknown domain: " + std::string(name));
}

std::string make_doc_id(std::string_view repo, std::string_view path,
                        std::string_view content) {
  std::string key;
  key.reserve(repo.size() + path.size() + content.size() + 2);
  key.append(repo).push_back('\0');
  key.append(path).push_back('\0');
  key.append(content);
  return sha256_hex(key).substr(0, 16);
}

std::size_t count_lines(std::string_view content) {
  if (content.empty()) return 0;
  std::size_t lines = 0;
  for (char c : content) lines += c == '\n';
  return lines + (content.back() != '\n');
}

SourceDocument SourceDocument::make(std::string repo, std::string path,
                                    std::string content, Domain domain,
                                    std::string language) {
  SourceDocument doc;
  doc.doc_id = make_doc_id(repo, path, content);
  doc.repo = std::move(repo);
  doc.path = std::move(path);
  doc.language = std::move(language);
  doc.byte_len = content.size();
  doc.line_count = count_lines(content);
  doc.content = std::move(content);
  doc.domain = domain;
  return doc;
}

void RepoBundle::validate() const {
  std::set<std::string_view> seen;
  for (const auto& f : files) {
    if (f.repo != repo_name) {
      throw ContractError("file " + f.path + " belongs to repo '" + f.repo +
                          "', not '" + repo_name + "'");
    }
    if (!seen.insert(f.path).second) {
      throw ContractError("duplicate path in repo " + repo_name + ": " + f.path);
    }
  }
}

std::vector<RepoBundle> group_by_repo(std::vector<SourceDocument> docs) {
  std::map<std::string, RepoBundle> by_repo;
  for (auto& d : docs) {
    auto& bundle = by_repo[d.repo];
    bundle.repo_name = d.repo;
    bundle.files.push_back(std::move(d));
  }
  std::vector<RepoBundle> out;
  out.reserve(by_repo.size());
  for (auto& [_, bundle] : by_repo) out.push_back(std::move(bundle));
  return out;
}

}  // namespace codeprep
