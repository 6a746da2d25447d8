#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace codeprep {

// Extension / filename / shebang-interpreter tables mapping files to
// language tags. The shipped defaults live in config/languages.json.
class LanguageMap {
 public:
  static const LanguageMap& defaults();
  static LanguageMap from_json(const nlohmann::json& doc);
  static LanguageMap load(const std::filesystem::path& file);

  nlohmann::json to_json() const;

  // Exact filename, then lowercased extension, then shebang; else "unknown".
  std::string detect(std::string_view path, std::string_view content) const;

  const std::vector<std::string>& languages() const { return languages_; }
  // Language for a single extension such as ".py", or "unknown".
  std::string language_for_extension(std::string_view ext) const;

 private:
  std::vector<std::string> languages_;
  std::map<std::string, std::string, std::less<>> extensions_;
  std::map<std::string, std::string, std::less<>> filenames_;
  std::map<std::string, std::string, std::less<>> interpreters_;
};

std::string detect_language(std::string_view path, std::string_view content);

}  // namespace codeprep
