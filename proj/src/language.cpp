#include "codeprep/language.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "codeprep/errors.hpp"

namespace codeprep {

namespace detail {
extern const char* const kDefaultLanguageMapJson;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view basename(std::string_view path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

// "python3.11" -> "python", "/usr/bin/env" -> "env"
std::string interpreter_name(std::string_view token) {
  std::string name = lower(basename(token));
  while (!name.empty() && (std::isdigit(static_cast<unsigned char>(name.back())) ||
                           name.back() == '.')) {
    name.pop_back();
  }
  return name;
}

}  // namespace

const LanguageMap& LanguageMap::defaults() {
  static const LanguageMap map =
      from_json(nlohmann::json::parse(detail::kDefaultLanguageMapJson));
  return map;
}

LanguageMap LanguageMap::from_json(const nlohmann::json& doc) {
  LanguageMap map;
  try {
    map.languages_ = doc.at("languages").get<std::vector<std::string>>();
    for (const auto& [ext, lang] : doc.at("extensions").items()) {
      map.extensions_[lower(ext)] = lang.get<std::string>();
    }
    if (doc.contains("filenames")) {
      for (const auto& [name, lang] : doc.at("filenames").items()) {
        map.filenames_[name] = lang.get<std::string>();
      }
    }
    if (doc.contains("interpreters")) {
      for (const auto& [name, lang] : doc.at("interpreters").items()) {
        map.interpreters_[lower(name)] = lang.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid language map: ") + e.what());
  }
  return map;
}

LanguageMap LanguageMap::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read language map " + file.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("language map " + file.string() + ": " + e.what());
  }
}

nlohmann::json LanguageMap::to_json() const {
  nlohmann::json out;
  out["languages"] = languages_;
  out["extensions"] = extensions_;
  out["filenames"] = filenames_;
  out["interpreters"] = interpreters_;
  return out;
}

std::string LanguageMap::language_for_extension(std::string_view ext) const {
  const auto it = extensions_.find(lower(ext));
  return it == extensions_.end() ? "unknown" : it->second;
}

std::string LanguageMap::detect(std::string_view path, std::string_view content) const {
  const std::string_view name = basename(path);
  if (const auto it = filenames_.find(name); it != filenames_.end()) return it->second;

  if (const auto dot = name.find_last_of('.'); dot != std::string_view::npos && dot > 0) {
    if (const auto it = extensions_.find(lower(name.substr(dot))); it != extensions_.end()) {
      return it->second;
    }
  }

  if (content.starts_with("#!")) {
    std::string_view line = content.substr(2, content.find('\n') - 2);
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos > start) tokens.push_back(line.substr(start, pos - start));
    }
    std::size_t i = 0;
    if (i < tokens.size() && interpreter_name(tokens[i]) == "env") {
      ++i;
      while (i < tokens.size() && (tokens[i].starts_with('-') ||
                                   tokens[i].find('=') != std::string_view::npos)) {
        ++i;
      }
    }
    if (i < tokens.size()) {
      if (const auto it = interpreters_.find(interpreter_name(tokens[i]));
          it != interpreters_.end()) {
        return it->second;
      }
    }
  }
  return "unknown";
}

std::string detect_language(std::string_view path, std::string_view content) {
  return LanguageMap::defaults().detect(path, content);
}

}  // namespace codeprep
