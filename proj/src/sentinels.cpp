#include "codeprep/sentinels.hpp"

#include <string>

#include "codeprep/errors.hpp"

namespace codeprep {

const SentinelToken& lookup_sentinel(std::string_view name) {
  for (const auto& token : kSentinels) {
    if (token.name == name) return token;
  }
  throw RegistryError("unknown sentinel name: " + std::string(name));
}

std::vector<SentinelHit> find_sentinel_collisions(std::string_view text) {
  // Every surface begins with "<|", so only those positions need checking.
  std::vector<SentinelHit> hits;
  std::size_t pos = text.find("<|");
  while (pos != std::string_view::npos) {
    const std::string_view rest = text.substr(pos);
    for (const auto& token : kSentinels) {
      if (rest.starts_with(token.surface)) {
        hits.push_back({token.kind, pos});
        break;  // surfaces are mutually non-overlapping
      }
    }
    pos = text.find("<|", pos + 1);
  }
  return hits;
}

bool contains_sentinel(std::string_view text) {
  std::size_t pos = text.find("<|");
  while (pos != std::string_view::npos) {
    const std::string_view rest = text.substr(pos);
    for (const auto& token : kSentinels) {
      if (rest.starts_with(token.surface)) return true;
    }
    pos = text.find("<|", pos + 1);
  }
  return false;
}

nlohmann::json sentinel_registry_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& token : kSentinels) {
    out.push_back({{"name", token.name}, {"surface", token.surface}, {"id", token.id}});
  }
  return out;
}

}  // namespace codeprep
