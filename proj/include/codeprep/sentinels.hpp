#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace codeprep {

enum class Sentinel : std::uint8_t {
  endoftext,
  fim_prefix,
  fim_middle,
  fim_suffix,
  fim_pad,
  repo_name,
  file_sep,
};

struct SentinelToken {
  Sentinel kind;
  std::string_view name;
  std::string_view surface;
  std::uint32_t id;
};

// Special tokens of the code tokenizer. Ids are metadata for downstream
// tokenizer configuration; nothing here encodes text into ids.
inline constexpr std::array<SentinelToken, 7> kSentinels{{
    {Sentinel::endoftext, "endoftext", "<|endoftext|>", 151643},
    {Sentinel::fim_prefix, "fim_prefix", "<|fim_prefix|>", 151659},
    {Sentinel::fim_middle, "fim_middle", "<|fim_middle|>", 151660},
    {Sentinel::fim_suffix, "fim_suffix", "<|fim_suffix|>", 151661},
    {Sentinel::fim_pad, "fim_pad", "<|fim_pad|>", 151662},
    {Sentinel::repo_name, "repo_name", "<|repo_name|>", 151663},
    {Sentinel::file_sep, "file_sep", "<|file_sep|>", 151664},
}};

// Documented only; there is no vocabulary in this project.
inline constexpr std::size_t kVocabularySize = 151646;

// Throws RegistryError for names outside the registry.
const SentinelToken& lookup_sentinel(std::string_view name);

constexpr const SentinelToken& sentinel(Sentinel kind) {
  return kSentinels[static_cast<std::size_t>(kind)];
}

constexpr std::string_view surface(Sentinel kind) { return sentinel(kind).surface; }

struct SentinelHit {
  Sentinel kind;
  std::size_t offset;

  std::string_view name() const { return sentinel(kind).name; }
  bool operator==(const SentinelHit&) const = default;
};

// Every occurrence of a sentinel surface in `text`, ascending by offset.
std::vector<SentinelHit> find_sentinel_collisions(std::string_view text);

bool contains_sentinel(std::string_view text);

// [{name, surface, id}, ...] in registry order.
nlohmann::json sentinel_registry_json();

}  // namespace codeprep
