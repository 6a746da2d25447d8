#include "codeprep/hashing.hpp"

#include <array>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "codeprep/errors.hpp"

namespace codeprep {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t keyed_hash(std::uint64_t seed, std::string_view stage,
                         std::string_view key) {
  // Length-prefix the stage so ("ab","c") and ("a","bc") differ.
  std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&h), sizeof h));
  const std::uint64_t stage_len = stage.size();
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&stage_len),
                               sizeof stage_len),
              h);
  h = fnv1a64(stage, h);
  h = fnv1a64(key, h);
  return mix64(h);
}

double keyed_unit(std::uint64_t seed, std::string_view stage,
                  std::string_view key) {
  return static_cast<double>(keyed_hash(seed, stage, key) >> 11) * 0x1.0p-53;
}

std::uint64_t KeyedRng::below(std::uint64_t bound) {
  if (bound == 0) throw ContractError("KeyedRng::below: bound must be > 0");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    const std::uint64_t v = next();
    if (v < limit) return v % bound;
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    fmt::format_to(std::back_inserter(out), "{:02x}", digest[i]);
  }
  return out;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace codeprep
