#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace codeprep {

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// splitmix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hash of (seed, stage, key). All randomness in the pipeline is derived from
// this so results never depend on scheduling or worker count.
std::uint64_t keyed_hash(std::uint64_t seed, std::string_view stage,
                         std::string_view key);

// Uniform double in [0, 1) from a keyed hash.
double keyed_unit(std::uint64_t seed, std::string_view stage,
                  std::string_view key);

// Deterministic random stream keyed by (seed, stage, key). Portable across
// standard libraries, unlike std::uniform_int_distribution.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::string_view stage, std::string_view key)
      : state_(keyed_hash(seed, stage, key)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

std::string sha256_hex(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace codeprep
