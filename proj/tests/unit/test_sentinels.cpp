#include <doctest.h>

#include <random>
#include <set>

#include "codeprep/errors.hpp"
#include "codeprep/sentinels.hpp"
#include "test_support.hpp"

using namespace codeprep;

TEST_SUITE("sentinels") {

TEST_CASE("registry table") {
  struct Row {
    const char* name;
    const char* surface;
    std::uint32_t id;
  };
  const Row expected[] = {
      {"endoftext", "<|endoftext|>", 151643},  {"fim_prefix", "<|fim_prefix|>", 151659},
      {"fim_middle", "<|fim_middle|>", 151660}, {"fim_suffix", "<|fim_suffix|>", 151661},
      {"fim_pad", "<|fim_pad|>", 151662},       {"repo_name", "<|repo_name|>", 151663},
      {"file_sep", "<|file_sep|>", 151664},
  };
  REQUIRE(kSentinels.size() == std::size(expected));
  for (std::size_t i = 0; i < kSentinels.size(); ++i) {
    CAPTURE(i);
    CHECK(kSentinels[i].name == expected[i].name);
    CHECK(kSentinels[i].surface == expected[i].surface);
    CHECK(kSentinels[i].id == expected[i].id);
    CHECK(lookup_sentinel(expected[i].name).id == expected[i].id);
    CHECK(sentinel(kSentinels[i].kind).surface == expected[i].surface);
  }
}

TEST_CASE("ids and surfaces are unique") {
  std::set<std::uint32_t> ids;
  std::set<std::string_view> surfaces;
  for (const auto& t : kSentinels) {
    ids.insert(t.id);
    surfaces.insert(t.surface);
  }
  CHECK(ids.size() == kSentinels.size());
  CHECK(surfaces.size() == kSentinels.size());
}

TEST_CASE("unknown name throws") {
  CHECK_THROWS_AS(lookup_sentinel("fim_pre"), RegistryError);
  CHECK_THROWS_AS(lookup_sentinel("<|endoftext|>"), RegistryError);
}

TEST_CASE("registry json mirrors the table") {
  const auto j = sentinel_registry_json();
  REQUIRE(j.size() == 7);
  CHECK(j[0]["name"] == "endoftext");
  CHECK(j[6]["surface"] == "<|file_sep|>");
  CHECK(j[6]["id"] == 151664);
}

TEST_CASE("collision scan finds every surface") {
  const std::string text = "a<|fim_prefix|>b<|<|file_sep|><|fim_pad|x<|endoftext|>";
  const auto hits = find_sentinel_collisions(text);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0] == SentinelHit{Sentinel::fim_prefix, 1});
  CHECK(hits[1] == SentinelHit{Sentinel::file_sep, 18});
  CHECK(hits[2].kind == Sentinel::endoftext);
  CHECK(contains_sentinel(text));
  CHECK_FALSE(contains_sentinel("<|fim_pad|x <|endoftext| |>"));
}

TEST_CASE("collision scan agrees with a naive search") {
  std::mt19937_64 rng(7);
  const std::string_view parts[] = {"<|", "|>", "fim_middle", "repo_name", "x", "<|file_sep|>",
                                    "<|endoftext|>", "é"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) text += parts[rng() % std::size(parts)];
    std::vector<SentinelHit> naive;
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
      for (const auto& t : kSentinels) {
        if (text.compare(pos, t.surface.size(), t.surface) == 0) naive.push_back({t.kind, pos});
      }
    }
    CHECK(find_sentinel_collisions(text) == naive);
    CHECK(contains_sentinel(text) == !naive.empty());
  }
}

}
