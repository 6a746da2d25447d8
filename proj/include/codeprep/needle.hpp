#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeprep/budget.hpp"
#include "codeprep/document.hpp"
#include "codeprep/repo_pack.hpp"

namespace codeprep {

inline constexpr std::string_view kDefaultNeedle =
    "def needle_checksum(values):\n"
    "    total = 7\n"
    "    for v in values:\n"
    "        total = (total * 31 + v) % 1000003\n"
    "    return total\n";

inline constexpr std::string_view kDefaultPromptSuffix =
    "<|file_sep|>replicate.txt\n"
    "Reproduce, exactly and in full, the function defined in needle.py above.\n";

struct NeedleSpec {
  std::string needle_source{kDefaultNeedle};
  std::string needle_path = "needle.py";
  std::string language = "python";  // static check language
  std::string prompt_suffix{kDefaultPromptSuffix};
  double depth_fraction = 0.5;
  std::size_t target_length = 4096;
  std::uint64_t seed = 0;
};

struct NeedleInstance {
  std::string instance_id;
  std::string context;  // repository context holding the needle file
  std::string prompt_suffix;
  std::string expected;
  double depth_fraction = 0.0;
  std::size_t target_length = 0;
  double actual_depth = 0.0;   // tokens before the needle / haystack tokens
  std::size_t actual_length = 0;  // budgeter count of context
  std::size_t needle_tokens = 0;  // count of the needle's file unit
  std::size_t max_unit_tokens = 0;  // largest haystack file unit
  std::size_t haystack_tokens = 0;

  std::string prompt() const { return context + prompt_suffix; }
};

// Haystack files. Paths from several repos are prefixed with the repo name.
struct NeedleCorpus {
  std::string repo_name = "haystack";
  std::vector<RepoFile> files;

  static NeedleCorpus from_documents(const std::vector<SourceDocument>& docs,
                                     std::string repo_name = "haystack");
  // Files recovered from rendered repo sequences.
  static NeedleCorpus from_sequences(const std::vector<PackedSequence>& sequences,
                                     std::string repo_name = "haystack");
};

inline constexpr std::array<double, 10> kDefaultDepths{0.0,  0.11, 0.22, 0.33, 0.44,
                                                       0.56, 0.67, 0.78, 0.89, 1.0};
inline constexpr std::array<std::size_t, 8> kDefaultLengths{4096,  8192,  16384, 32768,
                                                            49152, 65536, 98304, 131072};

// <|repo_name|>{repo}\n, then <|file_sep|>{path}\n{content}\n per file with
// the needle as its own file at the boundary nearest depth * haystack
// tokens. The haystack starts at a seeded file (same for every depth at one
// length) and its last file is cut at a line boundary to land near the
// target. Throws ContractError when the corpus is too small, the needle is
// invalid, or the length exceeds the 128K ceiling.
NeedleInstance generate_instance(const NeedleCorpus& corpus, const NeedleSpec& spec,
                                 const TokenBudgeter& budgeter);

// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(std::string_view text);

// 1 iff the normalized expected text occurs in the normalized response.
int score_response(const NeedleInstance& instance, std::string_view response);

std::vector<NeedleInstance> generate_grid(const NeedleCorpus& corpus,
                                          const std::vector<double>& depths,
                                          const std::vector<std::size_t>& lengths,
                                          const NeedleSpec& base, const TokenBudgeter& budgeter,
                                          unsigned workers = 1);

struct NeedleResult {
  double depth = 0.0;
  std::size_t length = 0;
  int score = 0;
};

// Missing responses score 0.
std::vector<NeedleResult> score_grid(const std::vector<NeedleInstance>& instances,
                                     const std::map<std::string, std::string>& responses);

// "depth,length,score" header plus one row per result.
std::string results_csv(const std::vector<NeedleResult>& results);

// {instance_id, depth, length, context_path, expected, actual_depth,
//  actual_length}
nlohmann::ordered_json instance_record(const NeedleInstance& instance,
                                       std::string_view context_path);

// "0,0.5,1" -> doubles; "4096..131072" doubles from the first to the last.
std::vector<double> parse_depths(std::string_view spec);
std::vector<std::size_t> parse_lengths(std::string_view spec);

}  // namespace codeprep
