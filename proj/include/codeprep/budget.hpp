#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace codeprep {

// Sequence-length constants of the training stages, in tokens.
inline constexpr std::size_t kFileStageBudget = 8192;
inline constexpr std::size_t kRepoStageBudget = 32768;
inline constexpr std::size_t kMaxContextBudget = 131072;

// Pluggable stand-in for a tokenizer when enforcing length budgets.
//
// whitespace-word counts maximal runs of non-whitespace bytes (the default);
// byte-quarter is ceil(bytes / 4), a rough BPE density estimate; external
// delegates to a caller-supplied function. Every mode must satisfy
// count("") == 0 and count(a + b) >= max(count(a), count(b)).
class TokenBudgeter {
 public:
  enum class Mode { whitespace_word, byte_quarter, external };
  using CountFn = std::function<std::size_t(std::string_view)>;

  TokenBudgeter() = default;

  static TokenBudgeter whitespace_word() { return TokenBudgeter(Mode::whitespace_word); }
  static TokenBudgeter byte_quarter() { return TokenBudgeter(Mode::byte_quarter); }
  // `fim_reserve` bounds how many tokens the three FIM sentinels can add to a
  // rendered sequence under this counter.
  static TokenBudgeter external(CountFn fn, std::size_t fim_reserve);
  // "whitespace-word" or "byte-quarter"; throws ConfigError otherwise.
  static TokenBudgeter from_name(std::string_view name);

  std::size_t count(std::string_view text) const;

  Mode mode() const { return mode_; }
  std::string_view name() const;

  // Upper bound on count(fim rendering) - count(plain rendering) for one
  // file. whitespace-word: the three sentinels and the two new span cuts add
  // at most 6 words. byte-quarter: 42 extra bytes add at most 11 tokens.
  std::size_t fim_overhead_bound() const;

 private:
  explicit TokenBudgeter(Mode mode) : mode_(mode) {}

  Mode mode_ = Mode::whitespace_word;
  CountFn external_;
  std::size_t external_reserve_ = 0;
};

std::size_t count_whitespace_words(std::string_view text);

}  // namespace codeprep
