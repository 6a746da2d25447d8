#include "codeprep/budget.hpp"

#include <string>

#include "codeprep/errors.hpp"

namespace codeprep {

namespace {

constexpr bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::size_t count_whitespace_words(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

TokenBudgeter TokenBudgeter::external(CountFn fn, std::size_t fim_reserve) {
  if (!fn) throw ConfigError("external budgeter needs a counting function");
  TokenBudgeter b(Mode::external);
  b.external_ = std::move(fn);
  b.external_reserve_ = fim_reserve;
  return b;
}

TokenBudgeter TokenBudgeter::from_name(std::string_view name) {
  if (name == "whitespace-word") return whitespace_word();
  if (name == "byte-quarter") return byte_quarter();
  throw ConfigError("unknown budgeter: " + std::string(name) +
                    " (expected whitespace-word or byte-quarter)");
}

std::size_t TokenBudgeter::count(std::string_view text) const {
  switch (mode_) {
    case Mode::whitespace_word:
      return count_whitespace_words(text);
    case Mode::byte_quarter:
      return (text.size() + 3) / 4;
    case Mode::external:
      return external_(text);
  }
  return 0;
}

std::string_view TokenBudgeter::name() const {
  switch (mode_) {
    case Mode::whitespace_word:
      return "whitespace-word";
    case Mode::byte_quarter:
      return "byte-quarter";
    case Mode::external:
      return "external";
  }
  return "";
}

std::size_t TokenBudgeter::fim_overhead_bound() const {
  switch (mode_) {
    case Mode::whitespace_word:
      return 6;
    case Mode::byte_quarter:
      return 11;
    case Mode::external:
      return external_reserve_;
  }
  return 0;
}

}  // namespace codeprep
