#pragma once

#include <stdexcept>
#include <string>

namespace codeprep {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown sentinel name.
class RegistryError : public Error {
 public:
  using Error::Error;
};

// Rendering or parsing of a sentinel-delimited format failed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

class UnsupportedLanguage : public Error {
 public:
  explicit UnsupportedLanguage(const std::string& language)
      : Error("unsupported language: " + language), language_(language) {}
  const std::string& language() const { return language_; }

 private:
  std::string language_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace codeprep
