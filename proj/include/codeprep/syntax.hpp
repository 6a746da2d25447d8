#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

struct TSParser;
struct TSTree;
struct TSLanguage;

namespace codeprep::syntax {

// Language tags with a bundled grammar: c, go, java, javascript, python, rust.
std::span<const std::string_view> supported_languages();
bool supports(std::string_view language);

// Node kinds treated as "basic logic blocks" for FIM middles: bodies of
// functions, loops and branches, plus expression statements. Empty for
// unsupported languages.
std::span<const std::string_view> block_kinds(std::string_view language);

struct NodeSpan {
  std::string_view kind;
  std::uint32_t start_byte = 0;
  std::uint32_t end_byte = 0;
  std::uint32_t depth = 0;

  bool operator==(const NodeSpan&) const = default;
};

class SyntaxTree {
 public:
  SyntaxTree(TSTree* tree, std::string source);
  SyntaxTree(SyntaxTree&&) noexcept = default;
  SyntaxTree& operator=(SyntaxTree&&) noexcept = default;

  const std::string& source() const { return source_; }
  bool has_error() const;
  // ERROR plus MISSING nodes.
  std::size_t error_node_count() const;
  std::string sexp() const;

  // Error-free, non-empty nodes whose kind is in `kinds`, in pre-order.
  std::vector<NodeSpan> collect(std::span<const std::string_view> kinds) const;

 private:
  struct Deleter {
    void operator()(TSTree* tree) const;
  };
  std::unique_ptr<TSTree, Deleter> tree_;
  std::string source_;
};

// Not thread-safe; use one parser per worker.
class Parser {
 public:
  Parser();
  Parser(Parser&&) noexcept = default;
  Parser& operator=(Parser&&) noexcept = default;

  // Throws UnsupportedLanguage for languages without a grammar.
  SyntaxTree parse(std::string_view language, std::string_view source);

 private:
  struct Deleter {
    void operator()(TSParser* parser) const;
  };
  std::unique_ptr<TSParser, Deleter> parser_;
};

}  // namespace codeprep::syntax
