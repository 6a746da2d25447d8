#include "codeprep/syntax.hpp"

#include <array>
#include <cstdlib>

#include <tree_sitter/api.h>

#include "codeprep/errors.hpp"

extern "C" {
const TSLanguage* tree_sitter_c();
const TSLanguage* tree_sitter_go();
const TSLanguage* tree_sitter_java();
const TSLanguage* tree_sitter_javascript();
const TSLanguage* tree_sitter_python();
const TSLanguage* tree_sitter_rust();
}

namespace codeprep::syntax {

namespace {

using namespace std::string_view_literals;

struct Grammar {
  std::string_view language;
  const TSLanguage* (*load)();
  std::span<const std::string_view> blocks;
};

constexpr std::array kCBlocks{"compound_statement"sv, "expression_statement"sv};
constexpr std::array kGoBlocks{"block"sv, "expression_statement"sv};
constexpr std::array kJavaBlocks{"block"sv, "constructor_body"sv, "expression_statement"sv};
constexpr std::array kJsBlocks{"statement_block"sv, "expression_statement"sv};
constexpr std::array kPythonBlocks{"block"sv, "expression_statement"sv};
constexpr std::array kRustBlocks{"block"sv, "expression_statement"sv};

constexpr std::array<Grammar, 6> kGrammars{{
    {"c", tree_sitter_c, kCBlocks},
    {"go", tree_sitter_go, kGoBlocks},
    {"java", tree_sitter_java, kJavaBlocks},
    {"javascript", tree_sitter_javascript, kJsBlocks},
    {"python", tree_sitter_python, kPythonBlocks},
    {"rust", tree_sitter_rust, kRustBlocks},
}};

constexpr std::array kSupported{"c"sv, "go"sv, "java"sv, "javascript"sv, "python"sv, "rust"sv};

const Grammar* find_grammar(std::string_view language) {
  for (const auto& g : kGrammars) {
    if (g.language == language) return &g;
  }
  return nullptr;
}

}  // namespace

std::span<const std::string_view> supported_languages() { return kSupported; }

bool supports(std::string_view language) { return find_grammar(language) != nullptr; }

std::span<const std::string_view> block_kinds(std::string_view language) {
  const Grammar* g = find_grammar(language);
  return g ? g->blocks : std::span<const std::string_view>{};
}

void SyntaxTree::Deleter::operator()(TSTree* tree) const { ts_tree_delete(tree); }
void Parser::Deleter::operator()(TSParser* parser) const { ts_parser_delete(parser); }

SyntaxTree::SyntaxTree(TSTree* tree, std::string source)
    : tree_(tree), source_(std::move(source)) {}

bool SyntaxTree::has_error() const { return ts_node_has_error(ts_tree_root_node(tree_.get())); }

std::size_t SyntaxTree::error_node_count() const {
  std::size_t count = 0;
  TSTreeCursor cursor = ts_tree_cursor_new(ts_tree_root_node(tree_.get()));
  for (;;) {
    const TSNode node = ts_tree_cursor_current_node(&cursor);
    if (ts_node_is_error(node) || ts_node_is_missing(node)) ++count;
    // only descend where an error can still be found
    if (ts_node_has_error(node) && ts_tree_cursor_goto_first_child(&cursor)) continue;
    bool advanced = false;
    while (!advanced) {
      if (ts_tree_cursor_goto_next_sibling(&cursor)) {
        advanced = true;
      } else if (!ts_tree_cursor_goto_parent(&cursor)) {
        ts_tree_cursor_delete(&cursor);
        return count;
      }
    }
  }
}

std::string SyntaxTree::sexp() const {
  char* raw = ts_node_string(ts_tree_root_node(tree_.get()));
  std::string out(raw);
  std::free(raw);
  return out;
}

std::vector<NodeSpan> SyntaxTree::collect(std::span<const std::string_view> kinds) const {
  std::vector<NodeSpan> out;
  TSTreeCursor cursor = ts_tree_cursor_new(ts_tree_root_node(tree_.get()));
  std::uint32_t depth = 0;
  for (;;) {
    const TSNode node = ts_tree_cursor_current_node(&cursor);
    const std::string_view type = ts_node_type(node);
    if (ts_node_is_named(node) && !ts_node_has_error(node) && !ts_node_is_missing(node)) {
      for (const auto kind : kinds) {
        if (kind != type) continue;
        const std::uint32_t start = ts_node_start_byte(node);
        const std::uint32_t end = ts_node_end_byte(node);
        if (end > start) out.push_back({kind, start, end, depth});
        break;
      }
    }
    if (ts_tree_cursor_goto_first_child(&cursor)) {
      ++depth;
      continue;
    }
    bool advanced = false;
    while (!advanced) {
      if (ts_tree_cursor_goto_next_sibling(&cursor)) {
        advanced = true;
      } else if (ts_tree_cursor_goto_parent(&cursor)) {
        --depth;
      } else {
        ts_tree_cursor_delete(&cursor);
        return out;
      }
    }
  }
}

Parser::Parser() : parser_(ts_parser_new()) {
  if (!parser_) throw Error("cannot allocate tree-sitter parser");
}

SyntaxTree Parser::parse(std::string_view language, std::string_view source) {
  const Grammar* g = find_grammar(language);
  if (!g) throw UnsupportedLanguage(std::string(language));
  if (!ts_parser_set_language(parser_.get(), g->load())) {
    throw Error("tree-sitter ABI mismatch for grammar " + std::string(language));
  }
  std::string owned(source);
  TSTree* tree = ts_parser_parse_string(parser_.get(), nullptr, owned.data(),
                                        static_cast<std::uint32_t>(owned.size()));
  if (!tree) throw Error("tree-sitter parse aborted for " + std::string(language));
  return SyntaxTree(tree, std::move(owned));
}

}  // namespace codeprep::syntax
