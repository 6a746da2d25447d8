#include "toml_tables.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "codeprep/errors.hpp"

namespace codeprep::detail {

namespace {

[[noreturn]] void type_error(std::string_view where, std::string_view key, std::string_view want) {
  throw ConfigError(fmt::format("{}: '{}' must be {}", where, key, want));
}

}  // namespace

void check_keys(const toml::table& table, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  for (const auto& [key, node] : table) {
    if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key.str()));
    }
  }
}

bool get_bool(const toml::table& t, std::string_view key, bool fallback, std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (!n->is_boolean()) type_error(where, key, "a boolean");
  return *n->value<bool>();
}

std::uint64_t get_u64(const toml::table& t, std::string_view key, std::uint64_t fallback,
                      std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (!n->is_integer() || *n->value<std::int64_t>() < 0) {
    type_error(where, key, "a non-negative integer");
  }
  return static_cast<std::uint64_t>(*n->value<std::int64_t>());
}

double get_double(const toml::table& t, std::string_view key, double fallback,
                  std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (!n->is_number()) type_error(where, key, "a number");
  return *n->value<double>();
}

std::string get_string(const toml::table& t, std::string_view key, std::string fallback,
                       std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (!n->is_string()) type_error(where, key, "a string");
  return *n->value<std::string>();
}

std::vector<std::string> get_strings(const toml::table& t, std::string_view key,
                                     std::vector<std::string> fallback, std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  const toml::array* arr = n->as_array();
  if (!arr) type_error(where, key, "an array of strings");
  std::vector<std::string> out;
  for (const auto& item : *arr) {
    if (!item.is_string()) type_error(where, key, "an array of strings");
    out.push_back(*item.value<std::string>());
  }
  return out;
}

std::vector<double> get_doubles(const toml::table& t, std::string_view key,
                                std::vector<double> fallback, std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  const toml::array* arr = n->as_array();
  if (!arr) type_error(where, key, "an array of numbers");
  std::vector<double> out;
  for (const auto& item : *arr) {
    if (!item.is_number()) type_error(where, key, "an array of numbers");
    out.push_back(*item.value<double>());
  }
  return out;
}

std::vector<std::uint64_t> get_u64s(const toml::table& t, std::string_view key,
                                    std::vector<std::uint64_t> fallback, std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  const toml::array* arr = n->as_array();
  if (!arr) type_error(where, key, "an array of integers");
  std::vector<std::uint64_t> out;
  for (const auto& item : *arr) {
    if (!item.is_integer() || *item.value<std::int64_t>() < 0) {
      type_error(where, key, "an array of non-negative integers");
    }
    out.push_back(static_cast<std::uint64_t>(*item.value<std::int64_t>()));
  }
  return out;
}

const toml::table* get_table(const toml::table& t, std::string_view key, std::string_view where) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) type_error(where, key, "a table");
  return n->as_table();
}

toml::table parse_toml(std::string_view text, std::string_view where) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(fmt::format("{}: {} (line {})", where, e.description(),
                                  e.source().begin.line));
  }
}

GatePolicy gate_policy_from_table(const toml::table& t, std::string_view where) {
  check_keys(t,
             {"seed", "no_code_keep", "long_tail_keep", "require_static", "keep_unsupported",
              "min_total", "score_max", "mainstream", "weights"},
             where);
  GatePolicy p;
  p.seed = get_u64(t, "seed", p.seed, where);
  p.no_code_keep = get_double(t, "no_code_keep", p.no_code_keep, where);
  p.long_tail_keep = get_double(t, "long_tail_keep", p.long_tail_keep, where);
  p.require_static = get_bool(t, "require_static", p.require_static, where);
  p.keep_unsupported = get_bool(t, "keep_unsupported", p.keep_unsupported, where);
  if (t.contains("min_total")) p.min_total = get_double(t, "min_total", 0.0, where);
  p.score_max = get_double(t, "score_max", p.score_max, where);
  if (t.contains("mainstream")) {
    const auto list = get_strings(t, "mainstream", {}, where);
    p.mainstream = {list.begin(), list.end()};
  }
  if (const toml::table* w = get_table(t, "weights", where)) {
    for (const auto& [key, node] : *w) {
      const auto it = std::find(kChecklistCriteria.begin(), kChecklistCriteria.end(), key.str());
      if (it == kChecklistCriteria.end()) {
        throw ConfigError(fmt::format("{}: unknown criterion '{}'", where, key.str()));
      }
      p.weights[static_cast<std::size_t>(it - kChecklistCriteria.begin())] =
          get_double(*w, key.str(), 0.0, where);
    }
  }
  p.validate();
  return p;
}

toml::table gate_policy_table(const GatePolicy& p, bool with_seed) {
  toml::table t;
  if (with_seed) t.insert("seed", static_cast<std::int64_t>(p.seed));
  t.insert("no_code_keep", p.no_code_keep);
  t.insert("long_tail_keep", p.long_tail_keep);
  t.insert("require_static", p.require_static);
  t.insert("keep_unsupported", p.keep_unsupported);
  if (p.min_total) t.insert("min_total", *p.min_total);
  t.insert("score_max", p.score_max);
  toml::array mainstream;
  for (const auto& m : p.mainstream) mainstream.push_back(m);
  t.insert("mainstream", std::move(mainstream));
  toml::table weights;
  for (std::size_t i = 0; i < kChecklistCriteria.size(); ++i) {
    weights.insert(kChecklistCriteria[i], p.weights[i]);
  }
  t.insert("weights", std::move(weights));
  return t;
}

}  // namespace codeprep::detail
