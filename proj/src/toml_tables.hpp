#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <toml++/toml.hpp>

#include "codeprep/syntax_gate.hpp"

namespace codeprep::detail {

// Throws ConfigError naming `where` for any key outside `allowed`.
void check_keys(const toml::table& table, std::initializer_list<std::string_view> allowed,
                std::string_view where);

bool get_bool(const toml::table& t, std::string_view key, bool fallback, std::string_view where);
std::uint64_t get_u64(const toml::table& t, std::string_view key, std::uint64_t fallback,
                      std::string_view where);
double get_double(const toml::table& t, std::string_view key, double fallback,
                  std::string_view where);
std::string get_string(const toml::table& t, std::string_view key, std::string fallback,
                       std::string_view where);
std::vector<std::string> get_strings(const toml::table& t, std::string_view key,
                                     std::vector<std::string> fallback, std::string_view where);
std::vector<double> get_doubles(const toml::table& t, std::string_view key,
                                std::vector<double> fallback, std::string_view where);
std::vector<std::uint64_t> get_u64s(const toml::table& t, std::string_view key,
                                    std::vector<std::uint64_t> fallback, std::string_view where);
const toml::table* get_table(const toml::table& t, std::string_view key, std::string_view where);

toml::table parse_toml(std::string_view text, std::string_view where);

// `with_seed` false leaves the seed out (the pipeline owns it).
GatePolicy gate_policy_from_table(const toml::table& t, std::string_view where);
toml::table gate_policy_table(const GatePolicy& policy, bool with_seed);

}  // namespace codeprep::detail
