#include <sstream>

#include <fmt/format.h>

#include "codeprep/errors.hpp"
#include "codeprep/pipeline.hpp"
#include "toml_tables.hpp"

namespace codeprep {

using namespace detail;

PipelineConfig PipelineConfig::disabled() {
  PipelineConfig c;
  c.ingest.enabled = false;
  c.filter.enabled = false;
  c.decontam.enabled = false;
  c.fim.enabled = false;
  c.pack.enabled = false;
  c.mix.enabled = false;
  c.gate.enabled = false;
  c.needle.enabled = false;
  return c;
}

namespace {

const toml::table& section(const toml::table& root, std::string_view key) {
  static const toml::table kEmpty;
  const toml::table* t = get_table(root, key, "pipeline config");
  return t ? *t : kEmpty;
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view toml_text) {
  const toml::table root = parse_toml(toml_text, "pipeline config");
  check_keys(root,
             {"seed", "output_dir", "budgeter", "ingest", "filter", "decontam", "fim", "pack",
              "mix", "gate", "needle"},
             "pipeline config");
  PipelineConfig c;
  c.seed = get_u64(root, "seed", c.seed, "pipeline config");
  c.output_dir = get_string(root, "output_dir", c.output_dir, "pipeline config");
  c.budgeter = get_string(root, "budgeter", c.budgeter, "pipeline config");
  TokenBudgeter::from_name(c.budgeter);

  {
    const toml::table& t = section(root, "ingest");
    check_keys(t, {"enabled", "sources", "max_file_bytes", "languages"}, "[ingest]");
    c.ingest.enabled = get_bool(t, "enabled", c.ingest.enabled, "[ingest]");
    c.ingest.max_file_bytes = get_u64(t, "max_file_bytes", c.ingest.max_file_bytes, "[ingest]");
    c.ingest.languages = get_string(t, "languages", c.ingest.languages, "[ingest]");
    if (const toml::node* n = t.get("sources")) {
      const toml::array* arr = n->as_array();
      if (!arr) throw ConfigError("[ingest]: 'sources' must be an array of tables");
      for (const auto& item : *arr) {
        const toml::table* s = item.as_table();
        if (!s) throw ConfigError("[ingest]: 'sources' must be an array of tables");
        check_keys(*s, {"path", "domain", "layout", "repo_name"}, "[[ingest.sources]]");
        IngestSource src;
        src.path = get_string(*s, "path", "", "[[ingest.sources]]");
        if (src.path.empty()) throw ConfigError("[[ingest.sources]]: 'path' is required");
        src.domain = parse_domain(get_string(*s, "domain", "code", "[[ingest.sources]]"));
        src.layout = parse_repo_layout(get_string(*s, "layout", "subdirs", "[[ingest.sources]]"));
        src.repo_name = get_string(*s, "repo_name", "", "[[ingest.sources]]");
        c.ingest.sources.push_back(std::move(src));
      }
    }
  }
  {
    const toml::table& t = section(root, "filter");
    check_keys(t, {"enabled", "cascade"}, "[filter]");
    c.filter.enabled = get_bool(t, "enabled", c.filter.enabled, "[filter]");
    c.filter.cascade = get_string(t, "cascade", c.filter.cascade, "[filter]");
  }
  {
    const toml::table& t = section(root, "decontam");
    check_keys(t, {"enabled", "test_sets", "n"}, "[decontam]");
    c.decontam.enabled = get_bool(t, "enabled", c.decontam.enabled, "[decontam]");
    c.decontam.test_sets = get_strings(t, "test_sets", c.decontam.test_sets, "[decontam]");
    c.decontam.n = get_u64(t, "n", c.decontam.n, "[decontam]");
    if (c.decontam.n == 0) throw ConfigError("[decontam]: 'n' must be positive");
  }
  {
    const toml::table& t = section(root, "fim");
    check_keys(t, {"enabled", "rate", "min_middle_chars", "max_middle_fraction", "ast_languages"},
               "[fim]");
    c.fim.enabled = get_bool(t, "enabled", c.fim.enabled, "[fim]");
    c.fim.rate = get_double(t, "rate", c.fim.rate, "[fim]");
    c.fim.min_middle_chars = get_u64(t, "min_middle_chars", c.fim.min_middle_chars, "[fim]");
    c.fim.max_middle_fraction =
        get_double(t, "max_middle_fraction", c.fim.max_middle_fraction, "[fim]");
    c.fim.ast_languages = get_strings(t, "ast_languages", c.fim.ast_languages, "[fim]");
    SpanPolicy{c.fim.rate, c.fim.min_middle_chars, c.fim.max_middle_fraction, 0}.validate();
  }
  {
    const toml::table& t = section(root, "pack");
    check_keys(t, {"enabled", "budget", "order", "fim_last"}, "[pack]");
    c.pack.enabled = get_bool(t, "enabled", c.pack.enabled, "[pack]");
    c.pack.budget = get_u64(t, "budget", c.pack.budget, "[pack]");
    c.pack.order = get_string(t, "order", c.pack.order, "[pack]");
    c.pack.fim_last = get_bool(t, "fim_last", c.pack.fim_last, "[pack]");
    parse_file_order(c.pack.order);
  }
  {
    const toml::table& t = section(root, "mix");
    check_keys(t, {"enabled", "targets", "max_epochs"}, "[mix]");
    c.mix.enabled = get_bool(t, "enabled", c.mix.enabled, "[mix]");
    c.mix.max_epochs = get_double(t, "max_epochs", c.mix.max_epochs, "[mix]");
    if (const toml::table* targets = get_table(t, "targets", "[mix]")) {
      c.mix.targets.clear();
      for (const auto& [key, node] : *targets) {
        const double w = get_double(*targets, key.str(), 0.0, "[mix.targets]");
        if (!(w >= 0.0)) {
          throw ConfigError(fmt::format("[mix.targets]: '{}' must be non-negative", key.str()));
        }
        c.mix.targets[std::string(key.str())] = w;
      }
    }
  }
  {
    const toml::table& t = section(root, "gate");
    check_keys(t, {"enabled", "input", "scores", "policy"}, "[gate]");
    c.gate.enabled = get_bool(t, "enabled", c.gate.enabled, "[gate]");
    c.gate.input = get_string(t, "input", c.gate.input, "[gate]");
    c.gate.scores = get_string(t, "scores", c.gate.scores, "[gate]");
    if (const toml::table* p = get_table(t, "policy", "[gate]")) {
      if (p->contains("seed")) throw ConfigError("[gate.policy]: the seed is the pipeline seed");
      c.gate.policy = gate_policy_from_table(*p, "[gate.policy]");
    }
  }
  {
    const toml::table& t = section(root, "needle");
    check_keys(t, {"enabled", "depths", "lengths", "needle_file", "needle_path", "language"},
               "[needle]");
    c.needle.enabled = get_bool(t, "enabled", c.needle.enabled, "[needle]");
    c.needle.depths = get_doubles(t, "depths", c.needle.depths, "[needle]");
    c.needle.lengths = get_u64s(t, "lengths", c.needle.lengths, "[needle]");
    c.needle.needle_file = get_string(t, "needle_file", c.needle.needle_file, "[needle]");
    c.needle.needle_path = get_string(t, "needle_path", c.needle.needle_path, "[needle]");
    c.needle.language = get_string(t, "language", c.needle.language, "[needle]");
    if (c.needle.depths.empty() || c.needle.lengths.empty()) {
      throw ConfigError("[needle]: depths and lengths must be non-empty");
    }
    for (const double d : c.needle.depths) {
      if (!(d >= 0.0 && d <= 1.0)) throw ConfigError(fmt::format("[needle]: depth {} outside [0, 1]", d));
    }
    for (const auto len : c.needle.lengths) {
      if (len == 0 || len > kMaxContextBudget) {
        throw ConfigError(fmt::format("[needle]: length {} outside 1..{}", len, kMaxContextBudget));
      }
    }
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_file(path));
}

namespace {

template <class T>
toml::array to_array(const std::vector<T>& values) {
  toml::array arr;
  for (const auto& v : values) {
    if constexpr (std::is_same_v<T, std::uint64_t>) {
      arr.push_back(static_cast<std::int64_t>(v));
    } else {
      arr.push_back(v);
    }
  }
  return arr;
}

}  // namespace

std::string pipeline_config_toml(const PipelineConfig& c) {
  toml::table root;
  root.insert("seed", static_cast<std::int64_t>(c.seed));
  root.insert("output_dir", c.output_dir);
  root.insert("budgeter", c.budgeter);

  toml::table ingest;
  ingest.insert("enabled", c.ingest.enabled);
  ingest.insert("max_file_bytes", static_cast<std::int64_t>(c.ingest.max_file_bytes));
  ingest.insert("languages", c.ingest.languages);
  toml::array sources;
  for (const auto& s : c.ingest.sources) {
    toml::table src;
    src.insert("path", s.path);
    src.insert("domain", std::string(to_string(s.domain)));
    src.insert("layout", s.layout == RepoLayout::single ? "single" : "subdirs");
    src.insert("repo_name", s.repo_name);
    sources.push_back(std::move(src));
  }
  ingest.insert("sources", std::move(sources));
  root.insert("ingest", std::move(ingest));

  root.insert("filter", toml::table{{"enabled", c.filter.enabled}, {"cascade", c.filter.cascade}});
  root.insert("decontam", toml::table{{"enabled", c.decontam.enabled},
                                      {"test_sets", to_array(c.decontam.test_sets)},
                                      {"n", static_cast<std::int64_t>(c.decontam.n)}});
  root.insert("fim",
              toml::table{{"enabled", c.fim.enabled},
                          {"rate", c.fim.rate},
                          {"min_middle_chars", static_cast<std::int64_t>(c.fim.min_middle_chars)},
                          {"max_middle_fraction", c.fim.max_middle_fraction},
                          {"ast_languages", to_array(c.fim.ast_languages)}});
  root.insert("pack", toml::table{{"enabled", c.pack.enabled},
                                  {"budget", static_cast<std::int64_t>(c.pack.budget)},
                                  {"order", c.pack.order},
                                  {"fim_last", c.pack.fim_last}});
  toml::table targets;
  for (const auto& [d, w] : c.mix.targets) targets.insert(d, w);
  root.insert("mix", toml::table{{"enabled", c.mix.enabled},
                                 {"max_epochs", c.mix.max_epochs},
                                 {"targets", std::move(targets)}});
  root.insert("gate", toml::table{{"enabled", c.gate.enabled},
                                  {"input", c.gate.input},
                                  {"scores", c.gate.scores},
                                  {"policy", gate_policy_table(c.gate.policy, false)}});
  root.insert("needle", toml::table{{"enabled", c.needle.enabled},
                                    {"depths", to_array(c.needle.depths)},
                                    {"lengths", to_array(c.needle.lengths)},
                                    {"needle_file", c.needle.needle_file},
                                    {"needle_path", c.needle.needle_path},
                                    {"language", c.needle.language}});
  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

void save_pipeline_config(const PipelineConfig& config, const std::filesystem::path& path) {
  write_file(path, pipeline_config_toml(config));
}

}  // namespace codeprep
