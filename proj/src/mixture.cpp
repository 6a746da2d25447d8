#include "codeprep/mixture.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "codeprep/errors.hpp"

namespace codeprep {

MixturePlan plan_mixture(const std::map<std::string, std::size_t>& available,
                         const std::map<std::string, double>& targets, double max_epochs) {
  if (!(max_epochs >= 1.0)) throw PlanError(fmt::format("max_epochs {} below 1", max_epochs));
  double weight_sum = 0.0;
  for (const auto& [domain, w] : targets) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw PlanError(fmt::format("target for {} must be a non-negative number", domain));
    }
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw PlanError("mixture targets sum to zero");

  MixturePlan plan;
  plan.max_epochs = max_epochs;
  double once = 0.0;
  double cap = std::numeric_limits<double>::infinity();
  for (const auto& [domain, w] : targets) {
    if (w == 0.0) continue;
    const auto it = available.find(domain);
    const std::size_t supply = it == available.end() ? 0 : it->second;
    if (supply == 0) {
      throw PlanError(fmt::format("domain {} has target {} but no available tokens", domain, w));
    }
    const double t = w / weight_sum;
    plan.targets[domain] = t;
    plan.available[domain] = supply;
    once = std::max(once, static_cast<double>(supply) / t);
    cap = std::min(cap, static_cast<double>(supply) * max_epochs / t);
  }
  // tiny relative slack absorbs rounding in supply / t
  plan.expected_total = static_cast<std::size_t>(std::floor(std::min(once, cap) * (1 + 1e-12)));
  for (const auto& [domain, t] : plan.targets) {
    const double demand = t * static_cast<double>(plan.expected_total);
    plan.epochs[domain] =
        std::min(max_epochs, demand / static_cast<double>(plan.available[domain]));
  }
  return plan;
}

std::map<std::string, double> parse_targets(std::string_view spec) {
  std::map<std::string, double> out;
  while (!spec.empty()) {
    const std::size_t comma = spec.find(',');
    const std::string_view item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError(fmt::format("bad mixture target '{}', expected domain=weight", item));
    }
    const std::string value(item.substr(eq + 1));
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) {
      throw ConfigError(fmt::format("bad mixture weight '{}'", value));
    }
    if (!out.emplace(std::string(item.substr(0, eq)), w).second) {
      throw ConfigError(fmt::format("mixture target '{}' given twice", item.substr(0, eq)));
    }
  }
  return out;
}

std::vector<Emission> sample_interleaved(const std::map<std::string, std::vector<MixItem>>& streams,
                                         const MixturePlan& plan, std::uint64_t /*seed*/) {
  struct Cursor {
    const std::string* domain;
    const std::vector<MixItem>* items;
    double target;
    std::size_t max_passes;
    std::size_t next = 0;
    std::size_t pass = 0;
    std::size_t emitted = 0;
  };
  std::vector<Cursor> cursors;  // map order = lexicographic domain order
  for (const auto& [domain, t] : plan.targets) {
    const auto it = streams.find(domain);
    if (it == streams.end() || it->second.empty()) {
      throw PlanError(fmt::format("no stream for planned domain {}", domain));
    }
    std::size_t supplied = 0;
    for (const auto& item : it->second) supplied += item.tokens;
    const auto planned = plan.available.find(domain);
    if (planned != plan.available.end() && planned->second != supplied) {
      throw PlanError(fmt::format("stream {} supplies {} tokens but the plan expects {}", domain,
                                  supplied, planned->second));
    }
    const double e = plan.epochs.at(domain);
    const auto passes = static_cast<std::size_t>(std::ceil(e - 1e-9));
    cursors.push_back({&it->first, &it->second, t, std::max<std::size_t>(1, passes)});
  }

  std::vector<Emission> out;
  std::size_t total = 0;
  while (total < plan.expected_total) {
    Cursor* best = nullptr;
    for (auto& c : cursors) {
      // emitted/target compared by cross-multiplication
      if (!best || static_cast<double>(c.emitted) * best->target <
                       static_cast<double>(best->emitted) * c.target) {
        best = &c;
      }
    }
    Cursor& c = *best;
    if (c.next == c.items->size()) {
      c.next = 0;
      ++c.pass;
    }
    if (c.pass >= c.max_passes) {
      throw PlanError(fmt::format("stream {} exhausted after {} planned pass(es)", *c.domain,
                                  c.max_passes));
    }
    const MixItem& item = (*c.items)[c.next];
    out.push_back({*c.domain, c.next, c.pass, item.tokens});
    ++c.next;
    c.emitted += item.tokens;
    total += item.tokens;
  }
  return out;
}

std::map<std::string, DomainTally> tally(const std::vector<Emission>& emissions,
                                         const MixturePlan& plan) {
  std::map<std::string, DomainTally> out;
  std::size_t total = 0;
  for (const auto& [domain, t] : plan.targets) {
    out[domain].target = t;
    out[domain].epochs = plan.epochs.at(domain);
  }
  for (const auto& e : emissions) {
    out[e.domain].tokens += e.tokens;
    total += e.tokens;
  }
  for (auto& [domain, t] : out) {
    t.achieved = total == 0 ? 0.0 : static_cast<double>(t.tokens) / static_cast<double>(total);
  }
  return out;
}

nlohmann::ordered_json mixture_report(const std::vector<Emission>& emissions,
                                      const MixturePlan& plan) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [domain, t] : tally(emissions, plan)) {
    j[domain] = {{"target", t.target},
                 {"achieved", t.achieved},
                 {"tokens", t.tokens},
                 {"epochs", t.epochs}};
  }
  return j;
}

nlohmann::ordered_json plan_json(const MixturePlan& plan) {
  nlohmann::ordered_json j;
  j["expected_total"] = plan.expected_total;
  j["max_epochs"] = plan.max_epochs;
  j["targets"] = plan.targets;
  j["available"] = plan.available;
  j["epochs"] = plan.epochs;
  return j;
}

}  // namespace codeprep
