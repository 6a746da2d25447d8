#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace codeprep {

inline constexpr double kDefaultMaxEpochs = 4.0;

struct MixturePlan {
  std::map<std::string, double> targets;  // normalized, sums to 1
  std::map<std::string, std::size_t> available;
  std::map<std::string, double> epochs;
  std::size_t expected_total = 0;
  double max_epochs = kDefaultMaxEpochs;
};

// Targets are weights and get normalized. The total is the smallest one at
// which every planned domain is read at least once, capped so that no domain
// repeats more than max_epochs times; epochs[d] = target[d] * total /
// available[d]. Domains with a zero target are left out. Throws PlanError
// when a positive target has no supply or the weights are unusable.
MixturePlan plan_mixture(const std::map<std::string, std::size_t>& available,
                         const std::map<std::string, double>& targets,
                         double max_epochs = kDefaultMaxEpochs);

// "code=0.7,text=0.2,math=0.1"; throws ConfigError.
std::map<std::string, double> parse_targets(std::string_view spec);

struct MixItem {
  std::string id;
  std::size_t tokens = 0;
};

struct Emission {
  std::string domain;
  std::size_t index = 0;  // position in the domain's stream
  std::size_t pass = 0;   // 0 on the first read
  std::size_t tokens = 0;
};

// Deficit round robin: always emit next from the planned domain with the
// smallest emitted/target ratio (ties to the smaller name), wrapping streams
// for repeat passes, until expected_total tokens are out. The order is fully
// determined by streams and plan; `seed` is accepted for interface symmetry.
// Throws PlanError when a stream would need more passes than planned.
std::vector<Emission> sample_interleaved(const std::map<std::string, std::vector<MixItem>>& streams,
                                         const MixturePlan& plan, std::uint64_t seed = 0);

struct DomainTally {
  double target = 0.0;
  double achieved = 0.0;
  std::size_t tokens = 0;
  double epochs = 0.0;
};

std::map<std::string, DomainTally> tally(const std::vector<Emission>& emissions,
                                         const MixturePlan& plan);

// {domain: {target, achieved, tokens, epochs}}
nlohmann::ordered_json mixture_report(const std::vector<Emission>& emissions,
                                      const MixturePlan& plan);

nlohmann::ordered_json plan_json(const MixturePlan& plan);

}  // namespace codeprep
