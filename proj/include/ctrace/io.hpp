#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ctrace/analysis.hpp"
#include "ctrace/engine.hpp"
#include "ctrace/model.hpp"
#include "ctrace/oracle.hpp"
#include "ctrace/reduction.hpp"

namespace ctrace {

using Json = nlohmann::ordered_json;

ModelSpec model_from_json(const Json& j);
Json model_to_json(const ModelSpec& spec);

/// Descriptor forms: recency `h` (basic, univariate), `[h, span]`
/// (bivariate), `[parent, category]` by name or index (general).
TypeId parse_descriptor(const TypeTable& table, const Json& j);
Json descriptor_json(const TypeTable& table, TypeId id);

/// `[[descriptor, count], ...]`
FrontierState state_from_json(const TypeTable& table, const Json& j);
Json state_to_json(const TypeTable& table, const std::vector<std::uint32_t>& counts);
PriorityOrdering ordering_from_json(const TypeTable& table, const Json& j);
Json ordering_to_json(const TypeTable& table, const PriorityOrdering& ordering);

Json policy_to_json(const TypeTable& table, const IndexPolicy& policy);
Json actions_to_json(const TypeTable& table, const BruteForceResult& result);
Json bandit_to_json(const TypeTable& table, const BanditInstance& instance);
Json reduction_report_to_json(const TypeTable& table, const ReductionReport& report);
Json structure_report_to_json(const StructureReport& report);
Json sweep_to_json(const SweepResult& sweep);
std::string sweep_to_csv(const SweepResult& sweep);

/// One run configuration: `{model, initial_state, run}`.
struct RunConfig {
  ModelSpec model;
  Json initial_state;  // null when absent
  Json run;            // object, possibly empty
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ctrace
