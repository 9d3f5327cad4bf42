#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctrace/engine.hpp"
#include "ctrace/model.hpp"

namespace ctrace {

struct ForestNode {
  std::uint32_t id = 0;
  TypeId type = 0;
  std::int64_t parent = -1;  // -1 for index cases
  bool infected = false;
  std::uint32_t first_child = 0;  // children occupy consecutive ids
  std::uint32_t child_count = 0;
};

/// Phase-1 realization. Only infected nodes have materialized children.
struct RealizedForest {
  std::vector<ForestNode> nodes;
  std::vector<std::uint32_t> roots;
};

struct TraceStep {
  std::uint64_t t = 0;
  std::uint32_t node = 0;
  TypeId type = 0;
  bool infected = false;
  double benefit = 0.0;  // discounted benefit collected at this step
};

struct TraceLog {
  std::vector<TraceStep> steps;
};

struct TraceResult {
  double total = 0.0;
  TraceLog log;
};

inline constexpr std::uint64_t kDefaultForestCap = 1'000'000;

/// Each node draws from its own stream, derived from its parent's stream and
/// its position among the siblings, so a forest does not depend on the order
/// in which nodes are expanded.
RealizedForest sample_forest(const TypeTable& table, const FrontierState& initial, std::uint64_t seed,
                             std::uint64_t forest_cap = kDefaultForestCap);
void sample_forest_into(const TypeTable& table, const FrontierState& initial, std::uint64_t seed,
                        RealizedForest& out, std::uint64_t forest_cap = kDefaultForestCap);

/// Phase 2: repeatedly query the frontier node of highest priority type
/// (lowest node id within a type) until the frontier is empty.
TraceResult run_tracer(const TypeTable& table, const RealizedForest& forest, const PriorityOrdering& policy,
                       bool record_log = true);

struct PolicyEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

PolicyEstimate estimate_policy_value(const TypeTable& table, const FrontierState& initial,
                                     const PriorityOrdering& policy, std::uint64_t replicates,
                                     std::uint64_t seed, unsigned threads = 1);

std::string trace_log_csv(const TypeTable& table, const TraceLog& log);

}  // namespace ctrace
