#pragma once

#include <cstdint>
#include <vector>

#include "ctrace/model.hpp"

namespace ctrace {

/// One arm class. Pulling it yields, with probability `infected_probability`,
/// reward `reward` and offspring drawn from `offspring`; otherwise reward 0
/// and no offspring. Every pull lasts exactly one step.
struct BanditClass {
  std::uint32_t id = 0;
  std::uint32_t parent_category = 0;
  std::uint32_t category = 0;
  double infected_probability = 0.0;
  double reward = 0.0;
  ChildDistribution offspring;  // over class ids
};

struct BanditInstance {
  std::vector<BanditClass> classes;
  double eta = 0.0;
};

/// Class i corresponds to type i of the general model's type table.
BanditInstance reduce_general(const TypeTable& table);
BanditInstance reduce_general(const ModelSpec& spec);

struct ReductionReport {
  std::uint64_t comparisons = 0;  // (state, action) pairs compared
  double max_tv_distance = 0.0;
  std::vector<std::uint32_t> worst_state;
  TypeId worst_action = 0;
};

/// Compares the exact next-(state, discounted reward) law of both models for
/// every state/action pair reachable within `depth` steps of `initial`.
ReductionReport verify_reduction(const TypeTable& table, const BanditInstance& instance,
                                 const FrontierState& initial, std::uint32_t depth,
                                 std::uint64_t state_cap = 1'000'000);

/// Moves `delta` of probability between two offspring outcomes of class `id`
/// (from the most likely outcome to the next one).
void perturb_offspring(BanditInstance& instance, std::uint32_t id, double delta);

/// Optimal discounted reward of the bandit instance from arm counts `state`.
double bandit_optimal_value(const BanditInstance& instance, const std::vector<std::uint32_t>& state,
                            std::uint64_t state_cap = 1'000'000);

/// Views the instance as a type table so the index construction can run on it.
TypeTable bandit_as_type_table(const BanditInstance& instance, const ModelSpec& spec);

}  // namespace ctrace
