#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ctrace/engine.hpp"
#include "ctrace/model.hpp"

namespace ctrace {

struct OracleOptions {
  std::uint64_t state_cap = 1'000'000;
};

/// Exact expected discounted benefit of the index policy given by `ordering`,
/// by value recursion over full frontier count vectors.
double evaluate_ordering_exact(const TypeTable& table, const FrontierState& state,
                               const PriorityOrdering& ordering, const OracleOptions& options = {});

struct BruteForceResult {
  double value = 0.0;
  /// Maximizing type for every reachable nonempty state (lowest id on exact ties).
  std::map<std::vector<std::uint32_t>, TypeId> actions;
};

/// Optimal value over all adaptive policies (any present type may be queried).
BruteForceResult brute_force_optimal(const TypeTable& table, const FrontierState& state,
                                     const OracleOptions& options = {});

struct ExhaustiveResult {
  PriorityOrdering ordering;
  double value = 0.0;
};

inline constexpr std::size_t kMaxExhaustiveTypes = 8;

/// Evaluates every permutation of the type set; returns the lexicographically
/// first ordering whose value is within 1e-12 of the maximum.
ExhaustiveResult best_ordering_exhaustive(const TypeTable& table, const FrontierState& state,
                                          unsigned threads = 1, const OracleOptions& options = {});

/// Throws NonTerminatingGeneralModel if a type reachable from `state` can
/// reproduce itself with positive probability.
void check_termination(const TypeTable& table, const FrontierState& state);

}  // namespace ctrace
