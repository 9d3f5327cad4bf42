#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctrace/model.hpp"

namespace ctrace {

struct PeriodStats {
  double expected_benefit = 0.0;
  double premultiplier = 1.0;
};

struct PriorityOrdering {
  std::vector<TypeId> sequence;

  /// rank[type] = position in the sequence.
  std::vector<std::uint32_t> ranks(std::size_t num_types) const;
};

struct RoundRecord {
  TypeId winner = 0;
  double winner_value = 0.0;
  std::vector<std::pair<TypeId, double>> candidates;  // every remaining type, by id
  bool tied = false;
};

struct IndexPolicy {
  PriorityOrdering ordering;
  std::vector<RoundRecord> rounds;
  std::vector<std::size_t> ties;  // rounds with more than one maximizer
};

struct EngineOptions {
  std::uint64_t state_cap = 1'000'000;
  double tie_tolerance = 1e-9;  // relative to the round winner
};

/// Period and epoch statistics for one priority prefix.
///
/// Level k refers to the prefix made of the first k entries. Durations and
/// the counts of nodes left over for later types do not depend on the order
/// of queries, so their joint transforms factor over independent subtrees.
/// The benefit of an epoch at level k is the benefit at level k-1 (the last
/// prefix type is held back) plus the run of periods of the held-back type,
/// which starts once everything of higher priority is exhausted.
class PeriodCalculator {
 public:
  PeriodCalculator(const TypeTable& table, std::span<const TypeId> prefix,
                   const EngineOptions& options = {});

  /// Appends a type to the prefix; memoized lower levels stay valid.
  void extend(TypeId type);

  /// Root query plus the epoch on the realized child multiset.
  PeriodStats period(TypeId type) const;
  /// Expected epoch statistics over the child multiset of `type`.
  PeriodStats children_epoch(TypeId type) const;
  PeriodStats epoch(const FrontierState& state) const;
  PeriodStats epoch(const TypeCounts& counts) const;

  bool in_prefix(TypeId type) const { return rank_[type] != kNotInPrefix; }
  std::size_t prefix_size() const { return prefix_.size(); }

 private:
  static constexpr std::uint32_t kNotInPrefix = UINT32_MAX;

  struct Level {
    std::vector<std::optional<double>> gamma, weighted, benefit;
    std::vector<char> visiting_gamma, visiting_weighted, visiting_benefit;
  };

  Level& level(std::size_t k) const;
  double gamma(std::size_t k, TypeId t) const;
  double weighted_gamma(std::size_t k, TypeId t) const;
  double period_benefit(std::size_t k, TypeId t) const;
  double epoch_benefit(const TypeCounts& counts, std::size_t k) const;
  double epoch_gamma(const TypeCounts& counts, std::size_t k) const;
  void check_total(const TypeCounts& counts) const;

  const TypeTable& table_;
  EngineOptions options_;
  std::vector<TypeId> prefix_;
  std::vector<std::uint32_t> rank_;
  mutable std::vector<Level> levels_;
};

PeriodStats epoch_stats(const TypeTable& table, const FrontierState& state,
                        std::span<const TypeId> prefix, const EngineOptions& options = {});
PeriodStats period_stats(const TypeTable& table, TypeId type, std::span<const TypeId> prefix,
                         const EngineOptions& options = {});
double index_value(const TypeTable& table, TypeId type, std::span<const TypeId> prefix,
                   const EngineOptions& options = {});
IndexPolicy weiss_dp(const TypeTable& table, const EngineOptions& options = {});
IndexPolicy weiss_dp(const ModelSpec& spec, const EngineOptions& options = {});

struct PeriodEstimate {
  PeriodStats mean;
  double benefit_stderr = 0.0;
  double premultiplier_stderr = 0.0;
};

/// Monte Carlo estimate of period statistics. Replicate r uses its own RNG
/// stream derived from (seed, r), so the result is independent of `threads`.
PeriodEstimate mc_period_stats(const TypeTable& table, TypeId type, std::span<const TypeId> prefix,
                               std::uint64_t replicates, std::uint64_t seed, unsigned threads = 1);

}  // namespace ctrace
