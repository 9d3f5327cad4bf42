#include "ctrace/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctrace/error.hpp"
#include "ctrace/numeric.hpp"
#include "ctrace/rng.hpp"

namespace ctrace {

std::vector<std::uint32_t> PriorityOrdering::ranks(std::size_t num_types) const {
  std::vector<std::uint32_t> r(num_types, UINT32_MAX);
  for (std::size_t i = 0; i < sequence.size(); ++i) r.at(sequence[i]) = static_cast<std::uint32_t>(i);
  return r;
}

PeriodCalculator::PeriodCalculator(const TypeTable& table, std::span<const TypeId> prefix,
                                   const EngineOptions& options)
    : table_(table), options_(options), rank_(table.size(), kNotInPrefix) {
  for (TypeId t : prefix) extend(t);
}

void PeriodCalculator::extend(TypeId type) {
  if (type >= table_.size()) throw Error(ErrorCode::InvalidParameter, "prefix references unknown type");
  if (rank_[type] != kNotInPrefix) throw Error(ErrorCode::InvalidParameter, "prefix repeats a type");
  rank_[type] = static_cast<std::uint32_t>(prefix_.size());
  prefix_.push_back(type);
  // the weighted transform at the previous top level now has a target type
  if (levels_.size() >= prefix_.size()) {
    auto& l = levels_[prefix_.size() - 1];
    std::fill(l.weighted.begin(), l.weighted.end(), std::nullopt);
  }
}

PeriodCalculator::Level& PeriodCalculator::level(std::size_t k) const {
  while (levels_.size() <= k) {
    const std::size_t n = table_.size();
    levels_.push_back({std::vector<std::optional<double>>(n), std::vector<std::optional<double>>(n),
                       std::vector<std::optional<double>>(n), std::vector<char>(n, 0), std::vector<char>(n, 0),
                       std::vector<char>(n, 0)});
  }
  return levels_[k];
}

namespace {

[[noreturn]] void cycle_error(const TypeTable& table, TypeId t) {
  throw Error(ErrorCode::NonTerminatingGeneralModel, "prefix types form an offspring cycle through " +
                                                         table.describe(t));
}

struct VisitGuard {
  char& flag;
  VisitGuard(char& f, const TypeTable& table, TypeId t) : flag(f) {
    if (flag) cycle_error(table, t);
    flag = 1;
  }
  ~VisitGuard() { flag = 0; }
};

}  // namespace

void PeriodCalculator::check_total(const TypeCounts& counts) const {
  std::uint64_t total = 0;
  for (const auto& tc : counts) total += tc.second;
  if (total > options_.state_cap) throw Error(ErrorCode::StateCapExceeded, "frontier exceeds state cap");
}

// E[d^tau] of a period at level k.
double PeriodCalculator::gamma(std::size_t k, TypeId t) const {
  Level& l = level(k);
  if (l.gamma[t]) return *l.gamma[t];
  VisitGuard guard(l.visiting_gamma[t], table_, t);
  const NodeType& nt = table_.type(t);
  double e = 0.0;
  if (nt.infection_probability > 0.0) {
    for (const auto& o : nt.children) e += o.probability * epoch_gamma(o.children, k);
  }
  const double p = nt.infection_probability;
  const double v = table_.discount() * (1.0 - p + p * e);
  l.gamma[t] = v;
  return v;
}

// E[d^tau * g^M] of a period at level k, where M counts the nodes of type
// prefix[k] left over and g is the level-k period transform of that type.
double PeriodCalculator::weighted_gamma(std::size_t k, TypeId t) const {
  Level& l = level(k);
  if (l.weighted[t]) return *l.weighted[t];
  VisitGuard guard(l.visiting_weighted[t], table_, t);
  const TypeId m = prefix_.at(k);
  const double g = gamma(k, m);
  const NodeType& nt = table_.type(t);
  double e = 0.0;
  if (nt.infection_probability > 0.0) {
    for (const auto& o : nt.children) {
      check_total(o.children);
      double prod = 1.0;
      for (const auto& [c, n] : o.children) {
        if (rank_[c] < k) prod *= std::pow(weighted_gamma(k, c), n);
        else if (c == m) prod *= std::pow(g, n);
      }
      e += o.probability * prod;
    }
  }
  const double p = nt.infection_probability;
  const double v = table_.discount() * (1.0 - p + p * e);
  l.weighted[t] = v;
  return v;
}

double PeriodCalculator::period_benefit(std::size_t k, TypeId t) const {
  Level& l = level(k);
  if (l.benefit[t]) return *l.benefit[t];
  VisitGuard guard(l.visiting_benefit[t], table_, t);
  const NodeType& nt = table_.type(t);
  const double p = nt.infection_probability;
  double v = 0.0;
  if (p > 0.0) {
    double e = 0.0;
    for (const auto& o : nt.children) e += o.probability * epoch_benefit(o.children, k);
    v = p * (nt.benefit + table_.discount() * e);
  }
  l.benefit[t] = v;
  return v;
}

double PeriodCalculator::epoch_gamma(const TypeCounts& counts, std::size_t k) const {
  check_total(counts);
  double prod = 1.0;
  for (const auto& [t, n] : counts) {
    if (n > 0 && rank_[t] < k) prod *= std::pow(gamma(k, t), n);
  }
  return prod;
}

double PeriodCalculator::epoch_benefit(const TypeCounts& counts, std::size_t k) const {
  check_total(counts);
  double total = 0.0;
  // peel the lowest-priority type of each level off in turn
  for (std::size_t j = k; j > 0; --j) {
    const std::size_t below = j - 1;
    const TypeId m = prefix_[below];
    std::uint32_t n_m = 0;
    double plain = 1.0, weighted = 1.0;
    bool any = false;
    for (const auto& [t, n] : counts) {
      if (n == 0) continue;
      if (t == m) {
        n_m = n;
      } else if (rank_[t] < below) {
        plain *= std::pow(gamma(below, t), n);
        weighted *= std::pow(weighted_gamma(below, t), n);
        any = true;
      }
    }
    if (n_m == 0 && !any) continue;
    const double g = gamma(below, m);
    weighted *= std::pow(g, n_m);
    if (plain == weighted) continue;
    total += period_benefit(below, m) / (1.0 - g) * (plain - weighted);
  }
  return total;
}

PeriodStats PeriodCalculator::children_epoch(TypeId type) const {
  const std::size_t k = prefix_.size();
  PeriodStats out{0.0, 0.0};
  for (const auto& o : table_.type(type).children) {
    out.expected_benefit += o.probability * epoch_benefit(o.children, k);
    out.premultiplier += o.probability * epoch_gamma(o.children, k);
  }
  return out;
}

PeriodStats PeriodCalculator::period(TypeId type) const {
  const std::size_t k = prefix_.size();
  return {period_benefit(k, type), gamma(k, type)};
}

PeriodStats PeriodCalculator::epoch(const FrontierState& state) const {
  TypeCounts counts;
  for (std::size_t i = 0; i < state.counts.size(); ++i) {
    if (state.counts[i] > 0) counts.emplace_back(static_cast<TypeId>(i), state.counts[i]);
  }
  return epoch(counts);
}

PeriodStats PeriodCalculator::epoch(const TypeCounts& counts) const {
  const std::size_t k = prefix_.size();
  return {epoch_benefit(counts, k), epoch_gamma(counts, k)};
}

PeriodStats epoch_stats(const TypeTable& table, const FrontierState& state, std::span<const TypeId> prefix,
                        const EngineOptions& options) {
  return PeriodCalculator(table, prefix, options).epoch(state);
}

PeriodStats period_stats(const TypeTable& table, TypeId type, std::span<const TypeId> prefix,
                         const EngineOptions& options) {
  return PeriodCalculator(table, prefix, options).period(type);
}

namespace {

double index_from(const PeriodStats& s, bool empty_prefix) {
  if (empty_prefix) return s.expected_benefit;
  const double denom = 1.0 - s.premultiplier;
  if (denom < 1e-15) throw Error(ErrorCode::DegenerateDenominator, "1 - premultiplier underflows");
  return s.expected_benefit / denom;
}

}  // namespace

double index_value(const TypeTable& table, TypeId type, std::span<const TypeId> prefix,
                   const EngineOptions& options) {
  return index_from(period_stats(table, type, prefix, options), prefix.empty());
}

IndexPolicy weiss_dp(const TypeTable& table, const EngineOptions& options) {
  IndexPolicy policy;
  const std::size_t n = table.size();
  std::vector<char> placed(n, 0);
  auto& seq = policy.ordering.sequence;
  PeriodCalculator calc(table, {}, options);
  for (std::size_t round = 0; round < n; ++round) {
    RoundRecord rec;
    double best = -1.0;
    for (TypeId t = 0; t < n; ++t) {
      if (placed[t]) continue;
      const double v = index_from(calc.period(t), seq.empty());
      rec.candidates.emplace_back(t, v);
      best = std::max(best, v);
    }
    const double tol = options.tie_tolerance * std::abs(best);  // relative, so tiny indices still separate
    std::size_t near = 0;
    bool chosen = false;
    for (const auto& [t, v] : rec.candidates) {
      if (best - v <= tol) {
        ++near;
        if (!chosen) {
          rec.winner = t;
          rec.winner_value = v;
          chosen = true;
        }
      }
    }
    rec.tied = near > 1;
    if (rec.tied) policy.ties.push_back(round);
    placed[rec.winner] = 1;
    seq.push_back(rec.winner);
    calc.extend(rec.winner);
    policy.rounds.push_back(std::move(rec));
  }
  return policy;
}

IndexPolicy weiss_dp(const ModelSpec& spec, const EngineOptions& options) {
  return weiss_dp(TypeTable(spec), options);
}

PeriodEstimate mc_period_stats(const TypeTable& table, TypeId type, std::span<const TypeId> prefix,
                               std::uint64_t replicates, std::uint64_t seed, unsigned threads) {
  if (replicates == 0) throw Error(ErrorCode::ZeroReplicates, "at least one replicate required");
  if (type >= table.size()) throw Error(ErrorCode::InvalidParameter, "unknown type");
  std::vector<std::uint32_t> rank(table.size(), UINT32_MAX);
  for (std::size_t i = 0; i < prefix.size(); ++i) rank.at(prefix[i]) = static_cast<std::uint32_t>(i);
  const std::vector<TypeId> order(prefix.begin(), prefix.end());
  const double d = table.discount();
  const std::uint64_t cap = EngineOptions{}.state_cap;

  std::vector<double> benefits(replicates), gammas(replicates);
  parallel_for(replicates, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> counts(table.size());
    std::vector<TypeId> kids;
    for (std::size_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      std::fill(counts.begin(), counts.end(), 0);
      std::uint64_t pending = 0;
      double benefit = 0.0, disc = 1.0;
      auto query = [&](TypeId t) {
        const NodeType& nt = table.type(t);
        if (rng.uniform() < nt.infection_probability) {
          benefit += disc * nt.benefit;
          kids.clear();
          table.sample_children(t, rng, kids);
          for (TypeId k : kids) {
            if (rank[k] != UINT32_MAX) {
              ++counts[k];
              ++pending;
            }
          }
          if (pending > cap) throw Error(ErrorCode::StateCapExceeded, "simulated frontier exceeds cap");
        }
        disc *= d;
      };
      query(type);
      while (pending > 0) {
        for (TypeId t : order) {
          if (counts[t] > 0) {
            --counts[t];
            --pending;
            query(t);
            break;
          }
        }
      }
      benefits[r] = benefit;
      gammas[r] = disc;
    }
  });
  const auto b = summarize(benefits);
  const auto g = summarize(gammas);
  return {{b.mean, g.mean}, b.stderr_, g.stderr_};
}

}  // namespace ctrace
