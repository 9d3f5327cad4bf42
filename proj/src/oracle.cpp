#include "ctrace/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "ctrace/error.hpp"
#include "ctrace/numeric.hpp"

namespace ctrace {

namespace {

using Counts = std::vector<std::uint32_t>;

struct CountsHash {
  std::size_t operator()(const Counts& c) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : c) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Value recursion over full count vectors. With `ranks` set, the query rule
/// is the fixed priority order; otherwise the best present type is chosen.
class ValueRecursion {
 public:
  ValueRecursion(const TypeTable& table, const std::vector<std::uint32_t>* ranks, std::uint64_t cap)
      : table_(table), ranks_(ranks), cap_(cap), d_(table.discount()) {}

  double value(Counts& s) {
    if (std::all_of(s.begin(), s.end(), [](auto v) { return v == 0; })) return 0.0;
    if (auto it = memo_.find(s); it != memo_.end()) return it->second.first;
    if (memo_.size() >= cap_) throw Error(ErrorCode::StateCapExceeded, "oracle state space exceeds cap");
    if (std::accumulate(s.begin(), s.end(), std::uint64_t{0}) > cap_) {
      throw Error(ErrorCode::StateCapExceeded, "frontier exceeds state cap");
    }
    double best = -1.0;
    TypeId action = 0;
    if (ranks_) {
      std::uint32_t best_rank = UINT32_MAX;
      for (TypeId t = 0; t < s.size(); ++t) {
        if (s[t] > 0 && (*ranks_)[t] < best_rank) {
          best_rank = (*ranks_)[t];
          action = t;
        }
      }
      best = q_value(s, action);
    } else {
      for (TypeId t = 0; t < s.size(); ++t) {
        if (s[t] == 0) continue;
        const double v = q_value(s, t);
        if (v > best) {
          best = v;
          action = t;
        }
      }
    }
    memo_.emplace(s, std::make_pair(best, action));
    return best;
  }

  const std::unordered_map<Counts, std::pair<double, TypeId>, CountsHash>& memo() const { return memo_; }

 private:
  double q_value(Counts& s, TypeId j) {
    const NodeType& t = table_.type(j);
    const double p = t.infection_probability;
    --s[j];
    double missed = 0.0;
    if (p < 1.0) missed = value(s);
    double found = 0.0;
    if (p > 0.0) {
      double expect = 0.0;
      for (const auto& o : t.children) {
        for (auto [k, n] : o.children) s[k] += n;
        expect += o.probability * value(s);
        for (auto [k, n] : o.children) s[k] -= n;
      }
      found = t.benefit + d_ * expect;
    }
    ++s[j];
    return p * found + (1.0 - p) * d_ * missed;
  }

  const TypeTable& table_;
  const std::vector<std::uint32_t>* ranks_;
  std::uint64_t cap_;
  double d_;
  std::unordered_map<Counts, std::pair<double, TypeId>, CountsHash> memo_;
};

Counts checked_counts(const TypeTable& table, const FrontierState& state) {
  if (state.counts.size() != table.size()) {
    throw Error(ErrorCode::InvalidParameter, "state dimension does not match type count");
  }
  check_termination(table, state);
  return state.counts;
}

}  // namespace

void check_termination(const TypeTable& table, const FrontierState& state) {
  if (table.spec().variant != Variant::General) return;  // children always have smaller recency
  const std::size_t n = table.size();
  std::vector<std::vector<TypeId>> edges(n);
  for (const auto& t : table.types()) {
    if (t.infection_probability <= 0.0) continue;
    for (const auto& o : t.children) {
      if (o.probability <= 0.0) continue;
      for (auto [k, c] : o.children) edges[t.id].push_back(k);
    }
  }
  // iterative DFS with colors: 0 unseen, 1 on stack, 2 done
  std::vector<char> color(n, 0);
  for (TypeId root = 0; root < n; ++root) {
    if (root >= state.counts.size() || state.counts[root] == 0 || color[root]) continue;
    std::vector<std::pair<TypeId, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      if (i < edges[v].size()) {
        const TypeId w = edges[v][i++];
        if (color[w] == 1) {
          throw Error(ErrorCode::NonTerminatingGeneralModel,
                      "offspring graph has a cycle through " + table.describe(w));
        }
        if (color[w] == 0) {
          color[w] = 1;
          stack.emplace_back(w, 0);
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
}

double evaluate_ordering_exact(const TypeTable& table, const FrontierState& state,
                               const PriorityOrdering& ordering, const OracleOptions& options) {
  if (ordering.sequence.size() != table.size()) {
    throw Error(ErrorCode::InvalidParameter, "ordering must be a permutation of all types");
  }
  const auto ranks = ordering.ranks(table.size());
  if (std::find(ranks.begin(), ranks.end(), UINT32_MAX) != ranks.end()) {
    throw Error(ErrorCode::InvalidParameter, "ordering must be a permutation of all types");
  }
  Counts s = checked_counts(table, state);
  ValueRecursion rec(table, &ranks, options.state_cap);
  return rec.value(s);
}

BruteForceResult brute_force_optimal(const TypeTable& table, const FrontierState& state,
                                     const OracleOptions& options) {
  Counts s = checked_counts(table, state);
  ValueRecursion rec(table, nullptr, options.state_cap);
  BruteForceResult out;
  out.value = rec.value(s);
  for (const auto& [counts, entry] : rec.memo()) out.actions.emplace(counts, entry.second);
  return out;
}

ExhaustiveResult best_ordering_exhaustive(const TypeTable& table, const FrontierState& state,
                                          unsigned threads, const OracleOptions& options) {
  const std::size_t n = table.size();
  if (n > kMaxExhaustiveTypes) throw Error(ErrorCode::TooManyTypes, "exhaustive search limited to 8 types");
  checked_counts(table, state);
  // one work item per leading type; permutations inside each are lexicographic
  std::vector<std::vector<std::pair<std::vector<TypeId>, double>>> results(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t first = begin; first < end; ++first) {
      std::vector<TypeId> rest;
      for (TypeId t = 0; t < n; ++t)
        if (t != first) rest.push_back(t);
      do {
        PriorityOrdering o;
        o.sequence.push_back(static_cast<TypeId>(first));
        o.sequence.insert(o.sequence.end(), rest.begin(), rest.end());
        const double v = evaluate_ordering_exact(table, state, o, options);
        results[first].emplace_back(std::move(o.sequence), v);
      } while (std::next_permutation(rest.begin(), rest.end()));
    }
  });
  double best = -1.0;
  for (const auto& chunk : results)
    for (const auto& [seq, v] : chunk) best = std::max(best, v);
  for (const auto& chunk : results)
    for (const auto& [seq, v] : chunk)
      if (v >= best - 1e-12) return {{seq}, v};
  return {};
}

}  // namespace ctrace
