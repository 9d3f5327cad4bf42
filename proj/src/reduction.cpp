#include "ctrace/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "ctrace/error.hpp"

namespace ctrace {

namespace {

using Counts = std::vector<std::uint32_t>;
using Outcome = std::pair<Counts, double>;  // next state, discounted reward
using Law = std::map<Outcome, double>;

struct CountsHash {
  std::size_t operator()(const Counts& c) const noexcept {
    std::size_t h = 0;
    for (auto v : c) h = h * 1000003u + v;
    return h;
  }
};

Law general_law(const TypeTable& table, const Counts& s, TypeId j, double discount_t) {
  Law law;
  const NodeType& t = table.type(j);
  Counts base = s;
  --base[j];
  if (t.infection_probability < 1.0) law[{base, 0.0}] += 1.0 - t.infection_probability;
  if (t.infection_probability > 0.0) {
    for (const auto& o : t.children) {
      Counts next = base;
      for (auto [k, n] : o.children) next[k] += n;
      law[{next, t.benefit * discount_t}] += t.infection_probability * o.probability;
    }
  }
  return law;
}

Law bandit_law(const BanditInstance& inst, const Counts& s, std::uint32_t i, double discount_t) {
  Law law;
  const BanditClass& c = inst.classes[i];
  Counts base = s;
  --base[i];
  if (c.infected_probability < 1.0) law[{base, 0.0}] += 1.0 - c.infected_probability;
  if (c.infected_probability > 0.0) {
    for (const auto& o : c.offspring) {
      Counts next = base;
      for (auto [k, n] : o.children) next[k] += n;
      law[{next, c.reward * discount_t}] += c.infected_probability * o.probability;
    }
  }
  return law;
}

double total_variation(const Law& a, const Law& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      sum += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      sum += std::abs(ib->second);
      ++ib;
    } else {
      sum += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * sum;
}

}  // namespace

BanditInstance reduce_general(const TypeTable& table) {
  const ModelSpec& spec = table.spec();
  if (spec.variant != Variant::General) {
    throw Error(ErrorCode::VariantMismatch, "reduction applies to the general model");
  }
  const GeneralTables& g = *spec.general;
  const std::uint32_t n = static_cast<std::uint32_t>(g.size());
  BanditInstance inst;
  inst.eta = spec.discount_rate;
  inst.classes.resize(static_cast<std::size_t>(n) * n);
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t c = 0; c < n; ++c) {
      const TypeId id = table.general_id(a, c);
      BanditClass& cls = inst.classes[id];
      cls.id = id;
      cls.parent_category = a;
      cls.category = c;
      cls.infected_probability = g.infect[a][c];
      cls.reward = g.benefit[c];
      std::map<TypeCounts, double> merged;
      for (const auto& o : g.offspring[c]) {
        std::map<TypeId, std::uint32_t> counts;
        for (auto k : o.categories) ++counts[table.general_id(c, k)];
        merged[TypeCounts(counts.begin(), counts.end())] += o.probability;
      }
      for (auto& [tc, p] : merged) cls.offspring.push_back({tc, p});
    }
  }
  return inst;
}

BanditInstance reduce_general(const ModelSpec& spec) { return reduce_general(TypeTable(spec)); }

ReductionReport verify_reduction(const TypeTable& table, const BanditInstance& instance,
                                 const FrontierState& initial, std::uint32_t depth, std::uint64_t state_cap) {
  if (instance.classes.size() != table.size()) {
    throw Error(ErrorCode::InvalidParameter, "instance class count differs from type count");
  }
  if (initial.counts.size() != table.size()) {
    throw Error(ErrorCode::InvalidParameter, "state dimension does not match type count");
  }
  ReductionReport report;
  std::set<Counts> level{initial.counts};
  std::uint64_t visited = 0;
  for (std::uint32_t t = 0; t < depth && !level.empty(); ++t) {
    const double dg = std::exp(-table.spec().discount_rate * t);
    const double db = std::exp(-instance.eta * t);
    std::set<Counts> next_level;
    for (const Counts& s : level) {
      if (++visited > state_cap) throw Error(ErrorCode::StateCapExceeded, "reachable states exceed cap");
      for (TypeId j = 0; j < s.size(); ++j) {
        if (s[j] == 0) continue;
        const Law lg = general_law(table, s, j, dg);
        const Law lb = bandit_law(instance, s, j, db);
        const double tv = total_variation(lg, lb);
        ++report.comparisons;
        if (report.worst_state.empty() || tv > report.max_tv_distance) {
          report.max_tv_distance = tv;
          report.worst_state = s;
          report.worst_action = j;
        }
        if (t + 1 < depth) {
          for (const auto& [outcome, p] : lg) next_level.insert(outcome.first);
        }
      }
    }
    level = std::move(next_level);
  }
  return report;
}

void perturb_offspring(BanditInstance& instance, std::uint32_t id, double delta) {
  auto& off = instance.classes.at(id).offspring;
  if (off.size() < 2) throw Error(ErrorCode::InvalidParameter, "class needs two offspring outcomes");
  auto from = std::max_element(off.begin(), off.end(),
                               [](const auto& a, const auto& b) { return a.probability < b.probability; });
  auto to = from == off.begin() ? std::next(off.begin()) : off.begin();
  const double moved = std::min(delta, from->probability);
  from->probability -= moved;
  to->probability += moved;
}

namespace {

class BanditValue {
 public:
  BanditValue(const BanditInstance& inst, std::uint64_t cap) : inst_(inst), cap_(cap), d_(std::exp(-inst.eta)) {}

  double value(Counts& s) {
    bool any = false;
    for (auto v : s) any = any || v > 0;
    if (!any) return 0.0;
    if (auto it = memo_.find(s); it != memo_.end()) return it->second;
    if (memo_.size() >= cap_) throw Error(ErrorCode::StateCapExceeded, "bandit state space exceeds cap");
    double best = 0.0;
    for (std::uint32_t i = 0; i < s.size(); ++i) {
      if (s[i] == 0) continue;
      const BanditClass& c = inst_.classes[i];
      --s[i];
      double pulled = 0.0;
      for (const auto& o : c.offspring) {
        for (auto [k, n] : o.children) s[k] += n;
        pulled += o.probability * value(s);
        for (auto [k, n] : o.children) s[k] -= n;
      }
      const double idle = value(s);
      ++s[i];
      const double q = c.infected_probability * (c.reward + d_ * pulled) + (1.0 - c.infected_probability) * d_ * idle;
      best = std::max(best, q);
    }
    memo_.emplace(s, best);
    return best;
  }

 private:
  const BanditInstance& inst_;
  std::uint64_t cap_;
  double d_;
  std::unordered_map<Counts, double, CountsHash> memo_;
};

}  // namespace

double bandit_optimal_value(const BanditInstance& instance, const std::vector<std::uint32_t>& state,
                            std::uint64_t state_cap) {
  if (state.size() != instance.classes.size()) {
    throw Error(ErrorCode::InvalidParameter, "state dimension does not match class count");
  }
  Counts s = state;
  return BanditValue(instance, state_cap).value(s);
}

TypeTable bandit_as_type_table(const BanditInstance& instance, const ModelSpec& spec) {
  std::vector<NodeType> types(instance.classes.size());
  const auto& g = *spec.general;
  for (const auto& c : instance.classes) {
    NodeType& t = types.at(c.id);
    t.id = c.id;
    t.recency = g.categories.at(c.category).recency;
    t.parent_category = static_cast<std::int32_t>(c.parent_category);
    t.category = static_cast<std::int32_t>(c.category);
    t.infection_probability = c.infected_probability;
    t.benefit = c.reward;
    t.children = c.offspring;
  }
  ModelSpec s = spec;
  s.discount_rate = instance.eta;
  return TypeTable(s, std::move(types));
}

}  // namespace ctrace
