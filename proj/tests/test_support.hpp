#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ctrace/model.hpp"

namespace ctrace::testkit {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline ContactDistribution random_contacts(std::mt19937_64& rng, bool allow_poisson) {
  if (allow_poisson && rng() % 2 == 0) return ContactDistribution::poisson(uniform(rng, 0.2, 1.0));
  return ContactDistribution::bernoulli(uniform(rng, 0.05, 1.0));
}

inline ModelSpec random_basic(std::mt19937_64& rng, std::uint32_t max_horizon, bool allow_poisson) {
  ModelSpec s;
  s.variant = Variant::Basic;
  s.horizon = 1 + static_cast<std::uint32_t>(rng() % max_horizon);
  s.base_infection = uniform(rng, 0.01, 1.0);
  s.discount_rate = uniform(rng, 0.1, 3.0);
  s.contacts = random_contacts(rng, allow_poisson);
  return s;
}

enum class AlphaRegime { Below, Equal, Above };

inline ModelSpec random_univariate(std::mt19937_64& rng, std::uint32_t max_horizon, AlphaRegime regime,
                                   bool allow_poisson) {
  ModelSpec s = random_basic(rng, max_horizon, allow_poisson);
  s.variant = Variant::Univariate;
  switch (regime) {
    case AlphaRegime::Below: s.infection_decay = s.discount_rate * uniform(rng, 0.02, 0.98); break;
    case AlphaRegime::Equal: s.infection_decay = s.discount_rate; break;
    case AlphaRegime::Above: s.infection_decay = s.discount_rate * uniform(rng, 1.05, 3.0); break;
  }
  return s;
}

inline ModelSpec random_bivariate(std::mt19937_64& rng, std::uint32_t max_horizon, bool allow_poisson) {
  ModelSpec s = random_basic(rng, max_horizon, allow_poisson);
  s.variant = Variant::Bivariate;
  s.infection_decay = uniform(rng, 0.05, 3.0);
  return s;
}

/// Random general model whose offspring always have strictly smaller
/// recency, so every process terminates.
inline ModelSpec random_general(std::mt19937_64& rng, std::uint32_t categories, double min_infect = 0.0) {
  ModelSpec s;
  s.variant = Variant::General;
  s.horizon = 2;
  s.discount_rate = uniform(rng, 0.2, 2.0);
  GeneralTables g;
  for (std::uint32_t c = 0; c < categories; ++c) {
    g.categories.push_back({"c" + std::to_string(c), static_cast<std::uint32_t>(rng() % 3), 0});
  }
  g.categories[0].recency = 2;  // the super-root sits at the top
  g.super_root = 0;
  g.infect.assign(categories, std::vector<double>(categories, 0.0));
  for (auto& row : g.infect)
    for (auto& p : row) p = uniform(rng, min_infect, 1.0);
  for (std::uint32_t c = 0; c < categories; ++c) g.benefit.push_back(uniform(rng, 0.0, 1.0));
  g.offspring.resize(categories);
  for (std::uint32_t c = 0; c < categories; ++c) {
    std::vector<std::uint32_t> younger;
    for (std::uint32_t k = 0; k < categories; ++k)
      if (g.categories[k].recency < g.categories[c].recency) younger.push_back(k);
    if (younger.empty()) {
      g.offspring[c] = {{{}, 1.0}};
      continue;
    }
    const int outcomes = 2 + static_cast<int>(rng() % 2);
    std::vector<double> w(outcomes);
    double sum = 0.0;
    for (auto& x : w) sum += (x = uniform(rng, 0.1, 1.0));
    for (int o = 0; o < outcomes; ++o) {
      OffspringOutcome out;
      const int kids = o == 0 ? 0 : 1 + static_cast<int>(rng() % 2);
      for (int k = 0; k < kids; ++k) out.categories.push_back(younger[rng() % younger.size()]);
      out.probability = w[o] / sum;
      g.offspring[c].push_back(out);
    }
  }
  s.general = std::move(g);
  return s;
}

inline FrontierState random_state(std::mt19937_64& rng, const TypeTable& table, std::uint32_t max_nodes) {
  FrontierState s;
  s.counts.assign(table.size(), 0);
  const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng() % max_nodes);
  const auto& spec = table.spec();
  for (std::uint32_t i = 0; i < n; ++i) {
    if (spec.variant == Variant::General) {
      // index cases are children of the super-root
      const auto c = static_cast<std::uint32_t>(rng() % spec.general->size());
      ++s.counts[table.general_id(spec.general->super_root, c)];
    } else {
      ++s.counts[rng() % table.size()];
    }
  }
  return s;
}

/// Independent ground truth by explicit enumeration: every realized forest
/// reachable from `roots` (with its probability) is materialized, and a
/// plain list-scanning tracer is run on each one.
struct EnumeratedValue {
  double benefit = 0.0;
  double premultiplier = 0.0;
};

struct Node {
  TypeId type;
  bool infected;
  std::vector<std::size_t> children;
};

/// Runs the tracer on one realization. When `prefix_only` is set, only the
/// roots and nodes of types with a finite rank are ever queried.
inline std::pair<double, std::size_t> trace_realization(const TypeTable& table, const std::vector<Node>& nodes,
                                                        std::size_t num_roots,
                                                        const std::vector<std::uint32_t>& rank,
                                                        bool prefix_only) {
  std::vector<std::size_t> frontier;
  for (std::size_t r = 0; r < num_roots; ++r) frontier.push_back(r);
  double benefit = 0.0;
  std::size_t steps = 0;
  while (!frontier.empty()) {
    auto best = frontier.begin();
    for (auto it = frontier.begin(); it != frontier.end(); ++it) {
      if (rank[nodes[*it].type] < rank[nodes[*best].type]) best = it;
    }
    const std::size_t v = *best;
    frontier.erase(best);
    if (nodes[v].infected) {
      benefit += std::exp(-table.spec().discount_rate * static_cast<double>(steps)) * table.type(nodes[v].type).benefit;
      for (auto c : nodes[v].children) {
        if (!prefix_only || rank[nodes[c].type] != UINT32_MAX) frontier.push_back(c);
      }
    }
    ++steps;
  }
  return {benefit, steps};
}

inline EnumeratedValue enumerate_value(const TypeTable& table, const std::vector<TypeId>& roots,
                                       const std::vector<std::uint32_t>& rank, bool prefix_only) {
  struct Partial {
    std::vector<Node> nodes;
    std::size_t next = 0;
    double probability = 1.0;
  };
  std::vector<Partial> work;
  Partial start;
  for (auto t : roots) start.nodes.push_back({t, false, {}});
  work.push_back(start);
  EnumeratedValue out;
  while (!work.empty()) {
    Partial p = std::move(work.back());
    work.pop_back();
    if (p.next == p.nodes.size()) {
      const auto [b, steps] = trace_realization(table, p.nodes, roots.size(), rank, prefix_only);
      out.benefit += p.probability * b;
      out.premultiplier += p.probability * std::exp(-table.spec().discount_rate * static_cast<double>(steps));
      continue;
    }
    const std::size_t v = p.next;
    // a node is only expanded if the tracer could reach it
    const bool reachable = [&] {
      if (v < roots.size()) return true;
      for (std::size_t u = 0; u < v; ++u) {
        const auto& ch = p.nodes[u].children;
        if (std::find(ch.begin(), ch.end(), v) != ch.end()) {
          return p.nodes[u].infected && (!prefix_only || rank[p.nodes[v].type] != UINT32_MAX);
        }
      }
      return false;
    }();
    const NodeType& t = table.type(p.nodes[v].type);
    if (!reachable) {
      Partial q = p;
      ++q.next;
      work.push_back(std::move(q));
      continue;
    }
    if (t.infection_probability < 1.0) {
      Partial q = p;
      q.probability *= 1.0 - t.infection_probability;
      ++q.next;
      work.push_back(std::move(q));
    }
    if (t.infection_probability > 0.0) {
      for (const auto& o : t.children) {
        Partial q = p;
        q.probability *= t.infection_probability * o.probability;
        q.nodes[v].infected = true;
        for (auto [k, n] : o.children) {
          for (std::uint32_t i = 0; i < n; ++i) {
            q.nodes[v].children.push_back(q.nodes.size());
            q.nodes.push_back({k, false, {}});
          }
        }
        ++q.next;
        work.push_back(std::move(q));
      }
    }
  }
  return out;
}

/// Ranks for a prefix: prefix members get their position, others UINT32_MAX
/// (a period root of a non-prefix type is still queried first).
inline std::vector<std::uint32_t> prefix_ranks(std::size_t num_types, const std::vector<TypeId>& prefix) {
  std::vector<std::uint32_t> r(num_types, UINT32_MAX);
  for (std::size_t i = 0; i < prefix.size(); ++i) r[prefix[i]] = static_cast<std::uint32_t>(i);
  return r;
}

inline std::vector<TypeId> state_roots(const FrontierState& s) {
  std::vector<TypeId> roots;
  for (TypeId t = 0; t < s.counts.size(); ++t) roots.insert(roots.end(), s.counts[t], t);
  return roots;
}

}  // namespace ctrace::testkit
