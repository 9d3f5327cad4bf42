#include "ctrace/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <queue>
#include <sstream>

#include "ctrace/error.hpp"
#include "ctrace/numeric.hpp"
#include "ctrace/rng.hpp"

namespace ctrace {

void sample_forest_into(const TypeTable& table, const FrontierState& initial, std::uint64_t seed,
                        RealizedForest& out, std::uint64_t forest_cap) {
  out.nodes.clear();
  out.roots.clear();
  if (initial.counts.size() != table.size()) {
    throw Error(ErrorCode::InvalidParameter, "state dimension does not match type count");
  }
  std::vector<std::uint64_t> streams;
  for (TypeId t = 0; t < initial.counts.size(); ++t) {
    for (std::uint32_t i = 0; i < initial.counts[t]; ++i) {
      ForestNode n;
      n.id = static_cast<std::uint32_t>(out.nodes.size());
      n.type = t;
      out.roots.push_back(n.id);
      out.nodes.push_back(n);
      streams.push_back(derive_stream(0, n.id));
    }
  }
  std::vector<TypeId> kids;
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    CounterRng rng(seed, streams[i]);
    const TypeId type = out.nodes[i].type;
    const bool infected = rng.uniform() < table.type(type).infection_probability;
    out.nodes[i].infected = infected;
    if (!infected) continue;
    kids.clear();
    table.sample_children(type, rng, kids);
    if (out.nodes.size() + kids.size() > forest_cap) {
      throw Error(ErrorCode::ForestCapExceeded, "sampled forest exceeds node cap");
    }
    out.nodes[i].first_child = static_cast<std::uint32_t>(out.nodes.size());
    out.nodes[i].child_count = static_cast<std::uint32_t>(kids.size());
    for (std::size_t k = 0; k < kids.size(); ++k) {
      ForestNode c;
      c.id = static_cast<std::uint32_t>(out.nodes.size());
      c.type = kids[k];
      c.parent = static_cast<std::int64_t>(i);
      out.nodes.push_back(c);
      streams.push_back(derive_stream(streams[i], k));
    }
  }
}

RealizedForest sample_forest(const TypeTable& table, const FrontierState& initial, std::uint64_t seed,
                             std::uint64_t forest_cap) {
  RealizedForest f;
  sample_forest_into(table, initial, seed, f, forest_cap);
  return f;
}

namespace {

double trace(const TypeTable& table, const RealizedForest& forest, const std::vector<std::uint32_t>& rank,
             TraceLog* log) {
  using Entry = std::pair<std::uint32_t, std::uint32_t>;  // (rank, node id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  for (auto r : forest.roots) frontier.emplace(rank[forest.nodes[r].type], r);
  const double d = table.discount();
  double disc = 1.0, total = 0.0;
  std::uint64_t t = 0;
  while (!frontier.empty()) {
    const auto [_, id] = frontier.top();
    frontier.pop();
    const ForestNode& n = forest.nodes[id];
    double gained = 0.0;
    if (n.infected) {
      gained = disc * table.type(n.type).benefit;
      total += gained;
      for (std::uint32_t c = n.first_child; c < n.first_child + n.child_count; ++c) {
        frontier.emplace(rank[forest.nodes[c].type], c);
      }
    }
    if (log) log->steps.push_back({t, id, n.type, n.infected, gained});
    disc *= d;
    ++t;
  }
  return total;
}

std::vector<std::uint32_t> checked_ranks(const TypeTable& table, const PriorityOrdering& policy) {
  const auto rank = policy.ranks(table.size());
  if (policy.sequence.size() != table.size() ||
      std::find(rank.begin(), rank.end(), UINT32_MAX) != rank.end()) {
    throw Error(ErrorCode::InvalidParameter, "policy must order every type");
  }
  return rank;
}

}  // namespace

TraceResult run_tracer(const TypeTable& table, const RealizedForest& forest, const PriorityOrdering& policy,
                       bool record_log) {
  const auto rank = checked_ranks(table, policy);
  TraceResult out;
  out.total = trace(table, forest, rank, record_log ? &out.log : nullptr);
  return out;
}

PolicyEstimate estimate_policy_value(const TypeTable& table, const FrontierState& initial,
                                     const PriorityOrdering& policy, std::uint64_t replicates,
                                     std::uint64_t seed, unsigned threads) {
  if (replicates < 2) throw Error(ErrorCode::ZeroReplicates, "at least two replicates required");
  const auto rank = checked_ranks(table, policy);
  std::vector<double> totals(replicates);
  parallel_for(replicates, threads, [&](std::size_t begin, std::size_t end) {
    RealizedForest forest;
    for (std::size_t r = begin; r < end; ++r) {
      sample_forest_into(table, initial, derive_stream(seed, r), forest);
      totals[r] = trace(table, forest, rank, nullptr);
    }
  });
  const auto s = summarize(totals);
  return {s.mean, s.stderr_};
}

std::string trace_log_csv(const TypeTable& table, const TraceLog& log) {
  std::ostringstream os;
  os << "t,node_id,type,infected,benefit\n";
  os << std::setprecision(17);
  for (const auto& s : log.steps) {
    os << s.t << ',' << s.node << ",\"" << table.describe(s.type) << "\"," << (s.infected ? 1 : 0) << ','
       << s.benefit << '\n';
  }
  return os.str();
}

}  // namespace ctrace
