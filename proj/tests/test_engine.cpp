#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ctrace/analysis.hpp"
#include "ctrace/engine.hpp"
#include "ctrace/error.hpp"
#include "test_support.hpp"

using namespace ctrace;
using ctrace::testkit::AlphaRegime;

namespace {

ModelSpec half_spec(std::uint32_t T = 2) {
  ModelSpec s;
  s.variant = Variant::Basic;
  s.horizon = T;
  s.base_infection = 0.5;
  s.discount_rate = std::log(2.0);
  s.contacts = ContactDistribution::bernoulli(1.0);
  return s;
}

FrontierState single(const TypeTable& t, TypeId id, std::uint32_t n = 1) {
  FrontierState s;
  s.counts.assign(t.size(), 0);
  s.counts[id] = n;
  return s;
}

std::vector<TypeId> random_prefix(std::mt19937_64& rng, std::size_t n) {
  std::vector<TypeId> all(n);
  for (TypeId i = 0; i < n; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(rng() % (n + 1));
  return all;
}

}  // namespace

TEST(EpochStats, Examples) {
  const TypeTable t(half_spec());
  const std::vector<TypeId> p0{0};
  const auto empty = epoch_stats(t, FrontierState{{0, 0, 0}}, p0);
  EXPECT_EQ(empty.expected_benefit, 0.0);
  EXPECT_EQ(empty.premultiplier, 1.0);
  const auto one = epoch_stats(t, single(t, 0), p0);
  EXPECT_NEAR(one.expected_benefit, 0.5, 1e-15);
  EXPECT_NEAR(one.premultiplier, 0.5, 1e-15);
  const auto outside = epoch_stats(t, single(t, 1), p0);
  EXPECT_EQ(outside.expected_benefit, 0.0);
  EXPECT_EQ(outside.premultiplier, 1.0);
}

TEST(PeriodStats, Examples) {
  const TypeTable t(half_spec());
  const std::vector<TypeId> none, p0{0};
  auto a = period_stats(t, 0, none);
  EXPECT_NEAR(a.expected_benefit, 0.5, 1e-15);
  EXPECT_EQ(a.premultiplier, t.discount());
  auto b = period_stats(t, 1, none);
  EXPECT_NEAR(b.expected_benefit, 0.25, 1e-15);
  EXPECT_NEAR(b.premultiplier, 0.5, 1e-15);
  auto c = period_stats(t, 1, p0);
  EXPECT_NEAR(c.expected_benefit, 0.375, 1e-15);
  EXPECT_NEAR(c.premultiplier, 0.375, 1e-15);
}

TEST(IndexValue, Examples) {
  const TypeTable t(half_spec());
  const std::vector<TypeId> none, p0{0}, p1{1};
  EXPECT_NEAR(index_value(t, 0, none), 0.5, 1e-15);
  EXPECT_NEAR(index_value(t, 1, p0), 0.6, 1e-15);
  EXPECT_NEAR(index_value(t, 0, p1), 1.0, 1e-15);  // 0.5 / (1 - 0.5)
}

TEST(WeissDp, BasicRecencyOrder) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    auto s = half_spec();
    s.base_infection = testkit::uniform(rng, 0.01, 1.0);
    s.discount_rate = testkit::uniform(rng, 0.1, 3.0);
    const auto pol = weiss_dp(s);
    EXPECT_EQ(pol.ordering.sequence, (std::vector<TypeId>{0, 1, 2}));
    EXPECT_EQ(pol.rounds.size(), 3u);
  }
}

TEST(WeissDp, UnivariateRegimes) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 8; ++i) {
    const auto above = testkit::random_univariate(rng, 4, AlphaRegime::Above, false);
    const auto pol = weiss_dp(above);
    for (std::size_t k = 0; k < pol.ordering.sequence.size(); ++k) {
      EXPECT_EQ(pol.ordering.sequence[k], above.horizon - k);
    }
    const auto below = testkit::random_univariate(rng, 5, AlphaRegime::Below, false);
    const auto pb = weiss_dp(below);
    EXPECT_TRUE(is_interleaved(pb.ordering.sequence));
  }
}

TEST(WeissDp, RoundRecordsAndTies) {
  std::mt19937_64 rng(23);
  const auto eq = testkit::random_univariate(rng, 3, AlphaRegime::Equal, false);
  const TypeTable t(eq);
  const auto pol = weiss_dp(t);
  EXPECT_EQ(pol.ties.size(), t.size() - 1);  // last round has a single candidate
  for (const auto& r : pol.rounds) {
    for (const auto& [id, v] : r.candidates) EXPECT_LE(v, r.winner_value + 1e-9 * std::max(1.0, r.winner_value));
  }
  // candidate lists shrink by one each round
  for (std::size_t k = 0; k < pol.rounds.size(); ++k) EXPECT_EQ(pol.rounds[k].candidates.size(), t.size() - k);
}

TEST(PeriodStats, MatchesEnumeratedRealizations) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 12; ++i) {
    std::vector<ModelSpec> specs{testkit::random_basic(rng, 3, false),
                                 testkit::random_univariate(rng, 3, AlphaRegime::Below, false),
                                 testkit::random_bivariate(rng, 2, false), testkit::random_general(rng, 3)};
    for (const auto& spec : specs) {
      const TypeTable table(spec);
      const auto prefix = random_prefix(rng, table.size());
      const auto ranks = testkit::prefix_ranks(table.size(), prefix);
      for (TypeId t = 0; t < table.size(); ++t) {
        const auto exact = period_stats(table, t, prefix);
        const auto oracle = testkit::enumerate_value(table, {t}, ranks, true);
        EXPECT_NEAR(exact.expected_benefit, oracle.benefit, 1e-12) << table.describe(t);
        EXPECT_NEAR(exact.premultiplier, oracle.premultiplier, 1e-12) << table.describe(t);
      }
    }
  }
}

TEST(EpochStats, MatchesEnumeratedRealizations) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 20; ++i) {
    const auto spec = i % 2 ? testkit::random_bivariate(rng, 2, false) : testkit::random_basic(rng, 3, false);
    const TypeTable table(spec);
    const auto prefix = random_prefix(rng, table.size());
    const auto ranks = testkit::prefix_ranks(table.size(), prefix);
    const auto state = testkit::random_state(rng, table, 3);
    // members outside the prefix are never queried during the epoch
    std::vector<TypeId> roots;
    for (auto t : testkit::state_roots(state))
      if (ranks[t] != UINT32_MAX) roots.push_back(t);
    const auto exact = epoch_stats(table, state, prefix);
    const auto oracle = testkit::enumerate_value(table, roots, ranks, true);
    EXPECT_NEAR(exact.expected_benefit, oracle.benefit, 1e-12);
    EXPECT_NEAR(exact.premultiplier, oracle.premultiplier, 1e-12);
  }
}

TEST(PeriodStats, DecompositionIdentity) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const auto spec = i % 3 == 0   ? testkit::random_basic(rng, 4, true)
                      : i % 3 == 1 ? testkit::random_bivariate(rng, 3, false)
                                   : testkit::random_general(rng, 3);
    const TypeTable table(spec);
    const auto prefix = random_prefix(rng, table.size());
    const double d = table.discount();
    const PeriodCalculator calc(table, prefix);
    for (TypeId t = 0; t < table.size(); ++t) {
      const auto& nt = table.type(t);
      double eb = 0.0, eg = 0.0;
      for (const auto& o : nt.children) {
        FrontierState s;
        s.counts.assign(table.size(), 0);
        for (auto [k, n] : o.children) s.counts[k] += n;
        const auto e = calc.epoch(s);
        eb += o.probability * e.expected_benefit;
        eg += o.probability * e.premultiplier;
      }
      const double p = nt.infection_probability;
      const auto got = calc.period(t);
      EXPECT_NEAR(got.expected_benefit, p * (nt.benefit + d * eb), 1e-12);
      EXPECT_NEAR(got.premultiplier, d * (p * eg + 1.0 - p), 1e-12);
    }
  }
}

TEST(PeriodStats, Bounds) {
  std::mt19937_64 rng(34);
  for (int i = 0; i < 20; ++i) {
    const auto spec = i % 2 ? testkit::random_univariate(rng, 4, AlphaRegime::Below, true)
                            : testkit::random_general(rng, 3);
    const TypeTable table(spec);
    const auto prefix = random_prefix(rng, table.size());
    const double d = table.discount();
    for (TypeId t = 0; t < table.size(); ++t) {
      const auto s = period_stats(table, t, prefix);
      EXPECT_GT(s.premultiplier, 0.0);
      EXPECT_LE(s.premultiplier, d + 1e-15);
      EXPECT_GE(s.expected_benefit, 0.0);
      EXPECT_LE(s.expected_benefit, 1.0 / (1.0 - d) + 1e-12);
    }
  }
}

TEST(EpochStats, BasicProjectionDoesNotDependOnRecency) {
  std::mt19937_64 rng(35);
  for (int i = 0; i < 10; ++i) {
    const auto spec = testkit::random_basic(rng, 5, true);
    const TypeTable table(spec);
    for (std::uint32_t k = 1; k <= spec.horizon; ++k) {
      std::vector<TypeId> prefix;
      for (TypeId j = 0; j < k; ++j) prefix.push_back(j);
      const PeriodCalculator calc(table, prefix);
      const auto ref = calc.children_epoch(k);
      for (std::uint32_t h = k + 1; h <= spec.horizon; ++h) {
        const auto e = calc.children_epoch(h);
        EXPECT_NEAR(e.expected_benefit, ref.expected_benefit, 1e-12);
        EXPECT_NEAR(e.premultiplier, ref.premultiplier, 1e-12);
      }
    }
  }
}

TEST(IndexValue, BivariateSpanMonotone) {
  std::mt19937_64 rng(36);
  for (int i = 0; i < 10; ++i) {
    const auto spec = testkit::random_bivariate(rng, 3, true);
    const TypeTable table(spec);
    const auto pol = weiss_dp(table);
    for (std::size_t k = 1; k < pol.ordering.sequence.size(); ++k) {
      const std::span<const TypeId> prefix(pol.ordering.sequence.data(), k);
      const PeriodCalculator calc(table, prefix);
      for (std::uint32_t h = 0; h <= spec.horizon; ++h)
        for (std::uint32_t d = 0; d < spec.horizon; ++d) {
          const TypeId a = table.bivariate_id(h, d), b = table.bivariate_id(h, d + 1);
          if (calc.in_prefix(a) || calc.in_prefix(b)) continue;
          const auto sa = calc.period(a), sb = calc.period(b);
          EXPECT_GT(sa.expected_benefit / (1 - sa.premultiplier), sb.expected_benefit / (1 - sb.premultiplier));
        }
    }
  }
}

TEST(PeriodStats, GammaComparison) {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 10; ++i) {
    auto spec = testkit::random_bivariate(rng, 4, false);
    spec.horizon = std::max<std::uint32_t>(spec.horizon, 2);
    const TypeTable table(spec);
    const TypeId pool[] = {table.bivariate_id(0, 1), table.bivariate_id(1, 1), table.bivariate_id(0, 2)};
    for (int mask = 1; mask < 8; ++mask) {
      std::vector<TypeId> prefix;
      for (int b = 0; b < 3; ++b)
        if (mask & (1 << b)) prefix.push_back(pool[b]);
      // (2, span) has potential children (0,2) and (1,1)
      if (!(mask & 2) && !(mask & 4)) continue;
      for (std::uint32_t d = 0; d <= spec.horizon; ++d) {
        const auto g2 = period_stats(table, table.bivariate_id(2, d), prefix).premultiplier;
        const auto g1 = period_stats(table, table.bivariate_id(1, d), prefix).premultiplier;
        EXPECT_LE(g2, g1 + 1e-15);
      }
    }
  }
}

TEST(EngineErrors, CapsAndCycles) {
  const TypeTable t(half_spec());
  EngineOptions tiny;
  tiny.state_cap = 2;
  const std::vector<TypeId> all{0, 1, 2};
  try {
    epoch_stats(t, single(t, 0, 3), all, tiny);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateCapExceeded);
  }

  ModelSpec g;
  g.variant = Variant::General;
  g.discount_rate = 1.0;
  GeneralTables tables;
  tables.categories = {{"a", 0, 0}};
  tables.infect = {{0.5}};
  tables.benefit = {1.0};
  tables.offspring = {{{{0}, 0.5}, {{}, 0.5}}};
  g.general = tables;
  const TypeTable cyc(g);
  const std::vector<TypeId> p{0};
  try {
    period_stats(cyc, 0, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonTerminatingGeneralModel);
  }
}

TEST(McPeriodStats, DeterministicAndThreadIndependent) {
  std::mt19937_64 rng(41);
  const TypeTable table(testkit::random_bivariate(rng, 3, true));
  const std::vector<TypeId> prefix{0, 1, 4};
  const auto a = mc_period_stats(table, 5, prefix, 5000, 99, 1);
  const auto b = mc_period_stats(table, 5, prefix, 5000, 99, 1);
  const auto c = mc_period_stats(table, 5, prefix, 5000, 99, 3);
  EXPECT_EQ(a.mean.expected_benefit, b.mean.expected_benefit);
  EXPECT_EQ(a.mean.premultiplier, b.mean.premultiplier);
  EXPECT_EQ(a.mean.expected_benefit, c.mean.expected_benefit);
  EXPECT_EQ(a.benefit_stderr, c.benefit_stderr);
  EXPECT_THROW(mc_period_stats(table, 5, prefix, 0, 1), Error);
}

TEST(McPeriodStats, AgreesWithExactValue) {
  const TypeTable t(half_spec());
  const std::vector<TypeId> p0{0};
  const auto est = mc_period_stats(t, 1, p0, 1'000'000, 2024);
  EXPECT_LE(std::abs(est.mean.expected_benefit - 0.375), 4 * est.benefit_stderr);
  EXPECT_LE(std::abs(est.mean.premultiplier - 0.375), 4 * est.premultiplier_stderr);
}

TEST(McPeriodStats, SingleQueryHasFixedDuration) {
  const TypeTable t(half_spec());
  const std::vector<TypeId> none;
  const auto est = mc_period_stats(t, 0, none, 1000, 3);
  EXPECT_EQ(est.mean.premultiplier, t.discount());
  EXPECT_EQ(est.premultiplier_stderr, 0.0);
}

TEST(McPeriodStats, ConvergesAcrossSeeds) {
  std::mt19937_64 rng(43);
  const TypeTable table(testkit::random_basic(rng, 3, true));
  std::vector<TypeId> prefix{0, 1};
  const TypeId type = static_cast<TypeId>(table.size() - 1);
  const auto exact = period_stats(table, type, prefix);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto est = mc_period_stats(table, type, prefix, 20000, seed);
    within += std::abs(est.mean.expected_benefit - exact.expected_benefit) <= 4 * est.benefit_stderr &&
              std::abs(est.mean.premultiplier - exact.premultiplier) <= 4 * est.premultiplier_stderr;
  }
  EXPECT_GE(within, 99);
}
