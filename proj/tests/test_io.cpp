#include <gtest/gtest.h>

#include <random>

#include "ctrace/analysis.hpp"
#include "ctrace/error.hpp"
#include "ctrace/io.hpp"
#include "test_support.hpp"

using namespace ctrace;

namespace {

void expect_same_table(const ModelSpec& a, const ModelSpec& b) {
  const TypeTable ta(a), tb(b);
  ASSERT_EQ(ta.size(), tb.size());
  for (TypeId t = 0; t < ta.size(); ++t) {
    EXPECT_EQ(ta.type(t).infection_probability, tb.type(t).infection_probability);
    EXPECT_EQ(ta.type(t).benefit, tb.type(t).benefit);
    ASSERT_EQ(ta.type(t).children.size(), tb.type(t).children.size());
    for (std::size_t o = 0; o < ta.type(t).children.size(); ++o) {
      EXPECT_EQ(ta.type(t).children[o].children, tb.type(t).children[o].children);
      EXPECT_NEAR(ta.type(t).children[o].probability, tb.type(t).children[o].probability, 1e-15);
    }
  }
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::UnknownCommand;
}

}  // namespace

TEST(ModelJson, RoundTripsEveryVariant) {
  std::mt19937_64 rng(91);
  const std::vector<ModelSpec> specs{testkit::random_basic(rng, 3, true),
                                     testkit::random_univariate(rng, 3, testkit::AlphaRegime::Below, false),
                                     testkit::random_bivariate(rng, 2, true), testkit::random_general(rng, 3)};
  for (const auto& s : specs) {
    const Json j = model_to_json(s);
    const ModelSpec back = model_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back.variant, s.variant);
    EXPECT_EQ(back.horizon, s.horizon);
    expect_same_table(s, back);
  }
}

TEST(ModelJson, GeneralByEntries) {
  const auto cfg = parse_config(R"({
    "model": {"variant": "general", "horizon": 2, "discount_rate": 0.6931471805599453,
      "general": {
        "categories": [{"name": "w", "recency": 2}, {"name": "x", "recency": 1},
                       {"name": "y", "recency": 0}, {"name": "z", "recency": 0}],
        "super_root": "w",
        "infect_entries": [["w", "x", 0.8], ["w", "y", 0.3], ["x", "z", 0.9]],
        "benefit": {"w": 0.0, "x": 0.5, "y": 1.0, "z": 1.0},
        "offspring": {"x": [[["z"], 0.9], [[], 0.1]]}}},
    "initial_state": [[["w", "x"], 1], [["w", "y"], 1]]})");
  expect_same_table(cfg.model, example_general_spec({0.9, 0.5, 0.8, 0.3, 0.9}));
  const TypeTable t(cfg.model);
  const auto s = state_from_json(t, cfg.initial_state);
  EXPECT_EQ(s.counts, example_initial_state(t).counts);
  EXPECT_TRUE(cfg.run.is_object());
  EXPECT_TRUE(cfg.run.empty());
}

TEST(Descriptors, ParseAndPrint) {
  ModelSpec s;
  s.variant = Variant::Bivariate;
  s.horizon = 2;
  s.infection_decay = 0.5;
  const TypeTable t(s);
  const TypeId id = parse_descriptor(t, Json::array({1, 1}));
  EXPECT_EQ(id, t.bivariate_id(1, 1));
  EXPECT_EQ(descriptor_json(t, id), Json::array({1, 1}));
  EXPECT_EQ(code_of([&] { parse_descriptor(t, Json(1)); }), ErrorCode::ConfigParseError);
  EXPECT_EQ(code_of([&] { parse_descriptor(t, Json::array({3, 0})); }), ErrorCode::ConfigParseError);

  PriorityOrdering o;
  for (TypeId i = 0; i < t.size(); ++i) o.sequence.push_back(static_cast<TypeId>(t.size() - 1 - i));
  EXPECT_EQ(ordering_from_json(t, ordering_to_json(t, o)).sequence, o.sequence);
  EXPECT_EQ(code_of([&] { ordering_from_json(t, Json::array({Json::array({0, 0})})); }),
            ErrorCode::ConfigParseError);
  const std::vector<std::uint32_t> counts{0, 2, 0, 0, 0, 0, 0, 0, 1};
  EXPECT_EQ(state_from_json(t, state_to_json(t, counts)).counts, counts);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { parse_config("{"); }), ErrorCode::ConfigParseError);
  EXPECT_EQ(code_of([] { parse_config("[]"); }), ErrorCode::ConfigParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"run": {}})"); }), ErrorCode::ConfigParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"model": {"variant": "quadratic", "horizon": 1}})"); }),
            ErrorCode::ConfigParseError);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::ConfigParseError);
}

TEST(Hash, Fnv1a64Vectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(SweepCsv, FixedColumns) {
  SweepResult s;
  s.rows.push_back({0.5, {0, 2, 1}, false, false, true, false});
  EXPECT_EQ(sweep_to_csv(s),
            "alpha,ordering,recency_ordered,reverse_recency_ordered,interleaved,all_tied\n0.5,0 2 1,0,0,1,0\n");
  const Json j = sweep_to_json(s);
  EXPECT_TRUE(j.at("bracket").is_null());
}
