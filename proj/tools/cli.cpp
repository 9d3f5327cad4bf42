#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

#include "ctrace/analysis.hpp"
#include "ctrace/engine.hpp"
#include "ctrace/error.hpp"
#include "ctrace/io.hpp"
#include "ctrace/oracle.hpp"
#include "ctrace/reduction.hpp"
#include "ctrace/rng.hpp"
#include "ctrace/sim.hpp"

namespace ctrace {

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicates;
  std::optional<unsigned> threads;
  std::string out;
  std::string format = "json";
  std::string trace;
};

/// Everything a subcommand needs: the parsed config plus resolved flags.
struct Context {
  const Flags& flags;
  RunConfig cfg;
  std::string command;
  std::uint64_t config_hash = 0;

  std::uint64_t seed() const { return flags.seed.value_or(cfg.run.value("seed", std::uint64_t{0})); }
  std::uint64_t replicates() const {
    return flags.replicates.value_or(cfg.run.value("replicates", std::uint64_t{10000}));
  }
  unsigned threads() const { return flags.threads.value_or(cfg.run.value("threads", 1u)); }
  std::size_t support_cap() const { return cfg.run.value("support_cap", std::uint64_t{kDefaultSupportCap}); }
  std::uint64_t state_cap() const { return cfg.run.value("state_cap", std::uint64_t{1'000'000}); }
  EngineOptions engine() const {
    EngineOptions o;
    o.state_cap = state_cap();
    return o;
  }
  OracleOptions oracle() const { return {state_cap()}; }
};

struct Report {
  Json json;
  std::optional<std::string> csv;  // body without the header line
  int exit = kExitOk;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigParseError, msg); }

FrontierState initial_state(const Context& ctx, const TypeTable& table) {
  if (ctx.cfg.initial_state.is_null()) config_error(ctx.command + " needs 'initial_state'");
  return state_from_json(table, ctx.cfg.initial_state);
}

PriorityOrdering ordering_or_index(const Context& ctx, const TypeTable& table, bool* from_config) {
  if (ctx.cfg.run.contains("ordering")) {
    *from_config = true;
    return ordering_from_json(table, ctx.cfg.run.at("ordering"));
  }
  *from_config = false;
  return weiss_dp(table, ctx.engine()).ordering;
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

Report cmd_policy(const Context& ctx) {
  const TypeTable table(ctx.cfg.model, ctx.support_cap());
  const auto pol = weiss_dp(table, ctx.engine());
  Report r{policy_to_json(table, pol), std::nullopt, kExitOk};
  std::ostringstream os;
  os << "round,winner,index,tied\n";
  for (std::size_t k = 0; k < pol.rounds.size(); ++k) {
    os << k << ",\"" << table.describe(pol.rounds[k].winner) << "\"," << csv_number(pol.rounds[k].winner_value)
       << ',' << (pol.rounds[k].tied ? 1 : 0) << '\n';
  }
  r.csv = os.str();
  return r;
}

Report cmd_evaluate(const Context& ctx) {
  const TypeTable table(ctx.cfg.model, ctx.support_cap());
  const auto state = initial_state(ctx, table);
  bool given = false;
  const auto order = ordering_or_index(ctx, table, &given);
  const double value = evaluate_ordering_exact(table, state, order, ctx.oracle());
  Report r;
  r.json = {{"ordering", ordering_to_json(table, order)},
            {"ordering_source", given ? "config" : "index_policy"},
            {"initial_state", state_to_json(table, state.counts)},
            {"value", value}};
  r.csv = "value\n" + csv_number(value) + "\n";
  return r;
}

Report cmd_simulate(const Context& ctx) {
  const TypeTable table(ctx.cfg.model, ctx.support_cap());
  const auto state = initial_state(ctx, table);
  bool given = false;
  const auto order = ordering_or_index(ctx, table, &given);
  const auto est = estimate_policy_value(table, state, order, ctx.replicates(), ctx.seed(), ctx.threads());
  if (!ctx.flags.trace.empty()) {
    // replicate 0 uses the same forest stream as in the estimate
    const auto forest = sample_forest(table, state, derive_stream(ctx.seed(), 0));
    const auto res = run_tracer(table, forest, order, true);
    std::ofstream f(ctx.flags.trace, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidParameter, "cannot write trace file " + ctx.flags.trace);
    f << trace_log_csv(table, res.log);
  }
  Report r;
  r.json = {{"ordering", ordering_to_json(table, order)},
            {"ordering_source", given ? "config" : "index_policy"},
            {"replicates", ctx.replicates()},
            {"mean", est.mean},
            {"stderr", est.stderr_}};
  r.csv = "replicates,mean,stderr\n" + std::to_string(ctx.replicates()) + "," + csv_number(est.mean) + "," +
          csv_number(est.stderr_) + "\n";
  return r;
}

Report cmd_bruteforce(const Context& ctx) {
  const TypeTable table(ctx.cfg.model, ctx.support_cap());
  const auto state = initial_state(ctx, table);
  const auto bf = brute_force_optimal(table, state, ctx.oracle());
  Report r;
  r.json = actions_to_json(table, bf);
  r.csv = "value\n" + csv_number(bf.value) + "\n";
  return r;
}

Report cmd_verify(const Context& ctx) {
  const TypeTable table(ctx.cfg.model, ctx.support_cap());
  const auto pol = weiss_dp(table, ctx.engine());
  const auto rep = verify_structure(table, pol);
  Report r;
  r.json = structure_report_to_json(rep);
  const auto* tied = rep.find(StructureCheck::AllTied);
  std::string status = rep.passed() ? "passed" : "failed";
  if (rep.passed() && tied && tied->expected && tied->holds) status = "all-tied";
  r.json["status"] = status;
  r.json["ordering"] = ordering_to_json(table, pol.ordering);
  std::ostringstream os;
  os << "check,holds,expected\n";
  for (const auto& c : rep.checks) os << to_string(c.check) << ',' << c.holds << ',' << c.expected << '\n';
  r.csv = os.str();
  r.exit = rep.passed() ? kExitOk : kExitVerification;
  return r;
}

std::vector<double> alpha_grid(const Json& run) {
  if (run.contains("alpha_grid")) {
    try {
      return run.at("alpha_grid").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      config_error(std::string("alpha_grid: ") + e.what());
    }
  }
  const double from = run.value("alpha_from", 0.0), to = run.value("alpha_to", 3.0);
  const double step = run.value("alpha_step", 0.1);
  if (!(step > 0.0) || to < from) config_error("alpha range needs alpha_step > 0 and alpha_to >= alpha_from");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(from + step * static_cast<double>(i));
  return grid;
}

Report cmd_sweep(const Context& ctx) {
  const auto grid = alpha_grid(ctx.cfg.run);
  const auto sweep = sweep_alpha(ctx.cfg.model, grid, ctx.threads(), ctx.engine());
  return {sweep_to_json(sweep), sweep_to_csv(sweep), kExitOk};
}

Report cmd_reduce(const Context& ctx) {
  const TypeTable table(ctx.cfg.model, ctx.support_cap());
  auto instance = reduce_general(table);
  FrontierState state;
  if (ctx.cfg.initial_state.is_null()) {
    // one index case per category
    const auto& g = *table.spec().general;
    state.counts.assign(table.size(), 0);
    for (std::uint32_t c = 0; c < g.size(); ++c) ++state.counts[table.general_id(g.super_root, c)];
  } else {
    state = state_from_json(table, ctx.cfg.initial_state);
  }
  const auto depth = ctx.cfg.run.value("depth", 3u);
  Report r;
  r.json["instance"] = bandit_to_json(table, instance);
  r.json["verification"] = reduction_report_to_json(table, verify_reduction(table, instance, state, depth, ctx.state_cap()));
  if (ctx.cfg.run.contains("perturb")) {
    const auto& p = ctx.cfg.run.at("perturb");
    const TypeId victim = parse_descriptor(table, p.at("type"));
    perturb_offspring(instance, victim, p.value("delta", 0.05));
    r.json["perturbed_verification"] =
        reduction_report_to_json(table, verify_reduction(table, instance, state, depth, ctx.state_cap()));
  }
  r.exit = r.json["verification"]["max_tv_distance"].get<double>() == 0.0 ? kExitOk : kExitVerification;
  return r;
}

ExampleScenario scenario_from_json(const Json& j) {
  try {
    return {j.at("q").get<double>(), j.at("p_w").get<double>(), j.at("p_x").get<double>(),
            j.at("p_y").get<double>(), j.at("p_z").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("example2 setting: ") + e.what());
  }
}

Report cmd_example2(const Context& ctx) {
  std::vector<std::pair<std::string, ExampleScenario>> settings;
  if (ctx.cfg.run.contains("settings")) {
    for (const auto& [name, s] : ctx.cfg.run.at("settings").items()) settings.emplace_back(name, scenario_from_json(s));
  } else {
    settings = {{"A", {0.9, 0.5, 0.8, 0.3, 0.9}}, {"B", {0.5, 0.7, 0.3, 0.9, 0.5}}};
  }
  Report r;
  r.json = Json::object();
  bool all_match = true;
  std::ostringstream csv;
  csv << "setting,sequence,value,best\n";
  for (const auto& [name, sc] : settings) {
    const auto values = example_enumerate(sc);
    double best = -1.0;
    for (const auto& v : values) best = std::max(best, v.value);
    const TypeTable table(example_general_spec(sc));
    const auto pol = weiss_dp(table);
    const auto s0 = example_initial_state(table);
    const double dp_value = evaluate_ordering_exact(table, s0, pol.ordering);
    const bool match = std::abs(dp_value - best) <= 1e-12;
    all_match = all_match && match;
    Json seqs = Json::object();
    for (const auto& v : values) {
      seqs[v.name] = v.value;
      csv << name << ',' << v.name << ',' << csv_number(v.value) << ',' << (v.value == best ? 1 : 0) << '\n';
    }
    r.json[name] = {{"scenario", {{"q", sc.q}, {"p_w", sc.p_w}, {"p_x", sc.p_x}, {"p_y", sc.p_y}, {"p_z", sc.p_z}}},
                    {"enumerated", seqs},
                    {"best", best},
                    {"index_ordering", ordering_to_json(table, pol.ordering)},
                    {"index_value", dp_value},
                    {"attains_best", match}};
  }
  r.csv = csv.str();
  r.exit = all_match ? kExitOk : kExitVerification;
  return r;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCommand: return kExitUsage;
    case ErrorCode::SupportTooLarge:
    case ErrorCode::StateCapExceeded:
    case ErrorCode::ForestCapExceeded:
    case ErrorCode::TooManyTypes: return kExitCap;
    case ErrorCode::DegenerateDenominator: return kExitOther;
    default: return kExitConfig;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal contact-tracing priority orderings"};
  app.require_subcommand(1);
  Flags flags;
  using Handler = std::function<Report(const Context&)>;
  const std::vector<std::tuple<std::string, std::string, Handler, bool>> commands{
      {"policy", "index ordering from the dynamic program", cmd_policy, true},
      {"evaluate", "exact value of an ordering from the initial state", cmd_evaluate, true},
      {"simulate", "Monte Carlo estimate of an ordering's value", cmd_simulate, true},
      {"bruteforce", "optimal value and action map over all policies", cmd_bruteforce, true},
      {"verify", "structural checks on the index ordering", cmd_verify, true},
      {"sweep", "univariate ordering across a grid of alpha", cmd_sweep, true},
      {"reduce", "branching bandit instance and transition check", cmd_reduce, true},
      {"example2", "the two-day w/x/y/z scenario end to end", cmd_example2, false},
  };
  std::map<CLI::App*, std::pair<std::string, Handler>> handlers;
  for (const auto& [name, help, fn, needs_config] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* cfg = sub->add_option("--config", flags.config, "JSON run configuration");
    if (needs_config) cfg->required();
    sub->add_option("--seed", flags.seed, "base seed");
    sub->add_option("--replicates", flags.replicates, "Monte Carlo replicates");
    sub->add_option("--threads", flags.threads, "worker threads");
    sub->add_option("--out", flags.out, "output file (default stdout)");
    sub->add_option("--format", flags.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    if (name == "simulate") sub->add_option("--trace", flags.trace, "CSV trace log of replicate 0");
    handlers[sub] = {name, fn};
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const auto& [name, fn] = handlers.at(sub);
    std::string text;
    RunConfig cfg;
    if (!flags.config.empty()) {
      std::ifstream in(flags.config, std::ios::binary);
      if (!in) config_error("cannot read config file " + flags.config);
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
      cfg = parse_config(text);
    } else {
      cfg.run = Json::object();
    }
    Context ctx{flags, std::move(cfg), name, fnv1a64(text)};
    const Report rep = fn(ctx);

    std::string body;
    if (flags.format == "csv") {
      if (!rep.csv) throw Error(ErrorCode::ConfigParseError, name + " has no CSV output");
      body = "# command=" + name + " config_hash=" + hex64(ctx.config_hash) + " seed=" +
             std::to_string(ctx.seed()) + "\n" + *rep.csv;
    } else {
      Json doc{{"command", name}, {"config_hash", hex64(ctx.config_hash)}, {"seed", ctx.seed()}, {"result", rep.json}};
      body = doc.dump(2) + "\n";
    }
    if (flags.out.empty()) {
      out << body;
    } else {
      std::ofstream f(flags.out, std::ios::binary);
      if (!f) throw Error(ErrorCode::InvalidParameter, "cannot write " + flags.out);
      f << body;
    }
    return rep.exit;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace ctrace
