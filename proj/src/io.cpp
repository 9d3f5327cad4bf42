#include "ctrace/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "ctrace/error.hpp"

namespace ctrace {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigParseError, msg); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) config_error(std::string("missing key '") + key + "'");
  return j.at(key);
}

std::uint32_t category_ref(const GeneralTables& g, const Json& j) {
  if (j.is_string()) {
    auto c = g.find_category(j.get<std::string>());
    if (!c) config_error("unknown category '" + j.get<std::string>() + "'");
    return *c;
  }
  if (j.is_number_unsigned() && j.get<std::uint64_t>() < g.size()) return j.get<std::uint32_t>();
  config_error("category reference must be a name or an index below " + std::to_string(g.size()));
}

ContactDistribution contacts_from_json(const Json& j) {
  if (!j.is_object()) config_error("contacts must be an object");
  if (j.contains("bernoulli")) return ContactDistribution::bernoulli(j.at("bernoulli").get<double>());
  if (j.contains("poisson")) return ContactDistribution::poisson(j.at("poisson").get<double>());
  if (j.contains("pmf")) {
    std::vector<std::pair<std::uint32_t, double>> pmf;
    for (const auto& e : j.at("pmf")) {
      if (!e.is_array() || e.size() != 2) config_error("pmf entries must be [count, probability]");
      pmf.emplace_back(e[0].get<std::uint32_t>(), e[1].get<double>());
    }
    return ContactDistribution::from_pmf(std::move(pmf));
  }
  config_error("contacts needs one of 'bernoulli', 'poisson', 'pmf'");
}

GeneralTables general_from_json(const Json& j) {
  GeneralTables g;
  for (const auto& c : require(j, "categories")) {
    Category cat;
    cat.name = require(c, "name").get<std::string>();
    cat.recency = c.value("recency", 0u);
    cat.role = c.value("role", 0u);
    g.categories.push_back(cat);
  }
  const std::size_t n = g.size();
  g.super_root = category_ref(g, require(j, "super_root"));
  g.infect.assign(n, std::vector<double>(n, 0.0));
  if (j.contains("infect")) {
    const auto& m = j.at("infect");
    if (!m.is_array() || m.size() != n) config_error("infect must be a C x C matrix");
    for (std::size_t a = 0; a < n; ++a) {
      if (!m[a].is_array() || m[a].size() != n) config_error("infect must be a C x C matrix");
      for (std::size_t b = 0; b < n; ++b) g.infect[a][b] = m[a][b].get<double>();
    }
  }
  if (j.contains("infect_entries")) {
    for (const auto& e : j.at("infect_entries")) {
      if (!e.is_array() || e.size() != 3) config_error("infect_entries must be [parent, category, p]");
      g.infect[category_ref(g, e[0])][category_ref(g, e[1])] = e[2].get<double>();
    }
  }
  g.benefit.assign(n, 0.0);
  if (j.contains("benefit")) {
    const auto& b = j.at("benefit");
    if (b.is_array()) {
      if (b.size() != n) config_error("benefit must have one entry per category");
      for (std::size_t a = 0; a < n; ++a) g.benefit[a] = b[a].get<double>();
    } else if (b.is_object()) {
      for (const auto& [k, v] : b.items()) g.benefit[category_ref(g, Json(k))] = v.get<double>();
    } else {
      config_error("benefit must be an array or an object");
    }
  }
  g.offspring.assign(n, {OffspringOutcome{{}, 1.0}});
  if (j.contains("offspring")) {
    for (const auto& [k, outcomes] : j.at("offspring").items()) {
      const std::uint32_t c = category_ref(g, Json(k));
      std::vector<OffspringOutcome> list;
      for (const auto& o : outcomes) {
        if (!o.is_array() || o.size() != 2 || !o[0].is_array()) {
          config_error("offspring outcomes must be [[categories...], probability]");
        }
        OffspringOutcome out;
        for (const auto& cat : o[0]) out.categories.push_back(category_ref(g, cat));
        out.probability = o[1].get<double>();
        list.push_back(std::move(out));
      }
      g.offspring[c] = std::move(list);
    }
  }
  return g;
}

}  // namespace

ModelSpec model_from_json(const Json& j) {
  try {
    ModelSpec spec;
    const auto variant = parse_variant(require(j, "variant").get<std::string>());
    if (!variant) config_error("variant must be basic, univariate, bivariate or general");
    spec.variant = *variant;
    spec.horizon = j.value("horizon", 0u);
    spec.base_infection = j.value("base_infection", 1.0);
    spec.infection_decay = j.value("infection_decay", 0.0);
    spec.discount_rate = require(j, "discount_rate").get<double>();
    if (spec.variant == Variant::General) {
      if (j.contains("general")) spec.general = general_from_json(j.at("general"));
    } else {
      spec.contacts = contacts_from_json(require(j, "contacts"));
    }
    return validate_model(spec);
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("model: ") + e.what());
  }
}

Json model_to_json(const ModelSpec& spec) {
  Json j;
  j["variant"] = std::string(to_string(spec.variant));
  j["horizon"] = spec.horizon;
  j["base_infection"] = spec.base_infection;
  j["infection_decay"] = spec.infection_decay;
  j["discount_rate"] = spec.discount_rate;
  if (spec.variant != Variant::General) {
    if (spec.contacts.poisson_rate) {
      j["contacts"] = {{"poisson", *spec.contacts.poisson_rate}};
    } else {
      Json pmf = Json::array();
      for (auto [k, p] : spec.contacts.pmf) pmf.push_back({k, p});
      j["contacts"] = {{"pmf", pmf}};
    }
  }
  if (spec.general) {
    const auto& g = *spec.general;
    Json cats = Json::array();
    for (const auto& c : g.categories) cats.push_back({{"name", c.name}, {"recency", c.recency}, {"role", c.role}});
    Json off = Json::object();
    for (std::size_t c = 0; c < g.size(); ++c) {
      Json list = Json::array();
      for (const auto& o : g.offspring[c]) {
        Json names = Json::array();
        for (auto k : o.categories) names.push_back(g.categories[k].name);
        list.push_back({names, o.probability});
      }
      off[g.categories[c].name] = list;
    }
    j["general"] = {{"categories", cats},
                    {"super_root", g.categories[g.super_root].name},
                    {"infect", g.infect},
                    {"benefit", g.benefit},
                    {"offspring", off}};
  }
  return j;
}

TypeId parse_descriptor(const TypeTable& table, const Json& j) {
  try {
    switch (table.spec().variant) {
      case Variant::Basic:
      case Variant::Univariate:
        if (!j.is_number_unsigned()) config_error("descriptor must be a recency");
        return table.basic_id(j.get<std::uint32_t>());
      case Variant::Bivariate:
        if (!j.is_array() || j.size() != 2) config_error("descriptor must be [recency, span]");
        return table.bivariate_id(j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>());
      case Variant::General: {
        if (!j.is_array() || j.size() != 2) config_error("descriptor must be [parent category, category]");
        const auto& g = *table.spec().general;
        return table.general_id(category_ref(g, j[0]), category_ref(g, j[1]));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("descriptor: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParseError) throw;
    config_error(std::string("descriptor: ") + e.what());
  }
  config_error("unsupported descriptor");
}

Json descriptor_json(const TypeTable& table, TypeId id) {
  const auto& t = table.type(id);
  switch (table.spec().variant) {
    case Variant::Basic:
    case Variant::Univariate:
      return t.recency;
    case Variant::Bivariate:
      return Json::array({t.recency, t.span});
    case Variant::General: {
      const auto& g = *table.spec().general;
      return Json::array({g.categories[t.parent_category].name, g.categories[t.category].name});
    }
  }
  return nullptr;
}

FrontierState state_from_json(const TypeTable& table, const Json& j) {
  if (!j.is_array()) config_error("initial_state must be a list of [descriptor, count]");
  FrontierState s;
  s.counts.assign(table.size(), 0);
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[1].is_number_unsigned()) {
      config_error("initial_state entries must be [descriptor, count]");
    }
    s.counts[parse_descriptor(table, e[0])] += e[1].get<std::uint32_t>();
  }
  return s;
}

Json state_to_json(const TypeTable& table, const std::vector<std::uint32_t>& counts) {
  Json out = Json::array();
  for (TypeId t = 0; t < counts.size(); ++t)
    if (counts[t] > 0) out.push_back({descriptor_json(table, t), counts[t]});
  return out;
}

PriorityOrdering ordering_from_json(const TypeTable& table, const Json& j) {
  if (!j.is_array()) config_error("ordering must be a list of descriptors");
  PriorityOrdering o;
  std::vector<char> seen(table.size(), 0);
  for (const auto& e : j) {
    const TypeId t = parse_descriptor(table, e);
    if (seen[t]) config_error("ordering repeats " + table.describe(t));
    seen[t] = 1;
    o.sequence.push_back(t);
  }
  if (o.sequence.size() != table.size()) config_error("ordering must list every type exactly once");
  return o;
}

Json ordering_to_json(const TypeTable& table, const PriorityOrdering& ordering) {
  Json out = Json::array();
  for (auto t : ordering.sequence) out.push_back(descriptor_json(table, t));
  return out;
}

Json policy_to_json(const TypeTable& table, const IndexPolicy& policy) {
  Json rounds = Json::array();
  for (std::size_t k = 0; k < policy.rounds.size(); ++k) {
    const auto& r = policy.rounds[k];
    Json cands = Json::array();
    for (const auto& [t, v] : r.candidates) cands.push_back({{"type", descriptor_json(table, t)}, {"index", v}});
    rounds.push_back({{"round", k},
                      {"winner", descriptor_json(table, r.winner)},
                      {"index", r.winner_value},
                      {"tied", r.tied},
                      {"candidates", cands}});
  }
  return {{"ordering", ordering_to_json(table, policy.ordering)}, {"ties", policy.ties}, {"rounds", rounds}};
}

Json actions_to_json(const TypeTable& table, const BruteForceResult& result) {
  Json actions = Json::array();
  for (const auto& [counts, action] : result.actions) {
    actions.push_back({{"state", state_to_json(table, counts)}, {"action", descriptor_json(table, action)}});
  }
  return {{"value", result.value}, {"actions", actions}};
}

Json bandit_to_json(const TypeTable& table, const BanditInstance& instance) {
  Json classes = Json::array();
  for (const auto& c : instance.classes) {
    Json off = Json::array();
    for (const auto& o : c.offspring) {
      Json arms = Json::array();
      for (auto [k, n] : o.children) arms.push_back({k, n});
      off.push_back({{"arms", arms}, {"probability", o.probability}});
    }
    classes.push_back({{"class", c.id},
                       {"type", descriptor_json(table, c.id)},
                       {"infected_branch", {{"probability", c.infected_probability},
                                            {"reward", c.reward},
                                            {"offspring", off}}},
                       {"uninfected_branch", {{"probability", 1.0 - c.infected_probability}, {"reward", 0.0}}}});
  }
  return {{"eta", instance.eta}, {"pull_duration", 1}, {"classes", classes}};
}

Json reduction_report_to_json(const TypeTable& table, const ReductionReport& report) {
  Json j{{"comparisons", report.comparisons}, {"max_tv_distance", report.max_tv_distance}};
  if (!report.worst_state.empty()) {
    j["worst_state"] = state_to_json(table, report.worst_state);
    j["worst_action"] = descriptor_json(table, report.worst_action);
  }
  return j;
}

Json structure_report_to_json(const StructureReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"check", std::string(to_string(c.check))},
                      {"holds", c.holds},
                      {"expected", c.expected},
                      {"violations", c.violations}});
  }
  return {{"passed", report.passed()}, {"checks", checks}, {"informational", report.informational}};
}

Json sweep_to_json(const SweepResult& sweep) {
  Json rows = Json::array();
  for (const auto& r : sweep.rows) {
    rows.push_back({{"alpha", r.alpha},
                    {"ordering", r.ordering},
                    {"recency_ordered", r.recency_ordered},
                    {"reverse_recency_ordered", r.reverse_recency_ordered},
                    {"interleaved", r.interleaved},
                    {"all_tied", r.all_tied}});
  }
  Json j{{"rows", rows}};
  j["first_break_alpha"] = sweep.first_break ? Json(sweep.rows[*sweep.first_break].alpha) : Json(nullptr);
  j["bracket"] = sweep.bracket ? Json::array({sweep.bracket->first, sweep.bracket->second}) : Json(nullptr);
  return j;
}

std::string sweep_to_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "alpha,ordering,recency_ordered,reverse_recency_ordered,interleaved,all_tied\n";
  for (const auto& r : sweep.rows) {
    os << r.alpha << ',';
    for (std::size_t i = 0; i < r.ordering.size(); ++i) os << (i ? " " : "") << r.ordering[i];
    os << ',' << r.recency_ordered << ',' << r.reverse_recency_ordered << ',' << r.interleaved << ','
       << r.all_tied << '\n';
  }
  return os.str();
}

RunConfig parse_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  RunConfig cfg;
  cfg.model = model_from_json(require(j, "model"));
  cfg.initial_state = j.contains("initial_state") ? j.at("initial_state") : Json(nullptr);
  cfg.run = j.contains("run") ? j.at("run") : Json::object();
  if (!cfg.run.is_object()) config_error("run must be an object");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ctrace
