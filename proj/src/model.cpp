#include "ctrace/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "ctrace/error.hpp"
#include "ctrace/rng.hpp"

namespace ctrace {

namespace {

constexpr double kNormTolerance = 1e-9;
constexpr double kPoissonTail = 1e-9;

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::ProbabilityOutOfRange, what + " must lie in [0,1]");
}

std::vector<std::pair<std::uint32_t, double>> normalize_pmf(
    std::vector<std::pair<std::uint32_t, double>> pmf, const std::string& what) {
  std::map<std::uint32_t, double> merged;
  for (auto [k, p] : pmf) {
    check_probability(p, what + " probability");
    if (p > 0.0) merged[k] += p;
  }
  double sum = 0.0;
  for (auto& [k, p] : merged) sum += p;
  if (merged.empty() || std::abs(sum - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os << what << " sums to " << sum;
    throw Error(ErrorCode::PmfNotNormalized, os.str());
  }
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(merged.size());
  for (auto& [k, p] : merged) out.emplace_back(k, p / sum);
  return out;
}

std::vector<OffspringOutcome> normalize_offspring(std::vector<OffspringOutcome> outcomes,
                                                  std::size_t num_categories,
                                                  const std::string& what) {
  std::map<std::vector<std::uint32_t>, double> merged;
  for (auto& o : outcomes) {
    check_probability(o.probability, what + " probability");
    for (auto c : o.categories) {
      if (c >= num_categories) throw Error(ErrorCode::InvalidParameter, what + " references unknown category");
    }
    if (o.probability <= 0.0) continue;
    std::sort(o.categories.begin(), o.categories.end());
    merged[o.categories] += o.probability;
  }
  double sum = 0.0;
  for (auto& [cats, p] : merged) sum += p;
  if (merged.empty() || std::abs(sum - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os << what << " sums to " << sum;
    throw Error(ErrorCode::PmfNotNormalized, os.str());
  }
  std::vector<OffspringOutcome> out;
  for (auto& [cats, p] : merged) out.push_back({cats, p / sum});
  return out;
}

std::uint32_t sample_pmf(const std::vector<std::pair<std::uint32_t, double>>& pmf, double u) {
  double cum = 0.0;
  for (auto [k, p] : pmf) {
    cum += p;
    if (u < cum) return k;
  }
  return pmf.back().first;
}

std::uint32_t sample_poisson(double rate, double u) {
  double p = std::exp(-rate);
  double cum = p;
  std::uint32_t k = 0;
  while (u >= cum && k < 10000) {
    ++k;
    p *= rate / k;
    if (p == 0.0) break;
    cum += p;
  }
  return k;
}

std::vector<TypeId> general_type_lookup(const GeneralTables& g) {
  const std::uint32_t n = static_cast<std::uint32_t>(g.size());
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> keys;
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) keys.emplace_back(g.categories[b].recency, a, b);
  std::sort(keys.begin(), keys.end());
  std::vector<TypeId> lookup(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    lookup[std::get<1>(keys[i]) * n + std::get<2>(keys[i])] = static_cast<TypeId>(i);
  }
  return lookup;
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::Basic: return "basic";
    case Variant::Univariate: return "univariate";
    case Variant::Bivariate: return "bivariate";
    case Variant::General: return "general";
  }
  return "basic";
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "basic") return Variant::Basic;
  if (name == "univariate") return Variant::Univariate;
  if (name == "bivariate") return Variant::Bivariate;
  if (name == "general") return Variant::General;
  return std::nullopt;
}

ContactDistribution ContactDistribution::bernoulli(double c) {
  check_probability(c, "Bernoulli parameter");
  ContactDistribution d;
  d.pmf.clear();
  if (c < 1.0) d.pmf.emplace_back(0, 1.0 - c);
  if (c > 0.0) d.pmf.emplace_back(1, c);
  return d;
}

ContactDistribution ContactDistribution::poisson(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw Error(ErrorCode::InvalidParameter, "Poisson rate must be >= 0");
  ContactDistribution d;
  d.pmf.clear();
  d.poisson_rate = rate;
  double p = std::exp(-rate);
  double cum = 0.0;
  for (std::uint32_t k = 0;; ++k) {
    if (k > 0) p *= rate / k;
    cum += p;
    d.pmf.emplace_back(k, p);
    if (cum >= 1.0 - kPoissonTail || p == 0.0) break;
  }
  for (auto& [k, q] : d.pmf) q /= cum;
  return d;
}

ContactDistribution ContactDistribution::from_pmf(std::vector<std::pair<std::uint32_t, double>> pmf) {
  ContactDistribution d;
  d.pmf = normalize_pmf(std::move(pmf), "contact pmf");
  return d;
}

double ContactDistribution::mean() const {
  if (poisson_rate) return *poisson_rate;
  double m = 0.0;
  for (auto [k, p] : pmf) m += k * p;
  return m;
}

std::optional<std::uint32_t> GeneralTables::find_category(std::string_view name) const {
  for (std::uint32_t c = 0; c < categories.size(); ++c) {
    if (categories[c].name == name) return c;
  }
  return std::nullopt;
}

ModelSpec validate_model(ModelSpec spec) {
  if (!(spec.discount_rate > 0.0) || !std::isfinite(spec.discount_rate)) {
    throw Error(ErrorCode::NonPositiveBeta, "discount rate must be positive");
  }
  if (!(spec.base_infection > 0.0 && spec.base_infection <= 1.0)) {
    throw Error(ErrorCode::ProbabilityOutOfRange, "base infection probability must lie in (0,1]");
  }
  if (!(spec.infection_decay >= 0.0) || !std::isfinite(spec.infection_decay)) {
    throw Error(ErrorCode::InvalidParameter, "infection decay must be >= 0");
  }
  if (spec.variant == Variant::General) {
    if (!spec.general) throw Error(ErrorCode::MissingGeneralTables, "general variant requires tables");
    auto& g = *spec.general;
    const std::size_t n = g.size();
    if (n == 0) throw Error(ErrorCode::InvalidParameter, "general tables need at least one category");
    if (g.super_root >= n) throw Error(ErrorCode::InvalidParameter, "super-root category out of range");
    if (g.infect.size() != n || g.benefit.size() != n || g.offspring.size() != n) {
      throw Error(ErrorCode::InvalidParameter, "general table dimensions do not match category count");
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (g.infect[a].size() != n) throw Error(ErrorCode::InvalidParameter, "infect matrix must be square");
      for (double p : g.infect[a]) check_probability(p, "infect entry");
      check_probability(g.benefit[a], "benefit entry");
      g.offspring[a] = normalize_offspring(std::move(g.offspring[a]), n, "offspring of " + g.categories[a].name);
    }
  } else {
    if (spec.general) throw Error(ErrorCode::InvalidParameter, "general tables given for a non-general variant");
    auto rate = spec.contacts.poisson_rate;
    spec.contacts.pmf = normalize_pmf(std::move(spec.contacts.pmf), "contact pmf");
    spec.contacts.poisson_rate = rate;
  }
  return spec;
}

double infection_probability(const ModelSpec& spec, const NodeType& type) {
  switch (spec.variant) {
    case Variant::Basic:
      return spec.base_infection;
    case Variant::Univariate:
      return spec.base_infection *
             std::exp(-spec.infection_decay * (static_cast<double>(spec.horizon) - type.recency));
    case Variant::Bivariate:
      return spec.base_infection * std::exp(-spec.infection_decay * type.span);
    case Variant::General:
      return spec.general->infect[type.parent_category][type.category];
  }
  return 0.0;
}

double immediate_benefit(const ModelSpec& spec, const NodeType& type) {
  if (spec.variant == Variant::General) return spec.general->benefit[type.category];
  return std::exp(-spec.discount_rate * type.recency);
}

ChildDistribution child_type_distribution(const ModelSpec& spec, const NodeType& type,
                                          std::size_t support_cap) {
  ChildDistribution out;
  if (spec.variant == Variant::General) {
    const auto& g = *spec.general;
    const std::uint32_t n = static_cast<std::uint32_t>(g.size());
    const std::uint32_t c = static_cast<std::uint32_t>(type.category);
    if (g.offspring[c].size() > support_cap) {
      throw Error(ErrorCode::SupportTooLarge, "offspring support exceeds cap");
    }
    const auto lookup = general_type_lookup(g);
    std::map<TypeCounts, double> merged;
    for (const auto& o : g.offspring[c]) {
      std::map<TypeId, std::uint32_t> counts;
      for (auto k : o.categories) ++counts[lookup[c * n + k]];
      merged[TypeCounts(counts.begin(), counts.end())] += o.probability;
    }
    for (auto& [tc, p] : merged) out.push_back({tc, p});
    return out;
  }

  const auto& pmf = spec.contacts.pmf;
  const std::uint32_t h = type.recency;
  out.push_back({{}, 1.0});
  for (std::uint32_t j = 0; j < h; ++j) {
    if (out.size() * pmf.size() > support_cap) {
      throw Error(ErrorCode::SupportTooLarge, "child distribution support exceeds cap");
    }
    const TypeId child = spec.variant == Variant::Bivariate ? j * (spec.horizon + 1) + (h - j) : j;
    ChildDistribution next;
    next.reserve(out.size() * pmf.size());
    for (const auto& o : out) {
      for (auto [k, p] : pmf) {
        ChildOutcome e{o.children, o.probability * p};
        if (k > 0) e.children.emplace_back(child, k);
        next.push_back(std::move(e));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<NodeType> enumerate_types(const ModelSpec& spec, std::size_t support_cap) {
  std::vector<NodeType> types;
  const std::uint32_t T = spec.horizon;
  switch (spec.variant) {
    case Variant::Basic:
    case Variant::Univariate:
      for (std::uint32_t h = 0; h <= T; ++h) {
        NodeType t;
        t.recency = h;
        types.push_back(t);
      }
      break;
    case Variant::Bivariate:
      for (std::uint32_t h = 0; h <= T; ++h)
        for (std::uint32_t d = 0; d <= T; ++d) {
          NodeType t;
          t.recency = h;
          t.span = static_cast<std::int32_t>(d);
          types.push_back(t);
        }
      break;
    case Variant::General: {
      const auto& g = *spec.general;
      const std::uint32_t n = static_cast<std::uint32_t>(g.size());
      for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b) {
          NodeType t;
          t.recency = g.categories[b].recency;
          t.parent_category = static_cast<std::int32_t>(a);
          t.category = static_cast<std::int32_t>(b);
          types.push_back(t);
        }
      std::stable_sort(types.begin(), types.end(), [](const NodeType& x, const NodeType& y) {
        return std::tie(x.recency, x.parent_category, x.category) <
               std::tie(y.recency, y.parent_category, y.category);
      });
      break;
    }
  }
  for (std::size_t i = 0; i < types.size(); ++i) {
    auto& t = types[i];
    t.id = static_cast<TypeId>(i);
    t.infection_probability = infection_probability(spec, t);
    t.benefit = immediate_benefit(spec, t);
    t.children = child_type_distribution(spec, t, support_cap);
  }
  return types;
}

TypeTable::TypeTable(const ModelSpec& spec, std::size_t support_cap)
    : spec_(validate_model(spec)), types_(enumerate_types(spec_, support_cap)) {
  if (spec_.variant == Variant::General) {
    const std::size_t n = spec_.general->size();
    general_lookup_.assign(n * n, 0);
    for (const auto& t : types_) general_lookup_[t.parent_category * n + t.category] = t.id;
  }
}

TypeTable::TypeTable(const ModelSpec& spec, std::vector<NodeType> types)
    : spec_(validate_model(spec)), types_(std::move(types)) {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (types_[i].id != i) throw Error(ErrorCode::InvalidParameter, "type ids must be dense and ordered");
    for (const auto& o : types_[i].children)
      for (auto [k, n] : o.children)
        if (k >= types_.size()) throw Error(ErrorCode::InvalidParameter, "child references unknown type");
  }
  if (spec_.variant == Variant::General) {
    const std::size_t n = spec_.general->size();
    if (types_.size() != n * n) throw Error(ErrorCode::InvalidParameter, "general model needs C^2 types");
    general_lookup_.assign(n * n, 0);
    for (const auto& t : types_) general_lookup_[t.parent_category * n + t.category] = t.id;
  }
}

double TypeTable::discount() const { return std::exp(-spec_.discount_rate); }

TypeId TypeTable::basic_id(std::uint32_t recency) const {
  if (spec_.variant != Variant::Basic && spec_.variant != Variant::Univariate) {
    throw Error(ErrorCode::VariantMismatch, "recency descriptor needs basic or univariate model");
  }
  if (recency > spec_.horizon) throw Error(ErrorCode::InvalidParameter, "recency exceeds horizon");
  return recency;
}

TypeId TypeTable::bivariate_id(std::uint32_t recency, std::uint32_t span) const {
  if (spec_.variant != Variant::Bivariate) {
    throw Error(ErrorCode::VariantMismatch, "(recency, span) descriptor needs bivariate model");
  }
  if (recency > spec_.horizon || span > spec_.horizon) {
    throw Error(ErrorCode::InvalidParameter, "recency or span exceeds horizon");
  }
  return recency * (spec_.horizon + 1) + span;
}

TypeId TypeTable::general_id(std::uint32_t parent_category, std::uint32_t category) const {
  if (spec_.variant != Variant::General) {
    throw Error(ErrorCode::VariantMismatch, "category-pair descriptor needs general model");
  }
  const std::size_t n = spec_.general->size();
  if (parent_category >= n || category >= n) throw Error(ErrorCode::InvalidParameter, "category out of range");
  return general_lookup_[parent_category * n + category];
}

std::string TypeTable::describe(TypeId id) const {
  const auto& t = types_.at(id);
  switch (spec_.variant) {
    case Variant::Basic:
    case Variant::Univariate:
      return std::to_string(t.recency);
    case Variant::Bivariate:
      return "(" + std::to_string(t.recency) + "," + std::to_string(t.span) + ")";
    case Variant::General: {
      const auto& g = *spec_.general;
      return "(" + g.categories[t.parent_category].name + "," + g.categories[t.category].name + ")";
    }
  }
  return {};
}

void TypeTable::sample_children(TypeId id, CounterRng& rng, std::vector<TypeId>& out) const {
  const auto& t = types_[id];
  if (spec_.variant == Variant::General) {
    const auto& outcomes = spec_.general->offspring[t.category];
    const double u = rng.uniform();
    double cum = 0.0;
    const OffspringOutcome* pick = &outcomes.back();
    for (const auto& o : outcomes) {
      cum += o.probability;
      if (u < cum) {
        pick = &o;
        break;
      }
    }
    for (auto k : pick->categories) out.push_back(general_id(t.category, k));
    return;
  }
  for (std::uint32_t j = 0; j < t.recency; ++j) {
    const double u = rng.uniform();
    const std::uint32_t k = spec_.contacts.poisson_rate ? sample_poisson(*spec_.contacts.poisson_rate, u)
                                                        : sample_pmf(spec_.contacts.pmf, u);
    const TypeId child = spec_.variant == Variant::Bivariate ? j * (spec_.horizon + 1) + (t.recency - j) : j;
    out.insert(out.end(), k, child);
  }
}

std::uint64_t FrontierState::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

}  // namespace ctrace
