#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctrace {

class CounterRng;

enum class Variant { Basic, Univariate, Bivariate, General };

std::string_view to_string(Variant variant);
std::optional<Variant> parse_variant(std::string_view name);

using TypeId = std::uint32_t;

/// Distribution of new contacts met per step. `pmf` is always finite; for a
/// Poisson law it holds the truncation used by exact computations while
/// `poisson_rate` keeps the untruncated law for sampling.
struct ContactDistribution {
  std::vector<std::pair<std::uint32_t, double>> pmf{{0, 1.0}};
  std::optional<double> poisson_rate;

  static ContactDistribution bernoulli(double c);
  static ContactDistribution poisson(double rate);
  static ContactDistribution from_pmf(std::vector<std::pair<std::uint32_t, double>> pmf);

  double mean() const;
};

struct Category {
  std::string name;
  std::uint32_t recency = 0;
  std::uint32_t role = 0;
};

/// One outcome of D_c: the categories of all contacts (with repetition).
struct OffspringOutcome {
  std::vector<std::uint32_t> categories;
  double probability = 0.0;
};

struct GeneralTables {
  std::vector<Category> categories;
  std::uint32_t super_root = 0;
  std::vector<std::vector<double>> infect;  // infect[c'][c]
  std::vector<double> benefit;
  std::vector<std::vector<OffspringOutcome>> offspring;

  std::size_t size() const { return categories.size(); }
  std::optional<std::uint32_t> find_category(std::string_view name) const;
};

struct ModelSpec {
  Variant variant = Variant::Basic;
  std::uint32_t horizon = 0;
  double base_infection = 1.0;
  double infection_decay = 0.0;
  double discount_rate = 1.0;
  ContactDistribution contacts;
  std::optional<GeneralTables> general;
};

/// Child multiset as sorted (type, count) pairs.
using TypeCounts = std::vector<std::pair<TypeId, std::uint32_t>>;

struct ChildOutcome {
  TypeCounts children;
  double probability = 0.0;
};

using ChildDistribution = std::vector<ChildOutcome>;

struct NodeType {
  TypeId id = 0;
  std::uint32_t recency = 0;
  std::int32_t span = -1;             // bivariate only
  std::int32_t parent_category = -1;  // general only
  std::int32_t category = -1;         // general only
  double infection_probability = 0.0;
  double benefit = 0.0;
  ChildDistribution children;
};

inline constexpr std::size_t kDefaultSupportCap = 1'000'000;

ModelSpec validate_model(ModelSpec spec);

/// Types with infection probability, benefit and child distribution filled.
std::vector<NodeType> enumerate_types(const ModelSpec& spec,
                                      std::size_t support_cap = kDefaultSupportCap);

double infection_probability(const ModelSpec& spec, const NodeType& type);
double immediate_benefit(const ModelSpec& spec, const NodeType& type);
ChildDistribution child_type_distribution(const ModelSpec& spec, const NodeType& type,
                                          std::size_t support_cap = kDefaultSupportCap);

/// A validated spec together with its materialized types.
class TypeTable {
 public:
  explicit TypeTable(const ModelSpec& spec, std::size_t support_cap = kDefaultSupportCap);
  /// Adopts externally built types (dense ids, valid child ids). The spec
  /// supplies the discount rate and descriptors.
  TypeTable(const ModelSpec& spec, std::vector<NodeType> types);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<NodeType>& types() const { return types_; }
  const NodeType& type(TypeId id) const { return types_[id]; }
  std::size_t size() const { return types_.size(); }
  double discount() const;  // e^{-beta}

  TypeId basic_id(std::uint32_t recency) const;
  TypeId bivariate_id(std::uint32_t recency, std::uint32_t span) const;
  TypeId general_id(std::uint32_t parent_category, std::uint32_t category) const;

  std::string describe(TypeId id) const;

  /// Draws the potential contacts of an infected node of the given type,
  /// appending their type ids to `out`. Poisson contacts use the untruncated law.
  void sample_children(TypeId id, CounterRng& rng, std::vector<TypeId>& out) const;

 private:
  ModelSpec spec_;
  std::vector<NodeType> types_;
  std::vector<TypeId> general_lookup_;  // C*c' + c -> id
};

/// Frontier multiset as a count vector indexed by type id.
struct FrontierState {
  std::vector<std::uint32_t> counts;

  std::uint64_t total() const;
  bool empty() const { return total() == 0; }
};

}  // namespace ctrace
