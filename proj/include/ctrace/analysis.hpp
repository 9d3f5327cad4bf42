#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctrace/engine.hpp"
#include "ctrace/model.hpp"

namespace ctrace {

/// True iff every element is the maximum or minimum of its own suffix.
bool is_interleaved(std::span<const std::uint32_t> recencies);

enum class StructureCheck {
  RecencyOrdered,
  ReverseRecencyOrdered,
  Interleaved,
  AllTied,
  SpanMonotoneWithinRecency,
  RecencyMonotoneWithinSpan,
};

std::string_view to_string(StructureCheck check);

struct CheckResult {
  StructureCheck check;
  bool holds = false;
  /// Whether the property is guaranteed for this spec's parameters.
  bool expected = false;
  std::vector<std::string> violations;
};

struct StructureReport {
  std::vector<CheckResult> checks;
  /// Recency-within-span findings for recencies above 2 (never asserted).
  std::vector<std::string> informational;

  const CheckResult* find(StructureCheck check) const;
  /// Every expected check holds.
  bool passed() const;
};

/// Runs the requested checks; throws VariantMismatch if one does not apply.
StructureReport verify_structure(const TypeTable& table, const IndexPolicy& policy,
                                 std::span<const StructureCheck> requested);
/// Runs every check applicable to the table's variant.
StructureReport verify_structure(const TypeTable& table, const IndexPolicy& policy);

/// Smallest beta above which same-span types are ordered by recency
/// (Bernoulli contacts, recencies 0..2).
double beta_bound_bivariate(double c, double p_t, double alpha);

struct SweepRow {
  double alpha = 0.0;
  std::vector<std::uint32_t> ordering;  // recencies, highest priority first
  bool recency_ordered = false;
  bool reverse_recency_ordered = false;
  bool interleaved = false;
  bool all_tied = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<std::size_t> first_break;  // first row not in recency order
  /// (last recency-ordered alpha, first non-recency alpha) when a break exists.
  std::optional<std::pair<double, double>> bracket;
};

SweepResult sweep_alpha(const ModelSpec& univariate_template, std::span<const double> grid,
                        unsigned threads = 1, const EngineOptions& options = {});

/// I_l(x) for the univariate model, given epoch constants (b_l, gamma_l).
double univariate_index_curve(const ModelSpec& spec, double b_l, double gamma_l, double x);
/// f_h(x) for the bivariate model, given epoch constants (b_h, gamma_h).
double bivariate_index_curve(const ModelSpec& spec, std::uint32_t h, double b_h, double gamma_h, double x);

struct CurveCheck {
  double min_second_difference = 0.0;  // scaled by the curve's magnitude
  double max_first_difference = 0.0;
  std::size_t points = 0;
};

/// Samples I_l on `points` evenly spaced x in [0, T] with constants taken from
/// the epoch over the children of recency l under `prefix`.
CurveCheck univariate_curve_check(const TypeTable& table, std::span<const TypeId> prefix, std::uint32_t l,
                                  std::size_t points);
/// Samples f_h on `points` evenly spaced x in [0, T] with constants taken
/// from the epoch over the children of recency h under `prefix`.
CurveCheck bivariate_curve_check(const TypeTable& table, std::span<const TypeId> prefix, std::uint32_t h,
                                 std::size_t points);

/// The two-day w/x/y/z scenario. The tracer has already found w infected, so
/// p_w only matters through conditioning and drops out of every value.
struct ExampleScenario {
  double q = 0.0;
  double p_w = 0.0;
  double p_x = 0.0;
  double p_y = 0.0;
  double p_z = 0.0;
};

struct ExamplePolicyValue {
  std::string name;  // query sequence, e.g. "YXZ"
  double value = 0.0;
};

struct ExampleRealization {
  bool x_infected = false;
  bool y_infected = false;
  bool z_exists = false;
  bool z_infected = false;
  double probability = 0.0;
};

/// All outcomes of the event tree (conditioned on w infected).
std::vector<ExampleRealization> example_realizations(const ExampleScenario& s);
/// Benefit of querying in `sequence` (letters x, y, z; unavailable nodes are
/// skipped). The first query is on day 1 and an individual infected for tau
/// days returns 2^{-tau+1}.
double example_realization_benefit(const ExampleRealization& r, std::string_view sequence);
/// Expected benefit of the three feasible query sequences by enumeration.
std::vector<ExamplePolicyValue> example_enumerate(const ExampleScenario& s);

/// General-model encoding: categories w (recency 2), x (1), y (0), z (0),
/// super-root w, beta = ln 2. Day t of the scenario is step t-1.
ModelSpec example_general_spec(const ExampleScenario& s);
FrontierState example_initial_state(const TypeTable& table);

}  // namespace ctrace
