#include "ctrace/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ctrace/error.hpp"
#include "ctrace/numeric.hpp"

namespace ctrace {

bool is_interleaved(std::span<const std::uint32_t> recencies) {
  for (std::size_t j = 0; j < recencies.size(); ++j) {
    const auto [lo, hi] = std::minmax_element(recencies.begin() + j, recencies.end());
    if (recencies[j] != *lo && recencies[j] != *hi) return false;
  }
  return true;
}

std::string_view to_string(StructureCheck check) {
  switch (check) {
    case StructureCheck::RecencyOrdered: return "recency_ordered";
    case StructureCheck::ReverseRecencyOrdered: return "reverse_recency_ordered";
    case StructureCheck::Interleaved: return "interleaved";
    case StructureCheck::AllTied: return "all_tied";
    case StructureCheck::SpanMonotoneWithinRecency: return "span_monotone_within_recency";
    case StructureCheck::RecencyMonotoneWithinSpan: return "recency_monotone_within_span";
  }
  return "unknown";
}

const CheckResult* StructureReport::find(StructureCheck check) const {
  for (const auto& c : checks)
    if (c.check == check) return &c;
  return nullptr;
}

bool StructureReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.expected || c.holds; });
}

double beta_bound_bivariate(double c, double p_t, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::AlphaZero, "bound diverges as alpha -> 0");
  if (!(c > 0.0 && c <= 1.0) || !(p_t > 0.0 && p_t <= 1.0)) {
    throw Error(ErrorCode::ProbabilityOutOfRange, "c and p_T must lie in (0,1]");
  }
  return std::log(2.0 * (1.0 + c * p_t * std::exp(-alpha)) / (1.0 - std::exp(-alpha)));
}

namespace {

bool univariate_like(Variant v) { return v == Variant::Basic || v == Variant::Univariate; }

bool alpha_equals_beta(const ModelSpec& s) {
  return s.variant == Variant::Univariate &&
         std::abs(s.infection_decay - s.discount_rate) <= 1e-12 * s.discount_rate;
}

std::optional<double> bernoulli_parameter(const ContactDistribution& d) {
  if (d.poisson_rate) return std::nullopt;
  double c = 0.0;
  for (auto [k, p] : d.pmf) {
    if (k > 1) return std::nullopt;
    if (k == 1) c = p;
  }
  return c;
}

bool all_rounds_tied(const IndexPolicy& policy, double tolerance) {
  for (const auto& r : policy.rounds) {
    const double tol = tolerance * std::abs(r.winner_value);
    for (const auto& [t, v] : r.candidates)
      if (std::abs(v - r.winner_value) > tol) return false;
  }
  return true;
}

CheckResult run_check(const TypeTable& table, const IndexPolicy& policy, StructureCheck check,
                      std::vector<std::string>& informational) {
  const ModelSpec& spec = table.spec();
  const auto& seq = policy.ordering.sequence;
  const auto rank = policy.ordering.ranks(table.size());
  const std::uint32_t T = spec.horizon;
  CheckResult out{check, true, false, {}};
  auto need = [&](bool ok) {
    if (!ok) {
      throw Error(ErrorCode::VariantMismatch,
                  std::string(to_string(check)) + " does not apply to the " + std::string(to_string(spec.variant)) +
                      " model");
    }
  };
  switch (check) {
    case StructureCheck::RecencyOrdered:
    case StructureCheck::ReverseRecencyOrdered: {
      need(univariate_like(spec.variant));
      const bool forward = check == StructureCheck::RecencyOrdered;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::uint32_t want = forward ? static_cast<std::uint32_t>(i) : T - static_cast<std::uint32_t>(i);
        if (table.type(seq[i]).recency != want) {
          out.holds = false;
          out.violations.push_back("position " + std::to_string(i) + " holds recency " +
                                   std::to_string(table.type(seq[i]).recency));
        }
      }
      if (forward) {
        out.expected = spec.variant == Variant::Basic || spec.infection_decay == 0.0;
      } else {
        out.expected = spec.variant == Variant::Univariate && spec.infection_decay > spec.discount_rate &&
                       !alpha_equals_beta(spec);
      }
      break;
    }
    case StructureCheck::Interleaved: {
      need(univariate_like(spec.variant));
      std::vector<std::uint32_t> rec;
      for (auto t : seq) rec.push_back(table.type(t).recency);
      for (std::size_t j = 0; j < rec.size(); ++j) {
        const auto [lo, hi] = std::minmax_element(rec.begin() + j, rec.end());
        if (rec[j] != *lo && rec[j] != *hi) {
          out.holds = false;
          out.violations.push_back("recency " + std::to_string(rec[j]) + " at position " + std::to_string(j) +
                                   " is neither max nor min of its suffix");
        }
      }
      out.expected = !alpha_equals_beta(spec);
      break;
    }
    case StructureCheck::AllTied: {
      need(univariate_like(spec.variant));
      out.holds = all_rounds_tied(policy, 1e-9);
      if (!out.holds) out.violations.push_back("some round has a strict winner");
      out.expected = alpha_equals_beta(spec);
      break;
    }
    case StructureCheck::SpanMonotoneWithinRecency: {
      need(spec.variant == Variant::Bivariate);
      for (std::uint32_t h = 0; h <= T; ++h)
        for (std::uint32_t d = 0; d < T; ++d) {
          const TypeId a = table.bivariate_id(h, d), b = table.bivariate_id(h, d + 1);
          if (rank[a] > rank[b]) {
            out.holds = false;
            out.violations.push_back(table.describe(b) + " precedes " + table.describe(a));
          }
        }
      out.expected = true;
      break;
    }
    case StructureCheck::RecencyMonotoneWithinSpan: {
      need(spec.variant == Variant::Bivariate);
      for (std::uint32_t d = 0; d <= T; ++d)
        for (std::uint32_t h = 0; h < T; ++h) {
          const TypeId a = table.bivariate_id(h, d), b = table.bivariate_id(h + 1, d);
          if (rank[a] > rank[b]) {
            const std::string msg = table.describe(b) + " precedes " + table.describe(a);
            if (h + 1 <= 2) {
              out.holds = false;
              out.violations.push_back(msg);
            } else {
              informational.push_back(msg);
            }
          }
        }
      const auto c = bernoulli_parameter(spec.contacts);
      out.expected = c && *c > 0.0 && spec.infection_decay > 0.0 &&
                     spec.discount_rate > beta_bound_bivariate(*c, spec.base_infection, spec.infection_decay);
      break;
    }
  }
  return out;
}

}  // namespace

StructureReport verify_structure(const TypeTable& table, const IndexPolicy& policy,
                                 std::span<const StructureCheck> requested) {
  if (policy.ordering.sequence.size() != table.size()) {
    throw Error(ErrorCode::InvalidParameter, "policy does not cover the type table");
  }
  StructureReport report;
  for (auto c : requested) report.checks.push_back(run_check(table, policy, c, report.informational));
  return report;
}

StructureReport verify_structure(const TypeTable& table, const IndexPolicy& policy) {
  std::vector<StructureCheck> checks;
  switch (table.spec().variant) {
    case Variant::Basic:
    case Variant::Univariate:
      checks = {StructureCheck::RecencyOrdered, StructureCheck::ReverseRecencyOrdered, StructureCheck::Interleaved,
                StructureCheck::AllTied};
      break;
    case Variant::Bivariate:
      checks = {StructureCheck::SpanMonotoneWithinRecency, StructureCheck::RecencyMonotoneWithinSpan};
      break;
    case Variant::General:
      break;
  }
  return verify_structure(table, policy, checks);
}

SweepResult sweep_alpha(const ModelSpec& univariate_template, std::span<const double> grid, unsigned threads,
                        const EngineOptions& options) {
  if (univariate_template.variant != Variant::Univariate) {
    throw Error(ErrorCode::VariantMismatch, "alpha sweep needs a univariate template");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || (i > 0 && grid[i] < grid[i - 1])) {
      throw Error(ErrorCode::InvalidParameter, "alpha grid must be non-negative and ascending");
    }
  }
  SweepResult result;
  result.rows.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ModelSpec spec = univariate_template;
      spec.infection_decay = grid[i];
      const TypeTable table(spec);
      const IndexPolicy policy = weiss_dp(table, options);
      SweepRow& row = result.rows[i];
      row.alpha = grid[i];
      for (auto t : policy.ordering.sequence) row.ordering.push_back(table.type(t).recency);
      const std::uint32_t T = spec.horizon;
      row.recency_ordered = row.reverse_recency_ordered = true;
      for (std::uint32_t k = 0; k <= T; ++k) {
        row.recency_ordered = row.recency_ordered && row.ordering[k] == k;
        row.reverse_recency_ordered = row.reverse_recency_ordered && row.ordering[k] == T - k;
      }
      row.interleaved = is_interleaved(row.ordering);
      row.all_tied = all_rounds_tied(policy, options.tie_tolerance);
    }
  });
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (!result.rows[i].recency_ordered) {
      result.first_break = i;
      if (i > 0) result.bracket = std::make_pair(result.rows[i - 1].alpha, result.rows[i].alpha);
      break;
    }
  }
  return result;
}

double univariate_index_curve(const ModelSpec& spec, double b_l, double gamma_l, double x) {
  const double a = spec.infection_decay, b = spec.discount_rate, T = spec.horizon;
  const double px = spec.base_infection * std::exp(-a * (T - x));
  return px * (std::exp(-b * x) + std::exp(-b) * b_l) / (1.0 - std::exp(-b) + px * std::exp(-b) * (1.0 - gamma_l));
}

double bivariate_index_curve(const ModelSpec& spec, std::uint32_t h, double b_h, double gamma_h, double x) {
  const double a = spec.infection_decay, b = spec.discount_rate;
  const double px = spec.base_infection * std::exp(-a * x);
  return px * (std::exp(-b * h) + std::exp(-b) * b_h) / (1.0 - std::exp(-b) + std::exp(-b) * (1.0 - gamma_h) * px);
}

namespace {

template <class F>
CurveCheck sample_curve(F f, double lo, double hi, std::size_t points) {
  CurveCheck out;
  out.points = points;
  std::vector<double> y(points);
  double scale = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    y[i] = f(x);
    scale = std::max(scale, std::abs(y[i]));
  }
  if (scale == 0.0) scale = 1.0;
  out.min_second_difference = points >= 3 ? INFINITY : 0.0;
  out.max_first_difference = points >= 2 ? -INFINITY : 0.0;
  for (std::size_t i = 0; i + 1 < points; ++i) out.max_first_difference = std::max(out.max_first_difference, (y[i + 1] - y[i]) / scale);
  for (std::size_t i = 1; i + 1 < points; ++i) {
    out.min_second_difference = std::min(out.min_second_difference, (y[i - 1] - 2.0 * y[i] + y[i + 1]) / scale);
  }
  return out;
}

}  // namespace

CurveCheck univariate_curve_check(const TypeTable& table, std::span<const TypeId> prefix, std::uint32_t l,
                                  std::size_t points) {
  const ModelSpec& spec = table.spec();
  if (spec.variant != Variant::Univariate) throw Error(ErrorCode::VariantMismatch, "I_l needs the univariate model");
  const PeriodStats c = PeriodCalculator(table, prefix).children_epoch(table.basic_id(l));
  return sample_curve([&](double x) { return univariate_index_curve(spec, c.expected_benefit, c.premultiplier, x); },
                      0.0, spec.horizon, points);
}

CurveCheck bivariate_curve_check(const TypeTable& table, std::span<const TypeId> prefix, std::uint32_t h,
                                 std::size_t points) {
  const ModelSpec& spec = table.spec();
  if (spec.variant != Variant::Bivariate) throw Error(ErrorCode::VariantMismatch, "f_h needs the bivariate model");
  // the child law of (h, span) does not depend on the span
  const PeriodStats c = PeriodCalculator(table, prefix).children_epoch(table.bivariate_id(h, 0));
  return sample_curve(
      [&](double x) { return bivariate_index_curve(spec, h, c.expected_benefit, c.premultiplier, x); }, 0.0,
      spec.horizon, points);
}

}  // namespace ctrace
