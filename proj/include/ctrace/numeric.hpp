#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace ctrace {

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

struct SampleSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean and standard error of the mean (n-1 variance; 0 for n < 2).
SampleSummary summarize(std::span<const double> values);

/// Splits [0, n) into contiguous chunks handed to at most `threads` workers.
/// Callers write results by index so the output does not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace ctrace
