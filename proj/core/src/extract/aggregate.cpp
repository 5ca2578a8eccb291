#include "termgraph/extract/aggregate.hpp"

#include <cmath>
#include <map>

#include "termgraph/error.hpp"

namespace termgraph::extract {

std::string finalize_categorical_vote(std::span<const std::string> samples) {
  if (samples.empty()) throw Error(ErrorCode::kAggregationError, "vote over no samples");
  std::map<std::string_view, std::size_t> counts;
  for (const auto& s : samples) ++counts[s];
  // Scanning in input order makes the first-occurring value win ties.
  const std::string* best = nullptr;
  std::size_t best_count = 0;
  for (const auto& s : samples) {
    auto c = counts[s];
    if (c > best_count) {
      best = &s;
      best_count = c;
    }
  }
  return *best;
}

double finalize_numeric(std::span<const double> samples, NumericMode mode) {
  if (samples.empty()) throw Error(ErrorCode::kAggregationError, "aggregate over no samples");
  double sum = 0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kAggregationError, "non-finite sample");
    sum += v;
  }
  return mode == NumericMode::kSum ? sum : sum / static_cast<double>(samples.size());
}

int finalize_boolean(std::span<const int> samples) {
  if (samples.empty()) throw Error(ErrorCode::kAggregationError, "vote over no samples");
  std::size_t ones = 0;
  for (int v : samples) {
    if (v != 0 && v != 1)
      throw Error(ErrorCode::kAggregationError, "boolean sample " + std::to_string(v) + " is not 0 or 1");
    ones += static_cast<std::size_t>(v);
  }
  return 2 * ones > samples.size() ? 1 : 0;
}

}  // namespace termgraph::extract
