#pragma once

#include <span>
#include <string>

namespace termgraph::extract {

enum class NumericMode { kAverage, kSum };

// Most frequent value. Ties go to the tied value that first appears earliest.
// Throws kAggregationError on an empty list.
std::string finalize_categorical_vote(std::span<const std::string> samples);

// Throws kAggregationError on an empty list or a non-finite sample.
double finalize_numeric(std::span<const double> samples, NumericMode mode);

// Majority of 0/1 samples; an exact tie gives 0. Throws kAggregationError for
// an empty list or a sample outside {0, 1}.
int finalize_boolean(std::span<const int> samples);

}  // namespace termgraph::extract
