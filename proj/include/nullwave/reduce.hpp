#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace nullwave {

/// Pairwise summation over a fixed binary tree. The tree shape depends only
/// on the length, so sums are bit-reproducible regardless of thread count.
double pairwise_sum(std::span<const double> values);

double max_abs(std::span<const double> values);

/// True if any entry is NaN or infinite.
bool has_non_finite(std::span<const double> values);

}  // namespace nullwave
