#include "nullwave/reduce.hpp"

namespace nullwave {

namespace {

double pairwise_rec(const double* p, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_rec(p, half) + pairwise_rec(p + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_rec(values.data(), values.size());
}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) {
    const double a = std::fabs(v);
    if (a > m) m = a;
  }
  return m;
}

bool has_non_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return true;
  }
  return false;
}

}  // namespace nullwave
