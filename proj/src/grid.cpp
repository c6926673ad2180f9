#include "nullwave/grid.hpp"

#include "nullwave/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nullwave {

GridSpec GridSpec::centered(int n, double dx) {
  GridSpec spec;
  spec.n = n;
  spec.dx = dx;
  const double o = -0.5 * (n - 1) * dx;
  spec.origin = {o, o, o};
  spec.validate();
  return spec;
}

GridSpec GridSpec::periodic_box(int n, double length) {
  GridSpec spec;
  spec.n = n;
  spec.dx = length / n;
  spec.origin = {0.0, 0.0, 0.0};
  spec.periodic = true;
  spec.validate();
  return spec;
}

double GridSpec::inner_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = coord(axis, 0);
    const double hi = coord(axis, n - 1);
    r = std::min(r, std::min(std::fabs(lo), std::fabs(hi)));
  }
  return r;
}

void GridSpec::validate() const {
  if (dx <= 0.0) throw std::invalid_argument("grid: dx must be positive");
  if (halo < 2) throw std::invalid_argument("grid: halo must be at least 2");
  if (n < 2 * halo + 3) {
    throw std::invalid_argument("grid: n must be at least 2*halo + 3");
  }
}

GridState::GridState(const GridSpec& s, int m) : spec(s) {
  u.assign(static_cast<std::size_t>(m), GridField(s.n));
  ut.assign(static_cast<std::size_t>(m), GridField(s.n));
}

bool GridState::is_finite() const {
  for (const auto& f : u) {
    if (has_non_finite(f.v)) return false;
  }
  for (const auto& f : ut) {
    if (has_non_finite(f.v)) return false;
  }
  return true;
}

}  // namespace nullwave
