#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace nullwave {

/// Uniform cube grid, n points per axis with spacing dx. Row-major storage,
/// x1 fastest. The periodic flag turns the cube into a torus of side n*dx
/// (test harness use); otherwise edge stencils are one-sided.
struct GridSpec {
  int n = 0;
  double dx = 0.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  int halo = 2;
  bool periodic = false;

  static GridSpec centered(int n, double dx);
  static GridSpec periodic_box(int n, double length);

  double coord(int axis, int index) const {
    return origin[static_cast<std::size_t>(axis)] + dx * index;
  }
  std::size_t points() const {
    return static_cast<std::size_t>(n) * n * n;
  }
  /// Distance from the spatial origin to the nearest face.
  double inner_radius() const;
  /// Trapezoidal weight along one axis (1 on a torus).
  double line_weight(int index) const {
    if (periodic) return 1.0;
    return (index == 0 || index == n - 1) ? 0.5 : 1.0;
  }

  void validate() const;  // throws std::invalid_argument
};

struct GridField {
  int n = 0;
  std::vector<double> v;

  GridField() = default;
  explicit GridField(int n_) : n(n_), v(static_cast<std::size_t>(n_) * n_ * n_) {}

  std::size_t index(int i1, int i2, int i3) const {
    return (static_cast<std::size_t>(i3) * n + i2) * n + i1;
  }
  double& at(int i1, int i2, int i3) { return v[index(i1, i2, i3)]; }
  double at(int i1, int i2, int i3) const { return v[index(i1, i2, i3)]; }
  std::size_t size() const { return v.size(); }
  void fill(double value) { std::fill(v.begin(), v.end(), value); }
};

/// One time level of the discrete system: u and its stored time derivative.
struct GridState {
  GridSpec spec;
  double t = 0.0;
  std::vector<GridField> u;
  std::vector<GridField> ut;

  GridState() = default;
  GridState(const GridSpec& s, int m);
  int components() const { return static_cast<int>(u.size()); }
  bool is_finite() const;
};

}  // namespace nullwave
