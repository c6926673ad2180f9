#pragma once

#include "nullwave/grid.hpp"

#include <string>

namespace nullwave {

/// Grid snapshot dump: <base>.bin holds u^1..u^m then ut^1..ut^m, each n^3
/// doubles, little-endian, row-major with x1 fastest; <base>.txt is a plain
/// text sidecar with n, dx, origin, t, m.
void write_snapshot(const std::string& base, const GridState& state);
GridState read_snapshot(const std::string& base);

}  // namespace nullwave
