#pragma once

#include "nullwave/grid.hpp"

namespace nullwave {

/// Fourth-order first derivative along an axis (0..2 for x1..x3): centered
/// five-point taps in the interior, one-sided five-point taps in the two
/// cells at each face, wrap-around on a torus. All higher spatial derivatives
/// in this codebase are compositions of this operator, so discrete operator
/// identities (e.g. the Laplacian being the square of the gradient) hold
/// exactly.
void diff_axis(const GridSpec& spec, const double* in, double* out, int axis);

GridField diff(const GridSpec& spec, const GridField& f, int axis);

/// out += scale * d(in)/dx_axis, using a scratch buffer.
void add_scaled_diff(const GridSpec& spec, const GridField& in, int axis,
                     double scale, GridField& scratch, GridField& out);

}  // namespace nullwave
