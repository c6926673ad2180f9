#include "nullwave/stencil.hpp"

#include "nullwave/threading.hpp"

#include <array>

namespace nullwave {

namespace {

struct Taps {
  std::array<int, 5> idx;
  std::array<double, 5> w;
};

Taps taps_at(int q, int n, bool periodic, double inv12h) {
  static constexpr std::array<double, 5> kCentered{1.0, -8.0, 0.0, 8.0, -1.0};
  static constexpr std::array<double, 5> kEdge0{-25.0, 48.0, -36.0, 16.0, -3.0};
  static constexpr std::array<double, 5> kEdge1{-3.0, -10.0, 18.0, -6.0, 1.0};

  Taps t;
  if (periodic) {
    for (int s = 0; s < 5; ++s) {
      t.idx[static_cast<std::size_t>(s)] = (q + s - 2 + n) % n;
      t.w[static_cast<std::size_t>(s)] = kCentered[static_cast<std::size_t>(s)] * inv12h;
    }
    return t;
  }
  if (q >= 2 && q <= n - 3) {
    for (int s = 0; s < 5; ++s) {
      t.idx[static_cast<std::size_t>(s)] = q + s - 2;
      t.w[static_cast<std::size_t>(s)] = kCentered[static_cast<std::size_t>(s)] * inv12h;
    }
    return t;
  }
  const bool left = q < 2;
  const std::array<double, 5>& base = (q == 0 || q == n - 1) ? kEdge0 : kEdge1;
  for (int s = 0; s < 5; ++s) {
    if (left) {
      t.idx[static_cast<std::size_t>(s)] = s;
      t.w[static_cast<std::size_t>(s)] = base[static_cast<std::size_t>(s)] * inv12h;
    } else {
      t.idx[static_cast<std::size_t>(s)] = n - 5 + s;
      t.w[static_cast<std::size_t>(s)] = -base[static_cast<std::size_t>(4 - s)] * inv12h;
    }
  }
  return t;
}

void diff_x1(const GridSpec& spec, const double* in, double* out) {
  const int n = spec.n;
  const double inv12h = 1.0 / (12.0 * spec.dx);
  parallel_for(0, static_cast<std::int64_t>(n) * n, [&](std::int64_t rb, std::int64_t re) {
    for (std::int64_t row = rb; row < re; ++row) {
      const double* r = in + row * n;
      double* o = out + row * n;
      for (int q = 0; q < 2; ++q) {
        const Taps t = taps_at(q, n, spec.periodic, inv12h);
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += t.w[static_cast<std::size_t>(k)] * r[t.idx[static_cast<std::size_t>(k)]];
        o[q] = s;
      }
      for (int q = 2; q <= n - 3; ++q) {
        o[q] = ((r[q - 2] - r[q + 2]) + 8.0 * (r[q + 1] - r[q - 1])) * inv12h;
      }
      for (int q = n - 2; q < n; ++q) {
        const Taps t = taps_at(q, n, spec.periodic, inv12h);
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += t.w[static_cast<std::size_t>(k)] * r[t.idx[static_cast<std::size_t>(k)]];
        o[q] = s;
      }
    }
  });
}

// Axis 1 and 2: each output row is a weighted combination of five input rows.
void diff_strided(const GridSpec& spec, const double* in, double* out, int axis) {
  const int n = spec.n;
  const double inv12h = 1.0 / (12.0 * spec.dx);
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  parallel_for(0, n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i3 = b; i3 < e; ++i3) {
      for (int i2 = 0; i2 < n; ++i2) {
        const int q = axis == 1 ? i2 : static_cast<int>(i3);
        const Taps t = taps_at(q, n, spec.periodic, inv12h);
        double* o = out + static_cast<std::size_t>(i3) * plane +
                    static_cast<std::size_t>(i2) * n;
        const double* rows[5];
        for (int k = 0; k < 5; ++k) {
          const int qi = t.idx[static_cast<std::size_t>(k)];
          rows[k] = axis == 1
                        ? in + static_cast<std::size_t>(i3) * plane +
                              static_cast<std::size_t>(qi) * n
                        : in + static_cast<std::size_t>(qi) * plane +
                              static_cast<std::size_t>(i2) * n;
        }
        const auto& w = t.w;
        for (int i1 = 0; i1 < n; ++i1) {
          o[i1] = w[0] * rows[0][i1] + w[1] * rows[1][i1] + w[2] * rows[2][i1] +
                  w[3] * rows[3][i1] + w[4] * rows[4][i1];
        }
      }
    }
  });
}

}  // namespace

void diff_axis(const GridSpec& spec, const double* in, double* out, int axis) {
  if (axis == 0) {
    diff_x1(spec, in, out);
  } else {
    diff_strided(spec, in, out, axis);
  }
}

GridField diff(const GridSpec& spec, const GridField& f, int axis) {
  GridField out(spec.n);
  diff_axis(spec, f.v.data(), out.v.data(), axis);
  return out;
}

void add_scaled_diff(const GridSpec& spec, const GridField& in, int axis,
                     double scale, GridField& scratch, GridField& out) {
  diff_axis(spec, in.v.data(), scratch.v.data(), axis);
  const std::size_t sz = out.size();
  for (std::size_t p = 0; p < sz; ++p) out.v[p] += scale * scratch.v[p];
}

}  // namespace nullwave
