#include "nullwave/fields.hpp"

#include "nullwave/stencil.hpp"
#include "nullwave/threading.hpp"

#include <cmath>
#include <stdexcept>

namespace nullwave {

namespace {

// out += coeff(x) * in, with coeff one of the coordinates.
void add_coord_product(const GridSpec& spec, int axis, double sign,
                       const GridField& in, GridField& out) {
  const int n = spec.n;
  parallel_for(0, n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i3 = b; i3 < e; ++i3) {
      for (int i2 = 0; i2 < n; ++i2) {
        const std::size_t base = out.index(0, i2, static_cast<int>(i3));
        const double x2 = spec.coord(1, i2);
        const double x3 = spec.coord(2, static_cast<int>(i3));
        for (int i1 = 0; i1 < n; ++i1) {
          const double c = axis == 0   ? spec.coord(0, i1)
                           : axis == 1 ? x2
                                       : x3;
          out.v[base + static_cast<std::size_t>(i1)] +=
              sign * c * in.v[base + static_cast<std::size_t>(i1)];
        }
      }
    }
  });
}

// Angular momentum: (x ^ grad)_lambda applied to one field.
GridField omega_apply(const GridSpec& spec, const GridField& f, int lambda) {
  // Omega_1 = x2 d3 - x3 d2, Omega_2 = x3 d1 - x1 d3, Omega_3 = x1 d2 - x2 d1
  static constexpr int kAxA[3] = {1, 2, 0};
  static constexpr int kAxB[3] = {2, 0, 1};
  const int a = kAxA[lambda - 1];
  const int b = kAxB[lambda - 1];
  GridField out(spec.n);
  GridField d = diff(spec, f, b);
  add_coord_product(spec, a, 1.0, d, out);
  diff_axis(spec, f.v.data(), d.v.data(), a);
  add_coord_product(spec, b, -1.0, d, out);
  return out;
}

// r d_r = x . grad, polynomial coefficients so no singularity at r = 0.
GridField radial_scale_apply(const GridSpec& spec, const GridField& f) {
  GridField out(spec.n);
  GridField d(spec.n);
  for (int l = 0; l < 3; ++l) {
    diff_axis(spec, f.v.data(), d.v.data(), l);
    add_coord_product(spec, l, 1.0, d, out);
  }
  return out;
}

}  // namespace

StateJet build_state_jet(const WaveSystem& system, const GridState& state,
                         int order, bool linearize, PdeWorkspace& ws) {
  if (order < 1 || order > 3) {
    throw std::invalid_argument("build_state_jet: order must be 1..3");
  }
  StateJet jet;
  jet.t = state.t;
  jet.spec = state.spec;
  const int m = state.components();
  jet.comp.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    auto& c = jet.comp[static_cast<std::size_t>(k)];
    c.lvl.push_back(state.u[static_cast<std::size_t>(k)]);
    c.lvl.push_back(state.ut[static_cast<std::size_t>(k)]);
  }
  if (order >= 2) {
    std::vector<GridField> utt(static_cast<std::size_t>(m),
                               GridField(state.spec.n));
    const auto st = acceleration(system, state, linearize, ws, utt);
    if (!st.ok) jet.valid = false;
    for (int k = 0; k < m; ++k) {
      jet.comp[static_cast<std::size_t>(k)].lvl.push_back(
          std::move(utt[static_cast<std::size_t>(k)]));
    }
  }
  if (order >= 3) {
    std::vector<GridField> utt_ref(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      utt_ref[static_cast<std::size_t>(k)] =
          jet.comp[static_cast<std::size_t>(k)].lvl[2];
    }
    std::vector<GridField> uttt(static_cast<std::size_t>(m),
                                GridField(state.spec.n));
    const auto st =
        third_time_derivative(system, state, linearize, utt_ref, ws, uttt);
    if (!st.ok) jet.valid = false;
    for (int k = 0; k < m; ++k) {
      jet.comp[static_cast<std::size_t>(k)].lvl.push_back(
          std::move(uttt[static_cast<std::size_t>(k)]));
    }
  }
  return jet;
}

Jet apply_gamma(const GridSpec& spec, double t, const Jet& in, Gamma g) {
  Jet out;
  const int order = in.order();
  switch (g) {
    case Gamma::Dt: {
      if (order < 1) throw std::invalid_argument("apply_gamma: jet too short");
      for (int j = 1; j <= order; ++j) {
        out.lvl.push_back(in.lvl[static_cast<std::size_t>(j)]);
      }
      return out;
    }
    case Gamma::Dx1:
    case Gamma::Dx2:
    case Gamma::Dx3: {
      const int axis = static_cast<int>(g) - 1;
      for (int j = 0; j <= order; ++j) {
        out.lvl.push_back(diff(spec, in.lvl[static_cast<std::size_t>(j)], axis));
      }
      return out;
    }
    case Gamma::Omega1:
    case Gamma::Omega2:
    case Gamma::Omega3: {
      const int lambda = static_cast<int>(g) - static_cast<int>(Gamma::Omega1) + 1;
      for (int j = 0; j <= order; ++j) {
        out.lvl.push_back(
            omega_apply(spec, in.lvl[static_cast<std::size_t>(j)], lambda));
      }
      return out;
    }
    case Gamma::Scaling: {
      if (order < 1) throw std::invalid_argument("apply_gamma: jet too short");
      // (S w)^(j) = j w^(j) + t w^(j+1) + x . grad w^(j)
      for (int j = 0; j <= order - 1; ++j) {
        GridField f = radial_scale_apply(spec, in.lvl[static_cast<std::size_t>(j)]);
        const double* hi = in.lvl[static_cast<std::size_t>(j + 1)].v.data();
        const double* same = in.lvl[static_cast<std::size_t>(j)].v.data();
        double* po = f.v.data();
        const double jj = j;
        parallel_for(0, static_cast<std::int64_t>(f.size()),
                     [&](std::int64_t lo, std::int64_t hiq) {
                       for (std::int64_t p = lo; p < hiq; ++p) {
                         po[p] += t * hi[p] + jj * same[p];
                       }
                     });
        out.lvl.push_back(std::move(f));
      }
      return out;
    }
  }
  throw std::invalid_argument("apply_gamma: unknown field");
}

Jet apply_gamma_sequence(const GridSpec& spec, double t, const Jet& in,
                         std::span<const Gamma> seq) {
  Jet cur = in;
  for (Gamma g : seq) cur = apply_gamma(spec, t, cur, g);
  return cur;
}

int levels_consumed(std::span<const Gamma> seq) {
  int n = 0;
  for (Gamma g : seq) {
    if (g == Gamma::Dt || g == Gamma::Scaling) ++n;
  }
  return n;
}

GridField partial(const GridState& state, int mu, int k) {
  if (!state.is_finite()) {
    throw std::runtime_error("partial: state contains non-finite values");
  }
  if (mu == 0) return state.ut[static_cast<std::size_t>(k)];
  return diff(state.spec, state.u[static_cast<std::size_t>(k)], mu - 1);
}

GridField apply_field(const GridState& state, Gamma g, int k) {
  if (!state.is_finite()) {
    throw std::runtime_error("apply_field: state contains non-finite values");
  }
  const GridSpec& spec = state.spec;
  const GridField& u = state.u[static_cast<std::size_t>(k)];
  switch (g) {
    case Gamma::Dt:
      return state.ut[static_cast<std::size_t>(k)];
    case Gamma::Dx1:
    case Gamma::Dx2:
    case Gamma::Dx3:
      return diff(spec, u, static_cast<int>(g) - 1);
    case Gamma::Omega1:
    case Gamma::Omega2:
    case Gamma::Omega3:
      return omega_apply(spec, u,
                         static_cast<int>(g) - static_cast<int>(Gamma::Omega1) + 1);
    case Gamma::Scaling: {
      GridField out = radial_scale_apply(spec, u);
      const double* put = state.ut[static_cast<std::size_t>(k)].v.data();
      double* po = out.v.data();
      const double t = state.t;
      parallel_for(0, static_cast<std::int64_t>(out.size()),
                   [&](std::int64_t lo, std::int64_t hi) {
                     for (std::int64_t p = lo; p < hi; ++p) po[p] += t * put[p];
                   });
      return out;
    }
  }
  throw std::invalid_argument("apply_field: unknown field");
}

GridField apply_sequence(const WaveSystem& system, const GridState& state,
                         std::span<const Gamma> seq, int k) {
  if (static_cast<int>(seq.size()) > kMaxSequenceLength) {
    throw std::invalid_argument("apply_sequence: sequence longer than 2");
  }
  if (seq.empty()) return state.u[static_cast<std::size_t>(k)];
  const int need = levels_consumed(seq);
  if (need <= 1) {
    // At most one time level consumed: (u, ut) is enough, no PDE data.
    Jet jet;
    jet.lvl.push_back(state.u[static_cast<std::size_t>(k)]);
    jet.lvl.push_back(state.ut[static_cast<std::size_t>(k)]);
    Jet out = apply_gamma_sequence(state.spec, state.t, jet, seq);
    return out.lvl[0];
  }
  PdeWorkspace ws(state.spec, state.components());
  StateJet sj = build_state_jet(system, state, 2, false, ws);
  Jet out = apply_gamma_sequence(state.spec, state.t,
                                 sj.comp[static_cast<std::size_t>(k)], seq);
  return out.lvl[0];
}

DerivativeSplit decompose(const WaveSystem& system, const GridState& state,
                          int k, double r_min) {
  const GridSpec& spec = state.spec;
  const int n = spec.n;
  const double ck = system.speed(k);

  DerivativeSplit split;
  split.dminus = GridField(n);
  split.mask = GridField(n);
  for (auto& f : split.remainder) f = GridField(n);
  for (auto& f : split.yminus_space) f = GridField(n);

  std::array<GridField, 3> grad;
  for (int l = 0; l < 3; ++l) {
    grad[static_cast<std::size_t>(l)] =
        diff(spec, state.u[static_cast<std::size_t>(k)], l);
  }
  const GridField& ut = state.ut[static_cast<std::size_t>(k)];

  parallel_for(0, n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i3 = b; i3 < e; ++i3) {
      for (int i2 = 0; i2 < n; ++i2) {
        for (int i1 = 0; i1 < n; ++i1) {
          const std::size_t p = split.mask.index(i1, i2, static_cast<int>(i3));
          const std::array<double, 3> x{spec.coord(0, i1), spec.coord(1, i2),
                                        spec.coord(2, static_cast<int>(i3))};
          const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
          if (r < r_min) {
            split.mask.v[p] = 0.0;
            continue;
          }
          split.mask.v[p] = 1.0;
          const double g1 = grad[0].v[p], g2 = grad[1].v[p], g3 = grad[2].v[p];
          const double dr = (x[0] * g1 + x[1] * g2 + x[2] * g3) / r;
          const double dm = 0.5 * (ut.v[p] - ck * dr);
          split.dminus.v[p] = dm;
          const std::array<double, 4> y{1.0, -x[0] / (ck * r), -x[1] / (ck * r),
                                        -x[2] / (ck * r)};
          for (int l = 0; l < 3; ++l) {
            split.yminus_space[static_cast<std::size_t>(l)].v[p] =
                y[static_cast<std::size_t>(l + 1)];
          }
          const std::array<double, 4> du{ut.v[p], g1, g2, g3};
          for (int mu = 0; mu < 4; ++mu) {
            split.remainder[static_cast<std::size_t>(mu)].v[p] =
                du[static_cast<std::size_t>(mu)] -
                y[static_cast<std::size_t>(mu)] * dm;
          }
        }
      }
    }
  });
  return split;
}

}  // namespace nullwave
