#include "nullwave/system.hpp"

#include "nullwave/stencil.hpp"
#include "nullwave/threading.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace nullwave {

namespace {

constexpr double kSupportSigmas = 6.2;  // exp(-6.2^2) ~ 2e-17

inline int hess_slot(int l, int n) {
  // (l, n) with 1 <= l <= n <= 3 -> 0..5
  static constexpr int slot[4][4] = {{-1, -1, -1, -1},
                                     {-1, 0, 1, 2},
                                     {-1, 1, 3, 4},
                                     {-1, 2, 4, 5}};
  return slot[l][n];
}

}  // namespace

WaveSystem::WaveSystem(SpeedVector speeds, CoeffTensor tensor)
    : speeds_(std::move(speeds)), tensor_(std::move(tensor)) {
  if (speeds_.size() != tensor_.families()) {
    throw std::invalid_argument("WaveSystem: speed count != families");
  }
  symmetry_ = check_symmetry(tensor_);
  null_ = check_null(tensor_, speeds_);
  diag_blocks_.resize(static_cast<std::size_t>(families()));
  for (const auto& e : tensor_.nonzero_entries()) {
    const Entry ce{e.i, e.j, e.k, e.a, e.b, e.g, to_double(e.value)};
    entries_.push_back(ce);
    if (e.b == 0 && e.g == 0) {
      entries_tt_.push_back(ce);
    } else {
      entries_no_tt_.push_back(ce);
    }
    if (e.i == e.j && e.j == e.k) {
      diag_blocks_[static_cast<std::size_t>(e.k)].push_back(ce);
    }
  }
}

double InitialData::amplitude_of(int k) const {
  return amplitude[amplitude.size() == 1 ? 0 : static_cast<std::size_t>(k)];
}

double InitialData::width_of(int k) const {
  return width[width.size() == 1 ? 0 : static_cast<std::size_t>(k)];
}

std::array<double, 3> InitialData::center_of(int k) const {
  return center[center.size() == 1 ? 0 : static_cast<std::size_t>(k)];
}

double InitialData::support_radius(int m) const {
  double r = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto c = center_of(k);
    const double off = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    double rk = off + kSupportSigmas * width_of(k);
    if (family == Family::MultiBump) rk += spread;
    r = std::max(r, rk);
  }
  return r;
}

void InitialData::fill(const SpeedVector& speeds, double epsilon,
                       GridState& state) const {
  const GridSpec& spec = state.spec;
  const int n = spec.n;
  const int m = state.components();

  std::array<double, 3> dirn = direction;
  {
    const double len = std::sqrt(dirn[0] * dirn[0] + dirn[1] * dirn[1] +
                                 dirn[2] * dirn[2]);
    if (len <= 0.0) throw std::invalid_argument("initial data: zero direction");
    for (auto& d : dirn) d /= len;
  }

  // Multi-bump centers, fixed draw order so runs are reproducible.
  std::vector<std::vector<std::array<double, 3>>> bump_centers(
      static_cast<std::size_t>(m));
  if (family == Family::MultiBump) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int k = 0; k < m; ++k) {
      const auto base = center_of(k);
      for (int bidx = 0; bidx < count; ++bidx) {
        std::array<double, 3> p;
        do {
          p = {unit(rng), unit(rng), unit(rng)};
        } while (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > 1.0);
        bump_centers[static_cast<std::size_t>(k)].push_back(
            {base[0] + spread * p[0], base[1] + spread * p[1],
             base[2] + spread * p[2]});
      }
    }
  }

  for (int k = 0; k < m; ++k) {
    const double a = epsilon * amplitude_of(k);
    const double w = width_of(k);
    const auto c = center_of(k);
    const double ck = speeds.speed_double(k);
    GridField& u = state.u[static_cast<std::size_t>(k)];
    GridField& ut = state.ut[static_cast<std::size_t>(k)];
    parallel_for(0, n, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i3 = b; i3 < e; ++i3) {
        for (int i2 = 0; i2 < n; ++i2) {
          for (int i1 = 0; i1 < n; ++i1) {
            const std::array<double, 3> x{spec.coord(0, i1), spec.coord(1, i2),
                                          spec.coord(2, static_cast<int>(i3))};
            double uval = 0.0, utval = 0.0;
            switch (family) {
              case Family::GaussianBump: {
                const double r2 = (x[0] - c[0]) * (x[0] - c[0]) +
                                  (x[1] - c[1]) * (x[1] - c[1]) +
                                  (x[2] - c[2]) * (x[2] - c[2]);
                uval = a * std::exp(-r2 / (w * w));
                break;
              }
              case Family::PlanePacket: {
                const std::array<double, 3> y{x[0] - c[0], x[1] - c[1],
                                              x[2] - c[2]};
                const double r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
                const double env = std::exp(-r2 / (w * w));
                const double s = dirn[0] * y[0] + dirn[1] * y[1] + dirn[2] * y[2];
                uval = a * env * std::cos(wavenumber * s);
                // Exactly -c_k * (dir . grad u): the packet moves along dir.
                const double denv = -2.0 * s / (w * w);
                utval = -ck * a * env *
                        (denv * std::cos(wavenumber * s) -
                         wavenumber * std::sin(wavenumber * s));
                break;
              }
              case Family::MultiBump: {
                for (const auto& bc : bump_centers[static_cast<std::size_t>(k)]) {
                  const double r2 = (x[0] - bc[0]) * (x[0] - bc[0]) +
                                    (x[1] - bc[1]) * (x[1] - bc[1]) +
                                    (x[2] - bc[2]) * (x[2] - bc[2]);
                  uval += a * std::exp(-r2 / (w * w));
                }
                break;
              }
            }
            const std::size_t p = u.index(i1, i2, static_cast<int>(i3));
            u.v[p] = uval;
            ut.v[p] = utval;
          }
        }
      }
    });
  }
  state.t = 0.0;
}

const char* family_name(InitialData::Family f) {
  switch (f) {
    case InitialData::Family::GaussianBump: return "gaussian_bump";
    case InitialData::Family::PlanePacket: return "plane_packet";
    case InitialData::Family::MultiBump: return "multi_bump";
  }
  return "?";
}

std::optional<InitialData::Family> family_from_name(const std::string& name) {
  if (name == "gaussian_bump") return InitialData::Family::GaussianBump;
  if (name == "plane_packet") return InitialData::Family::PlanePacket;
  if (name == "multi_bump") return InitialData::Family::MultiBump;
  return std::nullopt;
}

PdeWorkspace::PdeWorkspace(const GridSpec& spec, int m_) : m(m_) {
  const int n = spec.n;
  grad.assign(static_cast<std::size_t>(m) * 3, GridField(n));
  dut.assign(static_cast<std::size_t>(m) * 3, GridField(n));
  hess.assign(static_cast<std::size_t>(m) * 6, GridField(n));
  mfield.assign(static_cast<std::size_t>(m) * m, GridField(n));
  nfield.assign(static_cast<std::size_t>(m), GridField(n));
  scratch = GridField(n);
}

GridField& PdeWorkspace::hess_at(int k, int l, int n) {
  return hess[static_cast<std::size_t>(k * 6 + hess_slot(l, n))];
}

namespace {

// out += scale * a .* b
void axpy_product(double scale, const GridField& a, const GridField& b,
                  GridField& out) {
  const std::size_t sz = out.size();
  const double* pa = a.v.data();
  const double* pb = b.v.data();
  double* po = out.v.data();
  parallel_for(0, static_cast<std::int64_t>(sz), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) po[p] += scale * pa[p] * pb[p];
  });
}

void axpy_field(double scale, const GridField& a, GridField& out) {
  const std::size_t sz = out.size();
  const double* pa = a.v.data();
  double* po = out.v.data();
  parallel_for(0, static_cast<std::int64_t>(sz), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) po[p] += scale * pa[p];
  });
}

// Fill gradients and the spatial Hessian of u (and D_l ut) into ws.
void fill_spatial_derivatives(const WaveSystem& system, const GridState& state,
                              bool need_nonlinear, PdeWorkspace& ws) {
  const GridSpec& spec = state.spec;
  const int m = state.components();
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < 3; ++l) {
      diff_axis(spec, state.u[static_cast<std::size_t>(k)].v.data(),
                ws.grad_at(k, l).v.data(), l);
    }
    for (int l = 1; l <= 3; ++l) {
      for (int nn = l; nn <= 3; ++nn) {
        diff_axis(spec, ws.grad_at(k, nn - 1).v.data(),
                  ws.hess_at(k, l, nn).v.data(), l - 1);
      }
    }
    if (need_nonlinear) {
      for (int l = 0; l < 3; ++l) {
        diff_axis(spec, state.ut[static_cast<std::size_t>(k)].v.data(),
                  ws.dut_at(k, l).v.data(), l);
      }
    }
  }
  (void)system;
}

const GridField& grad_slot(const GridState& state, PdeWorkspace& ws, int i,
                           int a) {
  if (a == 0) return state.ut[static_cast<std::size_t>(i)];
  return ws.grad_at(i, a - 1);
}

// Second-derivative slot of u with the (0,0) entry excluded by construction.
const GridField& hess_slot_field(PdeWorkspace& ws, int j, int b, int g) {
  if (b == 0 || g == 0) {
    const int l = b == 0 ? g : b;  // mixed t-x: spatial derivative of ut
    return ws.dut_at(j, l - 1);
  }
  const int lo = std::min(b, g), hi = std::max(b, g);
  return ws.hess_at(j, lo, hi);
}

// Shared tail: assemble M fields and solve (I - M) a = rhs pointwise.
AccelStatus solve_with_matrix(const WaveSystem& system, const GridState& state,
                              PdeWorkspace& ws, std::vector<GridField>& out) {
  const int m = state.components();
  const std::size_t sz = state.u[0].size();

  for (auto& f : ws.mfield) f.fill(0.0);
  for (const auto& e : system.entries_tt()) {
    axpy_field(e.v, grad_slot(state, ws, e.i, e.a),
               ws.mfield[static_cast<std::size_t>(e.k * m + e.j)]);
  }

  AccelStatus status;
  if (system.entries_tt().empty()) {
    for (int k = 0; k < m; ++k) {
      double* po = out[static_cast<std::size_t>(k)].v.data();
      const double* pn = ws.nfield[static_cast<std::size_t>(k)].v.data();
      parallel_for(0, static_cast<std::int64_t>(sz),
                   [&](std::int64_t lo, std::int64_t hi) {
                     for (std::int64_t p = lo; p < hi; ++p) po[p] += pn[p];
                   });
    }
    return status;
  }

  // Pointwise m x m solves. Chunked scan keeps the error report (first
  // offending point) and the max norm deterministic.
  constexpr int kMaxM = 16;
  if (m > kMaxM) throw std::logic_error("acceleration: too many families");
  std::size_t first_bad = sz;
  double max_norm = 0.0;
  for (std::size_t p = 0; p < sz; ++p) {
    double mat[kMaxM][kMaxM];
    double rhs[kMaxM];
    double norm = 0.0;
    for (int k = 0; k < m; ++k) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) {
        const double mv = ws.mfield[static_cast<std::size_t>(k * m + j)].v[p];
        mat[k][j] = (k == j ? 1.0 : 0.0) - mv;
        row += std::fabs(mv);
      }
      norm = std::max(norm, row);
      rhs[k] = out[static_cast<std::size_t>(k)].v[p] +
               ws.nfield[static_cast<std::size_t>(k)].v[p];
    }
    max_norm = std::max(max_norm, norm);
    if (norm >= 0.5) {
      first_bad = p;
      break;
    }
    // Gaussian elimination with partial pivoting.
    bool singular = false;
    for (int col = 0; col < m; ++col) {
      int piv = col;
      for (int r = col + 1; r < m; ++r) {
        if (std::fabs(mat[r][col]) > std::fabs(mat[piv][col])) piv = r;
      }
      if (std::fabs(mat[piv][col]) < 1e-14) {
        singular = true;
        break;
      }
      if (piv != col) {
        for (int c2 = 0; c2 < m; ++c2) std::swap(mat[piv][c2], mat[col][c2]);
        std::swap(rhs[piv], rhs[col]);
      }
      for (int r = col + 1; r < m; ++r) {
        const double f = mat[r][col] / mat[col][col];
        if (f == 0.0) continue;
        for (int c2 = col; c2 < m; ++c2) mat[r][c2] -= f * mat[col][c2];
        rhs[r] -= f * rhs[col];
      }
    }
    if (singular) {
      first_bad = p;
      break;
    }
    for (int k = m - 1; k >= 0; --k) {
      double s = rhs[k];
      for (int j = k + 1; j < m; ++j) s -= mat[k][j] * out[static_cast<std::size_t>(j)].v[p];
      out[static_cast<std::size_t>(k)].v[p] = s / mat[k][k];
    }
  }
  status.max_m_norm = max_norm;
  if (first_bad != sz) {
    status.ok = false;
    status.where = first_bad;
    status.error = "quasilinearity too strong";
  }
  return status;
}

}  // namespace

AccelStatus acceleration(const WaveSystem& system, const GridState& state,
                         bool linearize, PdeWorkspace& ws,
                         std::vector<GridField>& out) {
  const GridSpec& spec = state.spec;
  const int m = state.components();
  const bool nonlinear = !system.linear() && !linearize;

  fill_spatial_derivatives(system, state, nonlinear, ws);

  for (int k = 0; k < m; ++k) {
    const double c2 = system.speed(k) * system.speed(k);
    GridField& o = out[static_cast<std::size_t>(k)];
    const double* h11 = ws.hess_at(k, 1, 1).v.data();
    const double* h22 = ws.hess_at(k, 2, 2).v.data();
    const double* h33 = ws.hess_at(k, 3, 3).v.data();
    double* po = o.v.data();
    parallel_for(0, static_cast<std::int64_t>(o.size()),
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t p = lo; p < hi; ++p) {
                     po[p] = c2 * (h11[p] + h22[p] + h33[p]);
                   }
                 });
  }
  if (!nonlinear) return {};
  (void)spec;

  for (auto& f : ws.nfield) f.fill(0.0);
  for (const auto& e : system.entries_no_tt()) {
    axpy_product(e.v, grad_slot(state, ws, e.i, e.a),
                 hess_slot_field(ws, e.j, e.b, e.g),
                 ws.nfield[static_cast<std::size_t>(e.k)]);
  }
  return solve_with_matrix(system, state, ws, out);
}

AccelStatus third_time_derivative(const WaveSystem& system,
                                  const GridState& state, bool linearize,
                                  const std::vector<GridField>& utt,
                                  PdeWorkspace& ws,
                                  std::vector<GridField>& out) {
  const GridSpec& spec = state.spec;
  const int m = state.components();
  const bool nonlinear = !system.linear() && !linearize;

  fill_spatial_derivatives(system, state, nonlinear, ws);

  // c^2 Lap ut, via the same composed stencil.
  for (int k = 0; k < m; ++k) {
    const double c2 = system.speed(k) * system.speed(k);
    GridField& o = out[static_cast<std::size_t>(k)];
    o.fill(0.0);
    if (!nonlinear) {
      // D_l ut not yet available in the linear path.
      for (int l = 0; l < 3; ++l) {
        diff_axis(spec, state.ut[static_cast<std::size_t>(k)].v.data(),
                  ws.dut_at(k, l).v.data(), l);
      }
    }
    for (int l = 0; l < 3; ++l) {
      add_scaled_diff(spec, ws.dut_at(k, l), l, c2, ws.scratch, o);
    }
  }
  if (!nonlinear) return {};

  for (auto& f : ws.nfield) f.fill(0.0);
  // d/dt hits the gradient slot: grad ut against the full Hessian of u,
  // where the (0,0) Hessian entry is the known utt.
  for (const auto& e : system.entries()) {
    const GridField& at_slot =
        e.a == 0 ? utt[static_cast<std::size_t>(e.i)] : ws.dut_at(e.i, e.a - 1);
    const GridField& h_slot =
        (e.b == 0 && e.g == 0)
            ? utt[static_cast<std::size_t>(e.j)]
            : hess_slot_field(ws, e.j, e.b, e.g);
    axpy_product(e.v, at_slot, h_slot, ws.nfield[static_cast<std::size_t>(e.k)]);
  }
  // d/dt hits the Hessian slot; the (0,0) part is the implicit unknown.
  // Spatial derivatives of utt and second spatial derivatives of ut.
  std::vector<GridField> dutt(static_cast<std::size_t>(m) * 3,
                              GridField(spec.n));
  std::vector<GridField> hess_ut(static_cast<std::size_t>(m) * 6,
                                 GridField(spec.n));
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < 3; ++l) {
      diff_axis(spec, utt[static_cast<std::size_t>(k)].v.data(),
                dutt[static_cast<std::size_t>(k * 3 + l)].v.data(), l);
    }
    for (int l = 1; l <= 3; ++l) {
      for (int nn = l; nn <= 3; ++nn) {
        diff_axis(spec, ws.dut_at(k, nn - 1).v.data(),
                  hess_ut[static_cast<std::size_t>(k * 6 + hess_slot(l, nn))]
                      .v.data(),
                  l - 1);
      }
    }
  }
  for (const auto& e : system.entries_no_tt()) {
    const GridField& h_slot =
        (e.b == 0 || e.g == 0)
            ? dutt[static_cast<std::size_t>(e.j * 3 + (e.b == 0 ? e.g : e.b) - 1)]
            : hess_ut[static_cast<std::size_t>(
                  e.j * 6 + hess_slot(std::min(e.b, e.g), std::max(e.b, e.g)))];
    axpy_product(e.v, grad_slot(state, ws, e.i, e.a), h_slot,
                 ws.nfield[static_cast<std::size_t>(e.k)]);
  }
  return solve_with_matrix(system, state, ws, out);
}

}  // namespace nullwave
