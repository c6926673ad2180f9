#include "nullwave/diagnostics.hpp"

#include "nullwave/reduce.hpp"
#include "nullwave/stencil.hpp"
#include "nullwave/threading.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nullwave {

namespace {

const std::array<Gamma, 8> kAllGamma{Gamma::Dt,     Gamma::Dx1,    Gamma::Dx2,
                                     Gamma::Dx3,    Gamma::Omega1, Gamma::Omega2,
                                     Gamma::Omega3, Gamma::Scaling};

bool consumes_level(Gamma g) {
  return g == Gamma::Dt || g == Gamma::Scaling;
}

Jet truncated(const Jet& in, int order) {
  Jet out;
  const int o = std::min(order, in.order());
  out.lvl.assign(in.lvl.begin(), in.lvl.begin() + o + 1);
  return out;
}

double guarded_ratio(double lhs, double rhs, std::uint32_t& flags) {
  if (rhs > 0.0) return lhs / rhs;
  flags |= kFlagZeroDenominator;
  if (lhs > 0.0) return std::numeric_limits<double>::infinity();
  return 0.0;
}

int hess_slot6(int l, int n) {
  static constexpr int slot[4][4] = {{-1, -1, -1, -1},
                                     {-1, 0, 1, 2},
                                     {-1, 1, 3, 4},
                                     {-1, 2, 4, 5}};
  return slot[l][n];
}

// acc += coeff * f^2, elementwise.
void accum_square(GridField& acc, const GridField& f, double coeff) {
  double* pa = acc.v.data();
  const double* pf = f.v.data();
  parallel_for(0, static_cast<std::int64_t>(acc.size()),
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t p = lo; p < hi; ++p) {
                   pa[p] += coeff * pf[p] * pf[p];
                 }
               });
}

// acc += coeff * a * b * c, elementwise.
void accum_triple(GridField& acc, double coeff, const GridField& a,
                  const GridField& b, const GridField& c) {
  double* pacc = acc.v.data();
  const double* pa = a.v.data();
  const double* pb = b.v.data();
  const double* pc = c.v.data();
  parallel_for(0, static_cast<std::int64_t>(acc.size()),
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t p = lo; p < hi; ++p) {
                   pacc[p] += coeff * pa[p] * pb[p] * pc[p];
                 }
               });
}

double integrate(const GridField& qweight, const GridField& f, GridField& buf) {
  double* pb = buf.v.data();
  const double* pw = qweight.v.data();
  const double* pf = f.v.data();
  parallel_for(0, static_cast<std::int64_t>(buf.size()),
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t p = lo; p < hi; ++p) pb[p] = pw[p] * pf[p];
               });
  return pairwise_sum(buf.v);
}

}  // namespace

struct DiagnosticsEngine::Scratch {
  const GridState* state = nullptr;
  double t = 0.0;
  int m = 0;
  StateJet j0;
  std::vector<GridField> grad;   // m x 3: D_l u
  std::vector<GridField> dlvl1;  // m x 3: D_l ut
  std::vector<GridField> hess;   // m x 6: D_l D_n u, l <= n
  std::vector<std::vector<Jet>> jets1;  // [gamma][comp]
  GridField buf, acc;

  GridField& grad_at(int k, int l) { return grad[static_cast<std::size_t>(k * 3 + l)]; }
  GridField& dlvl1_at(int k, int l) { return dlvl1[static_cast<std::size_t>(k * 3 + l)]; }
  GridField& hess_at(int k, int slot) { return hess[static_cast<std::size_t>(k * 6 + slot)]; }
};

DiagnosticsEngine::DiagnosticsEngine(const WaveSystem& system,
                                     const GridSpec& spec, bool linearize)
    : system_(system), spec_(spec), linearize_(linearize),
      r_min_(2.0 * spec.dx), radius_(spec.n), qweight_(spec.n) {
  const int n = spec.n;
  const double cell = spec.dx * spec.dx * spec.dx;
  for (int i3 = 0; i3 < n; ++i3) {
    for (int i2 = 0; i2 < n; ++i2) {
      for (int i1 = 0; i1 < n; ++i1) {
        const double x1 = spec.coord(0, i1), x2 = spec.coord(1, i2),
                     x3 = spec.coord(2, i3);
        const std::size_t p = radius_.index(i1, i2, i3);
        radius_.v[p] = std::sqrt(x1 * x1 + x2 * x2 + x3 * x3);
        qweight_.v[p] = cell * spec.line_weight(i1) * spec.line_weight(i2) *
                        spec.line_weight(i3);
      }
    }
  }
}

DiagnosticsEngine::Scratch DiagnosticsEngine::make_scratch(
    const GridState& state, int order, DiagnosticsRecord* rec,
    bool with_base_derivs) {
  const int m = state.components();
  const int n = spec_.n;
  Scratch s;
  s.state = &state;
  s.t = state.t;
  s.m = m;
  s.buf = GridField(n);
  s.acc = GridField(n);
  if (order >= 2) {
    PdeWorkspace pde(spec_, m);
    s.j0 = build_state_jet(system_, state, order, linearize_, pde);
  } else {
    s.j0.t = state.t;
    s.j0.spec = spec_;
    s.j0.comp.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      auto& c = s.j0.comp[static_cast<std::size_t>(k)];
      c.lvl.push_back(state.u[static_cast<std::size_t>(k)]);
      c.lvl.push_back(state.ut[static_cast<std::size_t>(k)]);
    }
  }
  if (!s.j0.valid && rec != nullptr) rec->flags |= kFlagJetSolveFailed;
  if (!with_base_derivs) return s;
  s.grad.assign(static_cast<std::size_t>(m) * 3, GridField(n));
  s.dlvl1.assign(static_cast<std::size_t>(m) * 3, GridField(n));
  s.hess.assign(static_cast<std::size_t>(m) * 6, GridField(n));
  for (int k = 0; k < m; ++k) {
    const Jet& jk = s.j0.comp[static_cast<std::size_t>(k)];
    for (int l = 0; l < 3; ++l) {
      diff_axis(spec_, jk.lvl[0].v.data(), s.grad_at(k, l).v.data(), l);
      diff_axis(spec_, jk.lvl[1].v.data(), s.dlvl1_at(k, l).v.data(), l);
    }
    for (int l = 1; l <= 3; ++l) {
      for (int nn = l; nn <= 3; ++nn) {
        diff_axis(spec_, s.grad_at(k, nn - 1).v.data(),
                  s.hess_at(k, hess_slot6(l, nn)).v.data(), l - 1);
      }
    }
  }
  return s;
}

// E1 of one Gamma^a-applied row of jets; optionally hands back the spatial
// gradients of level 0 for reuse.
double DiagnosticsEngine::e1_of_row(
    Scratch& s, const std::vector<Jet>& row,
    std::vector<std::array<GridField, 3>>* grads_out) {
  s.acc.fill(0.0);
  for (int k = 0; k < s.m; ++k) {
    const double c2 = system_.speed(k) * system_.speed(k);
    const Jet& w = row[static_cast<std::size_t>(k)];
    accum_square(s.acc, w.lvl[1], 1.0);
    for (int l = 0; l < 3; ++l) {
      GridField g = diff(spec_, w.lvl[0], l);
      accum_square(s.acc, g, c2);
      if (grads_out != nullptr) {
        (*grads_out)[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
            std::move(g);
      }
    }
  }
  return integrate(qweight_, s.acc, s.buf);
}

// The 16 ordered second-derivative pairs of one scalar: sum of the weighted,
// masked L2 norms. Mixed pairs appear twice in the ordered sum.
double DiagnosticsEngine::x_terms_one(Scratch& s, int k, const GridField& dtt,
                                      const GridField* dtl,
                                      const GridField* hss) {
  const double ck = system_.speed(k);
  const double t = s.t;
  auto weighted_norm_of = [&](const GridField& f) {
    double* pb = s.buf.v.data();
    const double* pf = f.v.data();
    const double* pr = radius_.v.data();
    const double* pw = qweight_.v.data();
    const double rmin = r_min_;
    parallel_for(0, static_cast<std::int64_t>(s.buf.size()),
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t p = lo; p < hi; ++p) {
                     if (pr[p] < rmin) {
                       pb[p] = 0.0;
                       continue;
                     }
                     const double rho = ck * t - pr[p];
                     const double w2 = 1.0 + rho * rho;
                     pb[p] = pw[p] * w2 * pf[p] * pf[p];
                   }
                 });
    return std::sqrt(std::max(0.0, pairwise_sum(s.buf.v)));
  };
  double sum = weighted_norm_of(dtt);
  for (int l = 0; l < 3; ++l) sum += 2.0 * weighted_norm_of(dtl[l]);
  for (int l = 1; l <= 3; ++l) {
    for (int nn = l; nn <= 3; ++nn) {
      const double mult = (l == nn) ? 1.0 : 2.0;
      sum += mult * weighted_norm_of(hss[hess_slot6(l, nn)]);
    }
  }
  return sum;
}

double DiagnosticsEngine::x_block(Scratch& s, const std::vector<Jet>& row) {
  double sum = 0.0;
  for (int k = 0; k < s.m; ++k) {
    const Jet& w = row[static_cast<std::size_t>(k)];
    std::array<GridField, 3> dtl;
    std::array<GridField, 3> g0;
    std::array<GridField, 6> hss;
    for (int l = 0; l < 3; ++l) {
      dtl[static_cast<std::size_t>(l)] = diff(spec_, w.lvl[1], l);
      g0[static_cast<std::size_t>(l)] = diff(spec_, w.lvl[0], l);
    }
    for (int l = 1; l <= 3; ++l) {
      for (int nn = l; nn <= 3; ++nn) {
        hss[static_cast<std::size_t>(hess_slot6(l, nn))] =
            diff(spec_, g0[static_cast<std::size_t>(nn - 1)], l - 1);
      }
    }
    sum += x_terms_one(s, k, w.lvl[2], dtl.data(), hss.data());
  }
  return sum;
}

// One sequence's contribution to the modified-energy correction:
// sum over entries of C^{ijk}_{abg} eta_gg Int d_a u^i d_b Ga u^j d_g Ga u^k.
double DiagnosticsEngine::etilde_term(
    Scratch& s, const std::vector<Jet>& row,
    const std::vector<std::array<GridField, 3>>& grads) {
  if (system_.entries().empty()) return 0.0;
  static constexpr double kEta[4] = {1.0, -1.0, -1.0, -1.0};
  auto base_slot = [&](int i, int a) -> const GridField& {
    if (a == 0) return s.j0.comp[static_cast<std::size_t>(i)].lvl[1];
    return s.grad_at(i, a - 1);
  };
  auto row_slot = [&](int j, int b) -> const GridField& {
    if (b == 0) return row[static_cast<std::size_t>(j)].lvl[1];
    return grads[static_cast<std::size_t>(j)][static_cast<std::size_t>(b - 1)];
  };
  s.acc.fill(0.0);
  for (const auto& e : system_.entries()) {
    accum_triple(s.acc, e.v * kEta[e.g], base_slot(e.i, e.a),
                 row_slot(e.j, e.b), row_slot(e.k, e.g));
  }
  return integrate(qweight_, s.acc, s.buf);
}

void DiagnosticsEngine::build_jets1(Scratch& s) {
  s.jets1.assign(kAllGamma.size(), {});
  for (std::size_t gi = 0; gi < kAllGamma.size(); ++gi) {
    const Gamma g = kAllGamma[gi];
    auto& row = s.jets1[gi];
    row.reserve(static_cast<std::size_t>(s.m));
    for (int k = 0; k < s.m; ++k) {
      const Jet& base = s.j0.comp[static_cast<std::size_t>(k)];
      const int in_order = std::min(base.order(), consumes_level(g) ? 3 : 2);
      row.push_back(apply_gamma(spec_, s.t, truncated(base, in_order), g));
    }
  }
}

void DiagnosticsEngine::klainerman_from_scratch(Scratch& s,
                                                DiagnosticsRecord& rec) {
  const std::size_t sz = radius_.size();
  const double t = s.t;

  double num4_a0 = 0.0;  // <r>^(1/2) |u|, order 0
  double num4_a1 = 0.0;  // over single Gamma applications
  double num5 = 0.0, num6 = 0.0, num7 = 0.0;

  for (int k = 0; k < s.m; ++k) {
    const double ck = system_.speed(k);
    const GridField& u = s.j0.comp[static_cast<std::size_t>(k)].lvl[0];
    const GridField& utf = s.j0.comp[static_cast<std::size_t>(k)].lvl[1];
    const GridField& utt = s.j0.comp[static_cast<std::size_t>(k)].lvl[2];
    for (std::size_t p = 0; p < sz; ++p) {
      const double r = radius_.v[p];
      if (r < r_min_) continue;
      const double rw = std::sqrt(1.0 + r * r);        // <r>
      const double rho = ck * t - r;
      const double cw = std::sqrt(1.0 + rho * rho);    // <c_k t - r>

      num4_a0 = std::max(num4_a0, std::sqrt(rw) * std::fabs(u.v[p]));

      double du2 = utf.v[p] * utf.v[p];
      for (int l = 0; l < 3; ++l) {
        const double g = s.grad_at(k, l).v[p];
        du2 += g * g;
      }
      const double du = std::sqrt(du2);
      num5 = std::max(num5, rw * du);
      num6 = std::max(num6, rw * std::sqrt(cw) * du);

      double d2 = utt.v[p] * utt.v[p];
      for (int l = 0; l < 3; ++l) {
        const double v = s.dlvl1_at(k, l).v[p];
        d2 += 2.0 * v * v;
      }
      for (int l = 1; l <= 3; ++l) {
        for (int nn = l; nn <= 3; ++nn) {
          const double v = s.hess_at(k, hess_slot6(l, nn)).v[p];
          d2 += (l == nn ? 1.0 : 2.0) * v * v;
        }
      }
      num7 = std::max(num7, rw * cw * std::sqrt(d2));
    }
    for (const auto& row : s.jets1) {
      const GridField& w = row[static_cast<std::size_t>(k)].lvl[0];
      for (std::size_t p = 0; p < sz; ++p) {
        const double r = radius_.v[p];
        if (r < r_min_) continue;
        num4_a1 = std::max(num4_a1,
                           std::sqrt(std::sqrt(1.0 + r * r)) * std::fabs(w.v[p]));
      }
    }
  }
  const double e2h = std::sqrt(rec.E2);
  const double e3h = std::sqrt(rec.E3);
  rec.kl4 = std::max(guarded_ratio(num4_a0, e2h, rec.flags),
                     guarded_ratio(num4_a1, e3h, rec.flags));
  rec.kl5 = guarded_ratio(num5, e3h, rec.flags);
  rec.kl6 = guarded_ratio(num6, e3h + rec.X3, rec.flags);
  rec.kl7 = guarded_ratio(num7, rec.X3, rec.flags);
}

// Pointwise null-form monitors over the exterior region r >= max(c0 t, r_min).
void DiagnosticsEngine::nullform_from_scratch(
    Scratch& s, const std::vector<GridField>& gamma_sq,
    const std::vector<GridField>& dgamma_sq, bool bilinear,
    DiagnosticsRecord& rec) {
  const std::size_t sz = radius_.size();
  const double t = s.t;
  const double c0 = system_.speeds().c0();
  const double rcut = std::max(r_min_, c0 * t);

  double best_bi = 0.0, best_tri = 0.0;
  bool empty_region = true;

  for (int k = 0; k < s.m; ++k) {
    const auto& block = system_.diagonal_blocks()[static_cast<std::size_t>(k)];
    if (block.empty()) continue;
    const double ck = system_.speed(k);
    const GridField& utf = s.j0.comp[static_cast<std::size_t>(k)].lvl[1];
    const GridField& utt = s.j0.comp[static_cast<std::size_t>(k)].lvl[2];
    for (std::size_t p = 0; p < sz; ++p) {
      const double r = radius_.v[p];
      if (r < rcut) continue;
      empty_region = false;
      const double rho = ck * t - r;
      const double cw = std::sqrt(1.0 + rho * rho);
      const double xw = std::sqrt(1.0 + t * t + r * r);  // <X>

      double du[4];
      du[0] = utf.v[p];
      for (int l = 0; l < 3; ++l) du[l + 1] = s.grad_at(k, l).v[p];
      const double du_abs =
          std::sqrt(du[0] * du[0] + du[1] * du[1] + du[2] * du[2] + du[3] * du[3]);
      const double gamma_abs =
          std::sqrt(std::max(0.0, gamma_sq[static_cast<std::size_t>(k)].v[p]));

      // Trilinear: the self-interaction cubic at the gradient itself.
      double tri_lhs = 0.0;
      for (const auto& e : block) {
        tri_lhs += e.v * du[e.a] * du[e.b] * du[e.g];
      }
      const double tri_rhs =
          (3.0 * gamma_abs * du_abs * du_abs + cw * du_abs * du_abs * du_abs) /
          xw;
      if (tri_rhs > 0.0) {
        best_tri = std::max(best_tri, std::fabs(tri_lhs) / tri_rhs);
      } else if (std::fabs(tri_lhs) > 0.0) {
        best_tri = std::numeric_limits<double>::infinity();
        rec.flags |= kFlagZeroDenominator;
      }

      if (!bilinear) continue;

      double d2[4][4];
      d2[0][0] = utt.v[p];
      for (int l = 1; l <= 3; ++l) {
        const double v = s.dlvl1_at(k, l - 1).v[p];
        d2[0][l] = v;
        d2[l][0] = v;
        for (int nn = l; nn <= 3; ++nn) {
          const double h = s.hess_at(k, hess_slot6(l, nn)).v[p];
          d2[l][nn] = h;
          d2[nn][l] = h;
        }
      }
      double d2_sq = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) d2_sq += d2[a][b] * d2[a][b];
      const double d2_abs = std::sqrt(d2_sq);
      const double dgamma_abs =
          std::sqrt(std::max(0.0, dgamma_sq[static_cast<std::size_t>(k)].v[p]));

      double bi_lhs = 0.0;
      for (const auto& e : block) {
        bi_lhs += e.v * du[e.a] * d2[e.b][e.g];
      }
      const double bi_rhs =
          (gamma_abs * d2_abs + du_abs * dgamma_abs + cw * du_abs * d2_abs) / xw;
      if (bi_rhs > 0.0) {
        best_bi = std::max(best_bi, std::fabs(bi_lhs) / bi_rhs);
      } else if (std::fabs(bi_lhs) > 0.0) {
        best_bi = std::numeric_limits<double>::infinity();
        rec.flags |= kFlagZeroDenominator;
      }
    }
  }
  if (empty_region) rec.flags |= kFlagZeroDenominator;
  rec.nullform = best_bi;
  rec.trilinear = best_tri;
}

DiagnosticsRecord DiagnosticsEngine::compute(const GridState& state,
                                             bool light) {
  return compute_impl(state, light);
}

DiagnosticsRecord DiagnosticsEngine::compute_impl(const GridState& state,
                                                  bool light) {
  DiagnosticsRecord rec;
  rec.t = state.t;
  if (light) rec.flags |= kFlagLightMode;
  if (!state.is_finite()) {
    rec.flags |= kFlagInvalidState;
    return rec;
  }

  Scratch s = make_scratch(state, light ? 2 : 3, &rec);
  const int m = s.m;
  const int n = spec_.n;

  for (int k = 0; k < m; ++k) {
    rec.sup_du = std::max(
        rec.sup_du, max_abs(s.j0.comp[static_cast<std::size_t>(k)].lvl[1].v));
    for (int l = 0; l < 3; ++l) {
      const double g = max_abs(s.grad_at(k, l).v);
      rec.sup_du = std::max(rec.sup_du, g);
      rec.sup_grad = std::max(rec.sup_grad, g);
    }
  }

  rec.E1 = e1_of_row(s, s.j0.comp, nullptr);

  build_jets1(s);

  // Nullform accumulators: |Gamma u|^2 (all 8 fields) and |d Gamma u|^2.
  std::vector<GridField> gamma_sq(static_cast<std::size_t>(m), GridField(n));
  std::vector<GridField> dgamma_sq(static_cast<std::size_t>(m), GridField(n));
  for (int k = 0; k < m; ++k) {
    accum_square(gamma_sq[static_cast<std::size_t>(k)],
                 s.j0.comp[static_cast<std::size_t>(k)].lvl[1], 1.0);
    for (int l = 0; l < 3; ++l) {
      accum_square(gamma_sq[static_cast<std::size_t>(k)], s.grad_at(k, l), 1.0);
    }
  }

  double e2_sum = 0.0;
  double etilde2_corr = 0.0;
  for (std::size_t gi = 0; gi < kAllGamma.size(); ++gi) {
    const Gamma g = kAllGamma[gi];
    const auto& row = s.jets1[gi];
    std::vector<std::array<GridField, 3>> grads(static_cast<std::size_t>(m));
    e2_sum += e1_of_row(s, row, &grads);

    const bool rotation_or_scaling = g == Gamma::Omega1 || g == Gamma::Omega2 ||
                                     g == Gamma::Omega3 || g == Gamma::Scaling;
    for (int k = 0; k < m; ++k) {
      const Jet& w = row[static_cast<std::size_t>(k)];
      if (rotation_or_scaling) {
        accum_square(gamma_sq[static_cast<std::size_t>(k)], w.lvl[0], 1.0);
      }
      accum_square(dgamma_sq[static_cast<std::size_t>(k)], w.lvl[1], 1.0);
      for (int l = 0; l < 3; ++l) {
        accum_square(
            dgamma_sq[static_cast<std::size_t>(k)],
            grads[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)],
            1.0);
      }
    }
    if (!light) {
      rec.X3 += x_block(s, row);
      etilde2_corr += etilde_term(s, row, grads);
    }
  }
  rec.E2 = rec.E1 + e2_sum;

  if (light) {
    nullform_from_scratch(s, gamma_sq, dgamma_sq, /*bilinear=*/true, rec);
    return rec;
  }

  const double x_base = x_block(s, s.j0.comp);
  rec.X2 = x_base;
  rec.X3 += x_base;

  double e3_sum = 0.0;
  double etilde3_corr = 0.0;
  for (std::size_t g1 = 0; g1 < kAllGamma.size(); ++g1) {
    for (std::size_t g2 = 0; g2 < kAllGamma.size(); ++g2) {
      const Gamma g = kAllGamma[g2];
      std::vector<Jet> row2;
      row2.reserve(static_cast<std::size_t>(m));
      for (int k = 0; k < m; ++k) {
        const Jet& j1 = s.jets1[g1][static_cast<std::size_t>(k)];
        const int in_order = std::min(j1.order(), consumes_level(g) ? 2 : 1);
        row2.push_back(apply_gamma(spec_, s.t, truncated(j1, in_order), g));
      }
      std::vector<std::array<GridField, 3>> grads(static_cast<std::size_t>(m));
      e3_sum += e1_of_row(s, row2, &grads);
      etilde3_corr += etilde_term(s, row2, grads);
    }
  }
  rec.E3 = rec.E2 + e3_sum;
  rec.Etilde2 = rec.E2 - 0.5 * etilde2_corr;
  rec.Etilde3 = rec.E3 - 0.5 * etilde3_corr;

  rec.decay2 = guarded_ratio(rec.X2, std::sqrt(rec.E2), rec.flags);
  rec.decay3 = guarded_ratio(rec.X3, std::sqrt(rec.E3), rec.flags);

  klainerman_from_scratch(s, rec);
  nullform_from_scratch(s, gamma_sq, dgamma_sq, /*bilinear=*/true, rec);
  return rec;
}

// ---------------------------------------------------------------------------
// Standalone operations

double DiagnosticsEngine::energy(const GridState& state, int kappa) {
  if (kappa < 1 || kappa > 3) {
    throw std::invalid_argument("energy: order must be 1..3");
  }
  if (!state.is_finite()) throw std::runtime_error("energy: invalid state");
  Scratch s = make_scratch(state, kappa, nullptr, false);
  double e = e1_of_row(s, s.j0.comp, nullptr);
  if (kappa == 1) return e;
  build_jets1(s);
  for (const auto& row : s.jets1) e += e1_of_row(s, row, nullptr);
  if (kappa == 2) return e;
  for (std::size_t g1 = 0; g1 < kAllGamma.size(); ++g1) {
    for (std::size_t g2 = 0; g2 < kAllGamma.size(); ++g2) {
      const Gamma g = kAllGamma[g2];
      std::vector<Jet> row2;
      for (int k = 0; k < s.m; ++k) {
        const Jet& j1 = s.jets1[g1][static_cast<std::size_t>(k)];
        const int in_order = std::min(j1.order(), consumes_level(g) ? 2 : 1);
        row2.push_back(apply_gamma(spec_, s.t, truncated(j1, in_order), g));
      }
      e += e1_of_row(s, row2, nullptr);
    }
  }
  return e;
}

double DiagnosticsEngine::weighted_norm(const GridState& state, int kappa) {
  if (kappa < 2 || kappa > 3) {
    throw std::invalid_argument("weighted_norm: order must be 2..3");
  }
  if (!state.is_finite()) {
    throw std::runtime_error("weighted_norm: invalid state");
  }
  Scratch s = make_scratch(state, kappa, nullptr, false);
  double x = x_block(s, s.j0.comp);
  if (kappa == 2) return x;
  build_jets1(s);
  for (const auto& row : s.jets1) x += x_block(s, row);
  return x;
}

double DiagnosticsEngine::modified_energy(const GridState& state, int nu) {
  if (nu < 2 || nu > 3) {
    throw std::invalid_argument("modified_energy: order must be 2..3");
  }
  const double e = energy(state, nu);
  Scratch s = make_scratch(state, nu, nullptr);
  build_jets1(s);
  double corr = 0.0;
  if (nu == 2) {
    for (const auto& row : s.jets1) {
      std::vector<std::array<GridField, 3>> grads(static_cast<std::size_t>(s.m));
      for (int k = 0; k < s.m; ++k) {
        for (int l = 0; l < 3; ++l) {
          grads[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
              diff(spec_, row[static_cast<std::size_t>(k)].lvl[0], l);
        }
      }
      corr += etilde_term(s, row, grads);
    }
  } else {
    for (std::size_t g1 = 0; g1 < kAllGamma.size(); ++g1) {
      for (std::size_t g2 = 0; g2 < kAllGamma.size(); ++g2) {
        const Gamma g = kAllGamma[g2];
        std::vector<Jet> row2;
        for (int k = 0; k < s.m; ++k) {
          const Jet& j1 = s.jets1[g1][static_cast<std::size_t>(k)];
          const int in_order = std::min(j1.order(), consumes_level(g) ? 2 : 1);
          row2.push_back(apply_gamma(spec_, s.t, truncated(j1, in_order), g));
        }
        std::vector<std::array<GridField, 3>> grads(
            static_cast<std::size_t>(s.m));
        for (int k = 0; k < s.m; ++k) {
          for (int l = 0; l < 3; ++l) {
            grads[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
                diff(spec_, row2[static_cast<std::size_t>(k)].lvl[0], l);
          }
        }
        corr += etilde_term(s, row2, grads);
      }
    }
  }
  return e - 0.5 * corr;
}

std::array<double, 4> DiagnosticsEngine::klainerman_monitors(
    const GridState& state) {
  const DiagnosticsRecord rec = compute(state, false);
  return {rec.kl4, rec.kl5, rec.kl6, rec.kl7};
}

std::array<double, 2> DiagnosticsEngine::decay_monitor(const GridState& state) {
  const DiagnosticsRecord rec = compute(state, false);
  return {rec.decay2, rec.decay3};
}

double DiagnosticsEngine::nullform_ratio(const GridState& state) {
  return compute(state, false).nullform;
}

double DiagnosticsEngine::trilinear_nullform_ratio(const GridState& state) {
  return compute(state, false).trilinear;
}

double DiagnosticsEngine::remainder_bound_ratio(const GridState& state, int k) {
  DerivativeSplit split = decompose(system_, state, k, r_min_);
  Scratch s = make_scratch(state, 2, nullptr);
  build_jets1(s);
  GridField gamma_sq(spec_.n);
  accum_square(gamma_sq, s.j0.comp[static_cast<std::size_t>(k)].lvl[1], 1.0);
  for (int l = 0; l < 3; ++l) accum_square(gamma_sq, s.grad_at(k, l), 1.0);
  for (std::size_t gi = 0; gi < kAllGamma.size(); ++gi) {
    const Gamma g = kAllGamma[gi];
    if (g == Gamma::Dt || g == Gamma::Dx1 || g == Gamma::Dx2 || g == Gamma::Dx3)
      continue;
    accum_square(gamma_sq, s.jets1[gi][static_cast<std::size_t>(k)].lvl[0], 1.0);
  }
  const double ck = system_.speed(k);
  double best = 0.0;
  for (std::size_t p = 0; p < radius_.size(); ++p) {
    if (split.mask.v[p] == 0.0) continue;
    const double r = radius_.v[p];
    const double xw = std::sqrt(1.0 + s.t * s.t + r * r);
    const double cw = std::sqrt(1.0 + (ck * s.t - r) * (ck * s.t - r));
    double ru2 = 0.0;
    for (const auto& f : split.remainder) ru2 += f.v[p] * f.v[p];
    double du2 = s.j0.comp[static_cast<std::size_t>(k)].lvl[1].v[p] *
                 s.j0.comp[static_cast<std::size_t>(k)].lvl[1].v[p];
    for (int l = 0; l < 3; ++l) {
      du2 += s.grad_at(k, l).v[p] * s.grad_at(k, l).v[p];
    }
    const double denom =
        (std::sqrt(std::max(0.0, gamma_sq.v[p])) + cw * std::sqrt(du2)) / xw;
    if (denom > 0.0) best = std::max(best, std::sqrt(ru2) / denom);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Fits

GrowthFit fit_growth(const DiagnosticsSeries& series, SeriesQuantity which,
                     double t_min) {
  auto value_of = [&](const DiagnosticsRecord& r) {
    switch (which) {
      case SeriesQuantity::E2: return r.E2;
      case SeriesQuantity::E3: return r.E3;
      case SeriesQuantity::Etilde2: return r.Etilde2;
      case SeriesQuantity::Etilde3: return r.Etilde3;
    }
    return 0.0;
  };
  std::vector<std::pair<double, double>> pts;
  double pos_min = std::numeric_limits<double>::infinity();
  double pos_max = 0.0;
  for (const auto& r : series) {
    if (r.t < t_min) continue;
    const double v = value_of(r);
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    pts.emplace_back(r.t, v);
    if (r.t > 0.0) {
      pos_min = std::min(pos_min, r.t);
      pos_max = std::max(pos_max, r.t);
    }
  }
  if (pts.size() < 10) {
    throw std::invalid_argument("fit_growth: need at least 10 samples");
  }
  if (!(pos_max >= 4.0 * pos_min)) {
    throw std::invalid_argument(
        "fit_growth: times must span at least a factor of 4");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, v] : pts) {
    const double x = 0.5 * std::log1p(t * t);  // log <t>
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double denom = n * sxx - sx * sx;
  GrowthFit fit;
  fit.samples = static_cast<int>(pts.size());
  fit.t_lo = pts.front().first;
  fit.t_hi = pts.back().first;
  fit.exponent = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - fit.exponent * sx) / n;
  double ss = 0.0;
  for (const auto& [t, v] : pts) {
    const double x = 0.5 * std::log1p(t * t);
    const double res = std::log(v) - (intercept + fit.exponent * x);
    ss += res * res;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

TrendFit trend_slope(const std::vector<std::pair<double, double>>& points,
                     double t_min) {
  TrendFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, sabs = 0;
  int n = 0;
  for (const auto& [t, v] : points) {
    if (t < t_min || !std::isfinite(v)) continue;
    sx += t;
    sy += v;
    sxx += t * t;
    sxy += t * v;
    sabs += std::fabs(v);
    ++n;
  }
  fit.samples = n;
  if (n < 3) return fit;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  const double mean = sabs / n;
  fit.relative_slope = mean > 1e-300 ? fit.slope / mean : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Series output

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no inf/nan literals; emit them as strings.
std::string fmt17_json(double v) {
  if (!std::isfinite(v)) return "\"" + fmt17(v) + "\"";
  return fmt17(v);
}

}  // namespace

std::string series_csv_header() {
  return "# nullwave-series schema=1\n"
         "t,E1,E2,E3,X2,X3,Etilde2,Etilde3,decay2,decay3,kl4,kl5,kl6,kl7,"
         "nullform,trilinear,sup_du,sup_grad,flags";
}

void write_series_csv(const std::string& path, const DiagnosticsSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << series_csv_header() << "\n";
  for (const auto& r : series) {
    out << fmt17(r.t) << "," << fmt17(r.E1) << "," << fmt17(r.E2) << ","
        << fmt17(r.E3) << "," << fmt17(r.X2) << "," << fmt17(r.X3) << ","
        << fmt17(r.Etilde2) << "," << fmt17(r.Etilde3) << "," << fmt17(r.decay2)
        << "," << fmt17(r.decay3) << "," << fmt17(r.kl4) << "," << fmt17(r.kl5)
        << "," << fmt17(r.kl6) << "," << fmt17(r.kl7) << ","
        << fmt17(r.nullform) << "," << fmt17(r.trilinear) << ","
        << fmt17(r.sup_du) << "," << fmt17(r.sup_grad) << "," << r.flags
        << "\n";
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

void write_series_ndjson(const std::string& path,
                         const DiagnosticsSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& r : series) {
    out << "{\"t\":" << fmt17_json(r.t) << ",\"E1\":" << fmt17_json(r.E1)
        << ",\"E2\":" << fmt17_json(r.E2) << ",\"E3\":" << fmt17_json(r.E3)
        << ",\"X2\":" << fmt17_json(r.X2) << ",\"X3\":" << fmt17_json(r.X3)
        << ",\"Etilde2\":" << fmt17_json(r.Etilde2)
        << ",\"Etilde3\":" << fmt17_json(r.Etilde3)
        << ",\"decay2\":" << fmt17_json(r.decay2) << ",\"decay3\":" << fmt17_json(r.decay3)
        << ",\"kl4\":" << fmt17_json(r.kl4) << ",\"kl5\":" << fmt17_json(r.kl5)
        << ",\"kl6\":" << fmt17_json(r.kl6) << ",\"kl7\":" << fmt17_json(r.kl7)
        << ",\"nullform\":" << fmt17_json(r.nullform)
        << ",\"trilinear\":" << fmt17_json(r.trilinear)
        << ",\"sup_du\":" << fmt17_json(r.sup_du)
        << ",\"sup_grad\":" << fmt17_json(r.sup_grad) << ",\"flags\":" << r.flags
        << "}\n";
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace nullwave
