#include "nullwave/solver.hpp"

#include "nullwave/reduce.hpp"
#include "nullwave/stencil.hpp"
#include "nullwave/threading.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nullwave {

RkWorkspace::RkWorkspace(const GridSpec& spec, int m)
    : pde(spec, m), stage(spec, m) {
  a1.assign(static_cast<std::size_t>(m), GridField(spec.n));
  a2.assign(static_cast<std::size_t>(m), GridField(spec.n));
  a3.assign(static_cast<std::size_t>(m), GridField(spec.n));
  a4.assign(static_cast<std::size_t>(m), GridField(spec.n));
  ut1.assign(static_cast<std::size_t>(m), GridField(spec.n));
  ut2.assign(static_cast<std::size_t>(m), GridField(spec.n));
  ut3.assign(static_cast<std::size_t>(m), GridField(spec.n));
}

namespace {

void combine(GridField& out, const GridField& base, double h,
             const GridField& slope) {
  const std::size_t sz = out.size();
  double* po = out.v.data();
  const double* pb = base.v.data();
  const double* ps = slope.v.data();
  parallel_for(0, static_cast<std::int64_t>(sz),
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t p = lo; p < hi; ++p) {
                   po[p] = pb[p] + h * ps[p];
                 }
               });
}

}  // namespace

StepStatus step(const WaveSystem& system, GridState& state, double dt,
                bool linearize, RkWorkspace& ws) {
  const int m = state.components();

  // Stage 1 at (u, ut).
  auto st = acceleration(system, state, linearize, ws.pde, ws.a1);
  if (!st.ok) return {false, st.error};
  for (int k = 0; k < m; ++k) {
    ws.ut1[static_cast<std::size_t>(k)] = state.ut[static_cast<std::size_t>(k)];
  }

  // Stage 2 at y + dt/2 k1.
  ws.stage.t = state.t + 0.5 * dt;
  for (int k = 0; k < m; ++k) {
    combine(ws.stage.u[static_cast<std::size_t>(k)],
            state.u[static_cast<std::size_t>(k)], 0.5 * dt,
            ws.ut1[static_cast<std::size_t>(k)]);
    combine(ws.stage.ut[static_cast<std::size_t>(k)],
            state.ut[static_cast<std::size_t>(k)], 0.5 * dt,
            ws.a1[static_cast<std::size_t>(k)]);
  }
  st = acceleration(system, ws.stage, linearize, ws.pde, ws.a2);
  if (!st.ok) return {false, st.error};
  for (int k = 0; k < m; ++k) {
    ws.ut2[static_cast<std::size_t>(k)] = ws.stage.ut[static_cast<std::size_t>(k)];
  }

  // Stage 3 at y + dt/2 k2.
  for (int k = 0; k < m; ++k) {
    combine(ws.stage.u[static_cast<std::size_t>(k)],
            state.u[static_cast<std::size_t>(k)], 0.5 * dt,
            ws.ut2[static_cast<std::size_t>(k)]);
    combine(ws.stage.ut[static_cast<std::size_t>(k)],
            state.ut[static_cast<std::size_t>(k)], 0.5 * dt,
            ws.a2[static_cast<std::size_t>(k)]);
  }
  st = acceleration(system, ws.stage, linearize, ws.pde, ws.a3);
  if (!st.ok) return {false, st.error};
  for (int k = 0; k < m; ++k) {
    ws.ut3[static_cast<std::size_t>(k)] = ws.stage.ut[static_cast<std::size_t>(k)];
  }

  // Stage 4 at y + dt k3.
  ws.stage.t = state.t + dt;
  for (int k = 0; k < m; ++k) {
    combine(ws.stage.u[static_cast<std::size_t>(k)],
            state.u[static_cast<std::size_t>(k)], dt,
            ws.ut3[static_cast<std::size_t>(k)]);
    combine(ws.stage.ut[static_cast<std::size_t>(k)],
            state.ut[static_cast<std::size_t>(k)], dt,
            ws.a3[static_cast<std::size_t>(k)]);
  }
  st = acceleration(system, ws.stage, linearize, ws.pde, ws.a4);
  if (!st.ok) return {false, st.error};

  const double w = dt / 6.0;
  for (int k = 0; k < m; ++k) {
    double* pu = state.u[static_cast<std::size_t>(k)].v.data();
    double* pt = state.ut[static_cast<std::size_t>(k)].v.data();
    const double* k1u = ws.ut1[static_cast<std::size_t>(k)].v.data();
    const double* k2u = ws.ut2[static_cast<std::size_t>(k)].v.data();
    const double* k3u = ws.ut3[static_cast<std::size_t>(k)].v.data();
    const double* k4u = ws.stage.ut[static_cast<std::size_t>(k)].v.data();
    const double* k1t = ws.a1[static_cast<std::size_t>(k)].v.data();
    const double* k2t = ws.a2[static_cast<std::size_t>(k)].v.data();
    const double* k3t = ws.a3[static_cast<std::size_t>(k)].v.data();
    const double* k4t = ws.a4[static_cast<std::size_t>(k)].v.data();
    const std::size_t sz = state.u[static_cast<std::size_t>(k)].size();
    parallel_for(0, static_cast<std::int64_t>(sz),
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t p = lo; p < hi; ++p) {
                     pu[p] += w * (k1u[p] + 2.0 * k2u[p] + 2.0 * k3u[p] + k4u[p]);
                     pt[p] += w * (k1t[p] + 2.0 * k2t[p] + 2.0 * k3t[p] + k4t[p]);
                   }
                 });
  }
  state.t += dt;
  if (!state.is_finite()) return {false, "nan"};
  return {};
}

double sup_first_derivatives(const GridState& state) {
  double s = 0.0;
  GridField d(state.spec.n);
  for (int k = 0; k < state.components(); ++k) {
    s = std::max(s, max_abs(state.ut[static_cast<std::size_t>(k)].v));
    for (int l = 0; l < 3; ++l) {
      diff_axis(state.spec, state.u[static_cast<std::size_t>(k)].v.data(),
                d.v.data(), l);
      s = std::max(s, max_abs(d.v));
    }
  }
  return s;
}

double sup_spatial_gradient(const GridState& state) {
  double s = 0.0;
  GridField d(state.spec.n);
  for (int k = 0; k < state.components(); ++k) {
    for (int l = 0; l < 3; ++l) {
      diff_axis(state.spec, state.u[static_cast<std::size_t>(k)].v.data(),
                d.v.data(), l);
      s = std::max(s, max_abs(d.v));
    }
  }
  return s;
}

double exterior_field_max(const GridState& state, double support_radius,
                          double max_speed) {
  const GridSpec& spec = state.spec;
  const double causal = support_radius + max_speed * state.t + 3.0 * spec.dx;
  const double causal2 = causal * causal;
  double worst = 0.0;
  const int n = spec.n;
  for (int i3 = 0; i3 < n; ++i3) {
    for (int i2 = 0; i2 < n; ++i2) {
      for (int i1 = 0; i1 < n; ++i1) {
        const double x1 = spec.coord(0, i1), x2 = spec.coord(1, i2),
                     x3 = spec.coord(2, i3);
        if (x1 * x1 + x2 * x2 + x3 * x3 <= causal2) continue;
        for (int k = 0; k < state.components(); ++k) {
          const std::size_t p =
              state.u[static_cast<std::size_t>(k)].index(i1, i2, i3);
          worst = std::max(
              worst, std::fabs(state.u[static_cast<std::size_t>(k)].v[p]));
          worst = std::max(
              worst, std::fabs(state.ut[static_cast<std::size_t>(k)].v[p]));
        }
      }
    }
  }
  return worst;
}

StepPlan plan_steps(const SolverConfig& cfg, double dx, double max_speed) {
  const double dt_cfl = cfg.cfl * dx / max_speed;
  StepPlan plan;
  plan.nsteps =
      cfg.t_end > 0.0
          ? std::max(1, static_cast<int>(std::ceil(cfg.t_end / dt_cfl - 1e-12)))
          : 0;
  plan.dt = plan.nsteps > 0 ? cfg.t_end / plan.nsteps : 0.0;
  return plan;
}

RunOutcome run(const WaveSystem& system, GridState& state,
               const RunParams& params, const ProbeFn& probe) {
  if (!system.symmetry().symmetric) {
    throw std::invalid_argument(
        "run: tensor fails the symmetry condition at " +
        format_index_tuple(*system.symmetry().witness));
  }
  const SolverConfig& cfg = params.solver;
  RunOutcome out;

  const StepPlan plan = plan_steps(cfg, state.spec.dx, system.max_speed());
  const int nsteps = plan.nsteps;
  out.dt = plan.dt;

  std::vector<bool> probe_at(static_cast<std::size_t>(nsteps) + 1, false);
  probe_at.front() = true;
  probe_at.back() = true;
  for (int s : params.probe_steps) {
    if (s >= 0 && s <= nsteps) probe_at[static_cast<std::size_t>(s)] = true;
  }

  out.initial_sup_du = sup_first_derivatives(state);
  const double blow_threshold =
      cfg.blowup_factor * std::max(out.initial_sup_du, 1e-300);

  RkWorkspace ws(state.spec, state.components());
  if (probe_at[0] && probe) probe(state);

  for (int s = 1; s <= nsteps; ++s) {
    const StepStatus status = step(system, state, out.dt, cfg.linearize, ws);
    out.steps_taken = s;
    out.t_final = state.t;
    if (!status.ok) {
      out.terminal = Terminal::BlowUp;
      out.reason = status.reason == "nan" ? "nan" : "quasilinear_breakdown";
      out.final_sup_du = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    const double sup = sup_first_derivatives(state);
    out.final_sup_du = sup;
    if (sup > blow_threshold) {
      out.terminal = Terminal::BlowUp;
      out.reason = "gradient_growth";
      if (probe) probe(state);  // capture the terminal record
      return out;
    }
    if (probe_at[static_cast<std::size_t>(s)] && probe) probe(state);
  }
  out.t_final = state.t;
  out.terminal = Terminal::Completed;
  if (nsteps == 0) {
    out.final_sup_du = out.initial_sup_du;
  }
  return out;
}

}  // namespace nullwave
