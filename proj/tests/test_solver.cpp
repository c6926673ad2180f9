#include "nullwave/solver.hpp"

#include "nullwave/diagnostics.hpp"
#include "nullwave/reduce.hpp"
#include "nullwave/stencil.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nullwave;
namespace tu = nullwave::testutil;

namespace {

GridState standing_wave_state(const GridSpec& spec) {
  GridState state(spec, 1);
  tu::fill_state(state, 0.0,
                 [](double, double x1, double, double) { return std::sin(x1); },
                 [](double, double, double, double) { return 0.0; });
  return state;
}

double standing_wave_error(int n, double t_end, double cfl) {
  const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state = standing_wave_state(spec);
  SolverConfig cfg;
  cfg.cfl = cfl;
  cfg.t_end = t_end;
  RunParams params;
  params.solver = cfg;
  const RunOutcome out = run(sys, state, params, nullptr);
  REQUIRE(out.terminal == Terminal::Completed);
  double err = 0.0;
  const double amp = std::cos(t_end);
  for (int i3 = 0; i3 < n; ++i3)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1) {
        const double exact = amp * std::sin(spec.coord(0, i1));
        err = std::max(err, std::fabs(state.u[0].at(i1, i2, i3) - exact));
      }
  return err;
}

}  // namespace

TEST_CASE("acceleration: linear case is the composed-stencil laplacian") {
  const GridSpec spec = GridSpec::centered(20, 0.3);
  const SpeedVector speeds({Rational(3, 2)});
  WaveSystem sys(speeds, CoeffTensor(1));
  GridState state(spec, 1);
  tu::fill_state(state, 0.0,
                 [](double, double x1, double x2, double x3) {
                   return std::sin(0.8 * x1) + x2 * x2 * x3;
                 },
                 [](double, double, double, double) { return 0.0; });
  PdeWorkspace ws(spec, 1);
  std::vector<GridField> acc{GridField(spec.n)};
  const auto st = acceleration(sys, state, false, ws, acc);
  CHECK(st.ok);

  GridField lap(spec.n);
  GridField scratch(spec.n);
  for (int l = 0; l < 3; ++l) {
    const GridField g = diff(spec, state.u[0], l);
    add_scaled_diff(spec, g, l, 1.0, scratch, lap);
  }
  const double c2 = 2.25;
  for (std::size_t p = 0; p < lap.size(); ++p) lap.v[p] *= c2;
  CHECK(tu::interior_max_diff(spec, acc[0], lap, 0) == 0.0);
}

TEST_CASE("acceleration: no time-time slots means explicit update") {
  // C^{111}_{011}: N = d_t u * d1 d1 u, M = 0.
  const GridSpec spec = GridSpec::centered(20, 0.3);
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 1, 1, Rational(1));
  WaveSystem sys(SpeedVector({Rational(1)}), c);
  GridState state(spec, 1);
  tu::fill_state(state, 0.0,
                 [](double, double x1, double x2, double) {
                   return std::sin(x1) * std::cos(0.7 * x2);
                 },
                 [](double, double x1, double, double) { return 0.2 * x1; });
  PdeWorkspace ws(spec, 1);
  std::vector<GridField> acc{GridField(spec.n)};
  const auto st = acceleration(sys, state, false, ws, acc);
  CHECK(st.ok);
  CHECK(st.max_m_norm == 0.0);

  GridField expect(spec.n);
  GridField scratch(spec.n);
  for (int l = 0; l < 3; ++l) {
    const GridField g = diff(spec, state.u[0], l);
    add_scaled_diff(spec, g, l, 1.0, scratch, expect);
  }
  const GridField h11 = diff(spec, diff(spec, state.u[0], 0), 0);
  for (std::size_t p = 0; p < expect.size(); ++p) {
    expect.v[p] += state.ut[0].v[p] * h11.v[p];
  }
  CHECK(tu::interior_max_diff(spec, acc[0], expect, 0) < 1e-13);
}

TEST_CASE("acceleration: 1x1 implicit solve closed form") {
  // C^{111}_{000} = kappa with constant ut = beta: a = c^2 Lap u / (1 -
  // kappa beta) at every point.
  const GridSpec spec = GridSpec::centered(20, 0.3);
  const double kappa = 0.3, beta = 0.5;
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(3, 10));
  WaveSystem sys(SpeedVector({Rational(1)}), c);
  GridState state(spec, 1);
  tu::fill_state(state, 0.0,
                 [](double, double x1, double x2, double x3) {
                   return std::exp(-(x1 * x1 + x2 * x2 + x3 * x3));
                 },
                 [beta](double, double, double, double) { return beta; });
  PdeWorkspace ws(spec, 1);
  std::vector<GridField> acc{GridField(spec.n)};
  const auto st = acceleration(sys, state, false, ws, acc);
  CHECK(st.ok);
  CHECK(st.max_m_norm == doctest::Approx(kappa * beta).epsilon(1e-12));

  GridField lap(spec.n);
  GridField scratch(spec.n);
  for (int l = 0; l < 3; ++l) {
    const GridField g = diff(spec, state.u[0], l);
    add_scaled_diff(spec, g, l, 1.0, scratch, lap);
  }
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = static_cast<std::size_t>(rng() % lap.size());
    const double expect = lap.v[p] / (1.0 - kappa * beta);
    CHECK(acc[0].v[p] == doctest::Approx(expect).epsilon(1e-12));
  }

  // Past the small-data regime the solve refuses.
  state.ut[0].fill(2.0);  // M = 0.6
  const auto bad = acceleration(sys, state, false, ws, acc);
  CHECK_FALSE(bad.ok);
  CHECK(bad.error == "quasilinearity too strong");
}

TEST_CASE("step: zero data stays zero") {
  const GridSpec spec = GridSpec::centered(16, 0.4);
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state(spec, 1);
  RkWorkspace ws(spec, 1);
  for (int s = 0; s < 5; ++s) {
    CHECK(step(sys, state, 0.1, false, ws).ok);
  }
  CHECK(max_abs(state.u[0].v) == 0.0);
  CHECK(max_abs(state.ut[0].v) == 0.0);
  CHECK(state.t == doctest::Approx(0.5));
}

TEST_CASE("standing wave: accuracy and observed convergence order") {
  const double e32 = standing_wave_error(32, 1.0, 0.4);
  const double e64 = standing_wave_error(64, 1.0, 0.4);
  CHECK(e32 < 2e-4);
  const double order = std::log2(e32 / e64);
  CHECK(order >= 3.5);
}

TEST_CASE("linear energy conservation on the torus") {
  const int n = 32;
  const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state = standing_wave_state(spec);
  DiagnosticsEngine engine(sys, spec);
  const double e0 = engine.energy(state, 1);
  CHECK(e0 == doctest::Approx(4.0 * M_PI * M_PI * M_PI).epsilon(2e-4));

  SolverConfig cfg;
  cfg.cfl = 0.4;
  cfg.t_end = 4.0;
  RunParams params;
  params.solver = cfg;
  const RunOutcome out = run(sys, state, params, nullptr);
  CHECK(out.terminal == Terminal::Completed);
  CHECK(out.steps_taken >= 50);
  const double e1 = engine.energy(state, 1);
  CHECK(std::fabs(e1 - e0) / e0 < 1e-6);
}

TEST_CASE("run: t_end zero probes once; zero data completes") {
  const GridSpec spec = GridSpec::centered(16, 1.6);
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state(spec, 1);
  RunParams params;
  params.solver.t_end = 0.0;
  int probes = 0;
  const RunOutcome out =
      run(sys, state, params, [&](const GridState&) { ++probes; });
  CHECK(out.terminal == Terminal::Completed);
  CHECK(probes == 1);
  CHECK(out.t_final == 0.0);
}

TEST_CASE("run refuses non-symmetric tensors") {
  CoeffTensor bad(2);
  bad.set(0, 0, 1, 0, 0, 0, Rational(1));
  WaveSystem sys(SpeedVector({Rational(2), Rational(1)}), bad);
  const GridSpec spec = GridSpec::centered(16, 1.0);
  GridState state(spec, 2);
  RunParams params;
  params.solver.t_end = 0.1;
  CHECK_THROWS_WITH_AS(run(sys, state, params, nullptr),
                       doctest::Contains("symmetry"), std::invalid_argument);
}

TEST_CASE("causality: fields vanish outside the linear cone") {
  const GridSpec spec = GridSpec::centered(48, 0.5);  // half width 11.75
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state(spec, 1);
  InitialData data;
  data.width = {1.0};
  data.fill(sys.speeds(), 0.1, state);
  const double r0 = data.support_radius(1);
  CHECK(r0 < 7.0);

  RunParams params;
  params.solver.t_end = 3.0;
  params.solver.cfl = 0.4;
  std::vector<double> worst;
  const RunOutcome out = run(sys, state, params, [&](const GridState& st) {
    worst.push_back(exterior_field_max(st, r0, sys.max_speed()));
  });
  CHECK(out.terminal == Terminal::Completed);
  for (double w : worst) CHECK(w < 1e-12);
}

TEST_CASE("determinism: identical runs produce identical states") {
  const GridSpec spec = GridSpec::centered(24, 0.8);
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(1, 2));
  for (int l = 1; l <= 3; ++l) c.set(0, 0, 0, 0, l, l, Rational(-1, 2));
  WaveSystem sys(SpeedVector({Rational(1)}), c);

  auto one_run = [&](GridState& state) {
    InitialData data;
    data.width = {1.2};
    data.fill(sys.speeds(), 0.2, state);
    RunParams params;
    params.solver.t_end = 1.5;
    params.solver.cfl = 0.3;
    return run(sys, state, params, nullptr);
  };
  GridState a(spec, 1), b(spec, 1);
  const RunOutcome oa = one_run(a);
  const RunOutcome ob = one_run(b);
  CHECK(oa.terminal == ob.terminal);
  CHECK(a.u[0].v == b.u[0].v);
  CHECK(a.ut[0].v == b.ut[0].v);
}

TEST_CASE("blow-up detection: nan injection reports location and time") {
  const GridSpec spec = GridSpec::centered(16, 1.0);
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state(spec, 1);
  state.u[0].v[100] = std::numeric_limits<double>::infinity();
  RunParams params;
  params.solver.t_end = 0.5;
  const RunOutcome out = run(sys, state, params, nullptr);
  CHECK(out.terminal == Terminal::BlowUp);
  CHECK(out.reason == "nan");
  CHECK(out.t_final > 0.0);
}
