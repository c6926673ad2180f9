#include "nullwave/diagnostics.hpp"

#include "nullwave/reduce.hpp"
#include "nullwave/solver.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>

using namespace nullwave;
namespace tu = nullwave::testutil;

namespace {

WaveSystem unit_system() {
  return WaveSystem(SpeedVector({Rational(1)}), CoeffTensor(1));
}

CoeffTensor unit_null_tensor() {
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(1, 2));
  for (int l = 1; l <= 3; ++l) c.set(0, 0, 0, 0, l, l, Rational(-1, 2));
  return c;
}

// 1D Simpson on [0, hi].
double simpson(const std::function<double(double)>& f, double hi, int n) {
  if (n % 2 == 1) ++n;
  const double h = hi / n;
  double s = f(0.0) + f(hi);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("zero state: zero norms and flagged zero-denominator ratios") {
  const GridSpec spec = GridSpec::centered(16, 0.5);
  WaveSystem sys = unit_system();
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  const DiagnosticsRecord rec = engine.compute(state);
  CHECK(rec.E1 == 0.0);
  CHECK(rec.E3 == 0.0);
  CHECK(rec.X3 == 0.0);
  CHECK(rec.Etilde2 == 0.0);
  CHECK(rec.kl4 == 0.0);
  CHECK(rec.decay2 == 0.0);
  CHECK(rec.nullform == 0.0);
  CHECK(rec.trilinear == 0.0);
  CHECK((rec.flags & kFlagZeroDenominator) != 0);
}

TEST_CASE("invalid state is flagged, not computed") {
  const GridSpec spec = GridSpec::centered(16, 0.5);
  WaveSystem sys = unit_system();
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  state.u[0].v[3] = std::numeric_limits<double>::quiet_NaN();
  const DiagnosticsRecord rec = engine.compute(state);
  CHECK((rec.flags & kFlagInvalidState) != 0);
  CHECK(rec.E1 == 0.0);
  CHECK_THROWS_AS(engine.energy(state, 1), std::runtime_error);
}

TEST_CASE("torus mode: E1 equals the closed-form integral") {
  // Pure quadrature (no stencil): u = 0, ut = cos x1.
  {
    const int n = 64;
    const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
    WaveSystem sys = unit_system();
    DiagnosticsEngine engine(sys, spec);
    GridState state(spec, 1);
    tu::fill_state(state, 0.0,
                   [](double, double, double, double) { return 0.0; },
                   [](double, double x1, double, double) {
                     return std::cos(x1);
                   });
    const double e = engine.energy(state, 1);
    CHECK(std::fabs(e - 4.0 * M_PI * M_PI * M_PI) /
              (4.0 * M_PI * M_PI * M_PI) <
          1e-12);
  }
  // With the gradient through the stencil: needs a fine grid for 1e-8.
  {
    const int n = 384;
    const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
    WaveSystem sys = unit_system();
    DiagnosticsEngine engine(sys, spec);
    GridState state(spec, 1);
    tu::fill_state(state, 0.0,
                   [](double, double x1, double, double) {
                     return std::sin(x1);
                   },
                   [](double, double, double, double) { return 0.0; });
    const double e = engine.energy(state, 1);
    CHECK(std::fabs(e - 4.0 * M_PI * M_PI * M_PI) /
              (4.0 * M_PI * M_PI * M_PI) <
          1e-8);
  }
}

TEST_CASE("norm nesting on a generic smooth state") {
  const GridSpec spec = GridSpec::centered(32, 0.45);
  WaveSystem sys = unit_system();
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  tu::fill_state(state, 0.7,
                 [](double, double x1, double x2, double x3) {
                   const double r2 = x1 * x1 + x2 * x2 + x3 * x3;
                   return std::exp(-r2 / 4.0) * (1.0 + 0.3 * x1);
                 },
                 [](double, double x1, double x2, double) {
                   const double r2 = x1 * x1 + x2 * x2;
                   return 0.2 * x1 * std::exp(-r2 / 4.0);
                 });
  const DiagnosticsRecord rec = engine.compute(state);
  CHECK(rec.E1 > 0.0);
  CHECK(rec.E1 <= rec.E2);
  CHECK(rec.E2 <= rec.E3);
  CHECK(rec.X2 <= rec.X3);
  CHECK(rec.E1 == doctest::Approx(engine.energy(state, 1)));
  CHECK(rec.E2 == doctest::Approx(engine.energy(state, 2)));
  CHECK(rec.E3 == doctest::Approx(engine.energy(state, 3)));
  CHECK(rec.X2 == doctest::Approx(engine.weighted_norm(state, 2)));
  CHECK(rec.X3 == doctest::Approx(engine.weighted_norm(state, 3)));
}

TEST_CASE("weighted norm at t = 0: radial quadrature oracle and resolution "
          "consistency") {
  const double w = 2.6;
  auto gaussian = [w](double, double x1, double x2, double x3) {
    return std::exp(-(x1 * x1 + x2 * x2 + x3 * x3) / (w * w));
  };
  auto zero = [](double, double, double, double) { return 0.0; };

  // Independent reference via exact derivatives and 1D radial integrals.
  // Second spatial derivatives of the Gaussian: (-2 delta/w^2 + 4 x_l x_n
  // / w^4) u; the time-time slot is c^2 Lap u; mixed time-space slots vanish.
  const double a = -2.0 / (w * w);
  const double b = 4.0 / (w * w * w * w);
  auto u_of = [w](double r) { return std::exp(-r * r / (w * w)); };
  auto lap_of = [&](double r) { return (b * r * r + 3.0 * a) * u_of(r); };
  auto weight2 = [](double r) { return 1.0 + r * r; };  // <r>^2 at t = 0
  const double hi = 12.0 * w;
  const int quad_n = 40000;
  const double t00 = std::sqrt(simpson(
      [&](double r) {
        return 4.0 * M_PI * r * r * weight2(r) * lap_of(r) * lap_of(r);
      },
      hi, quad_n));
  const double tdiag = std::sqrt(simpson(
      [&](double r) {
        const double u2 = u_of(r) * u_of(r);
        const double moment = a * a + 2.0 * a * b * r * r / 3.0 +
                              b * b * r * r * r * r / 5.0;
        return 4.0 * M_PI * r * r * weight2(r) * moment * u2;
      },
      hi, quad_n));
  const double toff = std::sqrt(simpson(
      [&](double r) {
        const double u2 = u_of(r) * u_of(r);
        return 4.0 * M_PI * r * r * weight2(r) * b * b * r * r * r * r / 15.0 *
               u2;
      },
      hi, quad_n));
  const double x2_reference = t00 + 3.0 * tdiag + 6.0 * toff;

  WaveSystem sys = unit_system();
  double x2_coarse = 0.0, x2_fine = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const int n = pass == 0 ? 144 : 288;
    const GridSpec spec = GridSpec::centered(n, 20.0 / (n - 1));
    DiagnosticsEngine engine(sys, spec);
    GridState state(spec, 1);
    tu::fill_state(state, 0.0, gaussian, zero);
    (pass == 0 ? x2_coarse : x2_fine) = engine.weighted_norm(state, 2);
  }
  // n against 2n: 1e-4 relative.
  CHECK(std::fabs(x2_coarse - x2_fine) / x2_fine < 1e-4);
  // Hand oracle: dominated by the r_min mask and stencil truncation.
  CHECK(std::fabs(x2_fine - x2_reference) / x2_reference < 5e-4);
}

TEST_CASE("every norm agrees across a resolution doubling") {
  WaveSystem sys(SpeedVector({Rational(1)}), unit_null_tensor());
  DiagnosticsRecord recs[2];
  for (int pass = 0; pass < 2; ++pass) {
    const int n = pass == 0 ? 96 : 192;
    const GridSpec spec = GridSpec::centered(n, 19.2 / (n - 1));
    DiagnosticsEngine engine(sys, spec);
    GridState state(spec, 1);
    tu::fill_state(state, 0.8,
                   [](double, double x1, double x2, double x3) {
                     const double r2 = x1 * x1 + x2 * x2 + x3 * x3;
                     return 0.05 * std::exp(-r2 / 7.84) * (1.0 + 0.3 * x1);
                   },
                   [](double, double x1, double x2, double x3) {
                     const double r2 = x1 * x1 + x2 * x2 + x3 * x3;
                     return 0.02 * (x1 - 0.5 * x2 * x3) * std::exp(-r2 / 7.84);
                   });
    recs[pass] = engine.compute(state);
  }
  auto close = [&](double va, double vb) {
    CHECK(std::fabs(va - vb) / std::max(std::fabs(vb), 1e-300) < 1e-3);
  };
  close(recs[0].E1, recs[1].E1);
  close(recs[0].E2, recs[1].E2);
  close(recs[0].E3, recs[1].E3);
  close(recs[0].X2, recs[1].X2);
  close(recs[0].X3, recs[1].X3);
  close(recs[0].Etilde2, recs[1].Etilde2);
  close(recs[0].Etilde3, recs[1].Etilde3);
}

TEST_CASE("modified energy: zero tensor collapses to the energy") {
  const GridSpec spec = GridSpec::centered(24, 0.5);
  WaveSystem sys = unit_system();
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  tu::fill_state(state, 0.3,
                 [](double, double x1, double x2, double x3) {
                   return std::exp(-(x1 * x1 + x2 * x2 + x3 * x3) / 3.0);
                 },
                 [](double, double x1, double, double) { return 0.1 * x1; });
  CHECK(engine.modified_energy(state, 2) ==
        doctest::Approx(engine.energy(state, 2)).epsilon(1e-14));
  CHECK(engine.modified_energy(state, 3) ==
        doctest::Approx(engine.energy(state, 3)).epsilon(1e-14));

  GridState zero_state(spec, 1);
  CHECK(engine.modified_energy(zero_state, 2) == 0.0);
}

TEST_CASE("modified energy equivalence for small gradients") {
  const GridSpec spec = GridSpec::centered(32, 0.45);
  WaveSystem sys(SpeedVector({Rational(1)}), unit_null_tensor());
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  tu::fill_state(state, 0.5,
                 [](double, double x1, double x2, double x3) {
                   const double r2 = x1 * x1 + x2 * x2 + x3 * x3;
                   return 0.02 * std::exp(-r2 / 3.0);
                 },
                 [](double, double x1, double x2, double x3) {
                   const double r2 = x1 * x1 + x2 * x2 + x3 * x3;
                   return 0.01 * x1 * x2 * std::exp(-r2 / 3.0) +
                          0.005 * std::sin(x3);
                 });
  const DiagnosticsRecord rec = engine.compute(state);
  REQUIRE(rec.sup_grad < 0.05);
  CHECK(rec.Etilde2 >= 0.5 * rec.E2);
  CHECK(rec.Etilde2 <= 2.0 * rec.E2);
  CHECK(rec.Etilde3 >= 0.5 * rec.E3);
  CHECK(rec.Etilde3 <= 2.0 * rec.E3);
}

TEST_CASE("ratio monitors are scale invariant") {
  const GridSpec spec = GridSpec::centered(28, 0.5);
  WaveSystem sys(SpeedVector({Rational(1)}), unit_null_tensor());
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  tu::fill_state(state, 0.6,
                 [](double, double x1, double x2, double x3) {
                   const double r2 = x1 * x1 + x2 * x2 + x3 * x3;
                   return 0.01 * std::exp(-r2 / 4.0) * (1.0 + 0.2 * x2);
                 },
                 [](double, double x1, double, double x3) {
                   const double r2 = x1 * x1 + x3 * x3;
                   return 0.004 * x3 * std::exp(-r2 / 4.0);
                 });
  // The linearize flag freezes the jets to the free equation so both scales
  // use the same (linear) acceleration and the ratios are exactly homogeneous.
  DiagnosticsEngine linear_engine(sys, spec, /*linearize=*/true);
  const DiagnosticsRecord r1 = linear_engine.compute(state);
  for (auto& f : state.u) {
    for (double& v : f.v) v *= 2.0;
  }
  for (auto& f : state.ut) {
    for (double& v : f.v) v *= 2.0;
  }
  const DiagnosticsRecord r2 = linear_engine.compute(state);
  CHECK(r2.kl4 == doctest::Approx(r1.kl4).epsilon(1e-10));
  CHECK(r2.decay2 == doctest::Approx(r1.decay2).epsilon(1e-10));
  CHECK(r2.decay3 == doctest::Approx(r1.decay3).epsilon(1e-10));
  CHECK(r2.trilinear == doctest::Approx(r1.trilinear).epsilon(1e-10));
  CHECK(r2.nullform == doctest::Approx(r1.nullform).epsilon(1e-10));
}

TEST_CASE("nullform monitors vanish for a zero tensor") {
  const GridSpec spec = GridSpec::centered(20, 0.5);
  WaveSystem sys = unit_system();
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  tu::fill_state(state, 0.4,
                 [](double, double x1, double, double) {
                   return std::exp(-x1 * x1);
                 },
                 [](double, double, double, double) { return 0.0; });
  const DiagnosticsRecord rec = engine.compute(state);
  CHECK(rec.nullform == 0.0);
  CHECK(rec.trilinear == 0.0);
}

TEST_CASE("light records skip the heavy monitors and are flagged") {
  const GridSpec spec = GridSpec::centered(20, 0.5);
  WaveSystem sys(SpeedVector({Rational(1)}), unit_null_tensor());
  DiagnosticsEngine engine(sys, spec);
  GridState state(spec, 1);
  tu::fill_state(state, 0.2,
                 [](double, double x1, double x2, double x3) {
                   return 0.05 * std::exp(-(x1 * x1 + x2 * x2 + x3 * x3) / 2.0);
                 },
                 [](double, double, double, double) { return 0.0; });
  const DiagnosticsRecord rec = engine.compute(state, true);
  CHECK((rec.flags & kFlagLightMode) != 0);
  CHECK(rec.E1 > 0.0);
  CHECK(rec.E2 > rec.E1);
  CHECK(rec.E3 == 0.0);
  CHECK(rec.X3 == 0.0);
  CHECK(rec.nullform > 0.0);
}

TEST_CASE("growth fits recover synthetic exponents") {
  auto series_from = [](const std::function<double(double)>& e3) {
    DiagnosticsSeries s;
    for (int i = 0; i <= 16; ++i) {
      DiagnosticsRecord r;
      r.t = 0.25 * i + (i > 0 ? 0.75 : 0.0);  // 0, 1.0, 1.25, ..., 4.75
      r.E3 = e3(r.t);
      s.push_back(r);
    }
    return s;
  };

  {
    const auto s = series_from([](double t) {
      return 7.0 * std::pow(1.0 + t * t, 0.05);  // 7 <t>^0.1
    });
    const GrowthFit fit = fit_growth(s, SeriesQuantity::E3);
    CHECK(std::fabs(fit.exponent - 0.1) < 0.005);
    CHECK(fit.residual < 1e-10);
  }
  {
    const auto s = series_from([](double) { return 3.2; });
    const GrowthFit fit = fit_growth(s, SeriesQuantity::E3);
    CHECK(std::fabs(fit.exponent) < 0.005);
  }
  {
    const auto s = series_from([](double t) {
      return std::pow(1.0 + t * t, 0.15) * (1.0 + 0.01 * std::sin(t));
    });
    const GrowthFit fit = fit_growth(s, SeriesQuantity::E3);
    CHECK(std::fabs(fit.exponent - 0.3) < 0.02);
  }
  {
    DiagnosticsSeries tiny;
    for (int i = 0; i < 5; ++i) {
      DiagnosticsRecord r;
      r.t = i;
      r.E3 = 1.0;
      tiny.push_back(r);
    }
    CHECK_THROWS_AS(fit_growth(tiny, SeriesQuantity::E3),
                    std::invalid_argument);
  }
  {
    // Enough samples but a narrow time window.
    DiagnosticsSeries narrow;
    for (int i = 0; i < 12; ++i) {
      DiagnosticsRecord r;
      r.t = 1.0 + 0.1 * i;
      r.E3 = 1.0;
      narrow.push_back(r);
    }
    CHECK_THROWS_AS(fit_growth(narrow, SeriesQuantity::E3),
                    std::invalid_argument);
  }
}

TEST_CASE("trend slope: raw and mean-normalized") {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.5 * i;
    pts.emplace_back(t, 2.0 + 0.4 * t);
  }
  const TrendFit fit = trend_slope(pts);
  CHECK(fit.slope == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fit.relative_slope == doctest::Approx(0.4 / 3.0).epsilon(1e-9));
  CHECK(trend_slope({{0.0, 1.0}}).samples == 1);
}

TEST_CASE("series files: schema header and deterministic formatting") {
  DiagnosticsSeries s;
  DiagnosticsRecord r;
  r.t = 0.5;
  r.E1 = 1.0 / 3.0;
  r.nullform = std::numeric_limits<double>::infinity();
  r.flags = kFlagZeroDenominator;
  s.push_back(r);
  const std::string csv = "/tmp/nullwave_series_test.csv";
  const std::string nd = "/tmp/nullwave_series_test.ndjson";
  write_series_csv(csv, s);
  write_series_ndjson(nd, s);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# nullwave-series schema=1");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "t,");
  std::getline(in, line);
  CHECK(line.find("0.33333333333333331") != std::string::npos);
  CHECK(line.find("inf") != std::string::npos);

  std::ifstream jn(nd);
  std::getline(jn, line);
  CHECK(line.find("\"nullform\":\"inf\"") != std::string::npos);
}
