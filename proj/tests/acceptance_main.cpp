// Acceptance suite: runs each numbered criterion and prints one PASS/FAIL
// line per criterion. Simulations are cached inside the process so criteria
// sharing a run do not repeat it.
//
// usage: nullwave_acceptance [all | <number>...]

#include "nullwave/config.hpp"
#include "nullwave/diagnostics.hpp"
#include "nullwave/report.hpp"
#include "nullwave/solver.hpp"
#include "nullwave/tensor.hpp"

#include "testutil.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace nullwave;
namespace tu = nullwave::testutil;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string detail;
};

struct Criterion {
  int number;
  std::string title;
  std::function<std::string()> body;  // returns detail; throws Failure
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

[[noreturn]] void fail(const std::string& detail) { throw Failure{detail}; }

void require(bool cond, const std::string& detail) {
  if (!cond) fail(detail);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared experiment cache

const std::string kOutRoot = "acceptance_out";

std::map<std::string, ExperimentResult>& cache() {
  static std::map<std::string, ExperimentResult> c;
  return c;
}

const ExperimentResult& preset_run(const std::string& name) {
  auto it = cache().find(name);
  if (it != cache().end()) return it->second;
  const Preset preset = make_preset(name);
  const std::string dir = kOutRoot + "/" + name;
  fs::remove_all(dir);
  const RunConfig cfg = materialize_preset(preset, dir);
  auto result = run_experiment(cfg, name);
  return cache().emplace(name, std::move(result)).first->second;
}

const ExperimentResult& custom_run(const std::string& key,
                                   const RunConfig& cfg,
                                   const CoeffTensor& tensor,
                                   const SpeedVector& speeds) {
  auto it = cache().find(key);
  if (it != cache().end()) return it->second;
  RunConfig actual = cfg;
  actual.directory = kOutRoot + "/" + key;
  fs::remove_all(actual.directory);
  fs::create_directories(actual.directory);
  actual.tensor_path = actual.directory + "/" + key + ".tensor";
  save_tensor_file(actual.tensor_path, tensor, speeds, key);
  write_config_file(actual.directory + "/" + key + ".ini", actual);
  auto result = run_experiment(actual);
  return cache().emplace(key, std::move(result)).first->second;
}

CoeffTensor norm_one_null_tensor() {
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(1, 2));
  for (int l = 1; l <= 3; ++l) c.set(0, 0, 0, 0, l, l, Rational(-1, 2));
  return c;
}

CoeffTensor norm_one_nonnull_tensor() {
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(1));
  return c;
}

// ---------------------------------------------------------------------------
// 1. Null-condition checker soundness against the sampling oracle.

std::string criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240801);
  int checked = 0, projected = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 2);
    const SpeedVector speeds = tu::random_speeds(rng, m);
    CoeffTensor c = tu::random_tensor(rng, m, 0.15);
    if (trial % 2 == 0) {
      c = project_to_null(c, speeds);
      ++projected;
    }
    const auto verdict = check_null(c, speeds);
    for (int k = 0; k < m; ++k) {
      const double scale = tu::max_abs_coeff_double(c, k);
      const bool sampled =
          tu::max_abs_on_cone(c, k, speeds.speed_double(k), 5000) <
          1e-9 * std::max(scale, 1e-30);
      require(verdict.null_per_family[static_cast<std::size_t>(k)] == sampled,
              "verdict disagrees with the sampling oracle on tensor " +
                  std::to_string(trial) + " family " + std::to_string(k + 1));
      ++checked;
    }
  }
  const double dt = seconds_since(t0);
  require(dt < 10.0, "runtime " + fmt(dt) + "s exceeds 10s");
  return std::to_string(checked) + " family verdicts, " +
         std::to_string(projected) + " projected-null tensors, " + fmt(dt) +
         "s";
}

// ---------------------------------------------------------------------------
// 2. Commutator closure.

std::string criterion_2() {
  std::mt19937_64 rng(424243);
  const std::array<Gamma, 8> all{Gamma::Dt,     Gamma::Dx1,    Gamma::Dx2,
                                 Gamma::Dx3,    Gamma::Omega1, Gamma::Omega2,
                                 Gamma::Omega3, Gamma::Scaling};
  int checks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 2);
    const SpeedVector speeds = tu::random_speeds(rng, m);
    const CoeffTensor c =
        project_to_null(tu::random_tensor(rng, m, 0.15), speeds);
    require(check_null(c, speeds).all_null, "projection failed to be null");

    // Exact identities in rational arithmetic.
    for (Gamma g : {Gamma::Dt, Gamma::Dx1, Gamma::Dx2, Gamma::Dx3}) {
      require(commutator(c, g).is_zero(), "[d, N] must vanish exactly");
    }
    require(commutator(c, Gamma::Scaling) == c.scaled(Rational(-3)),
            "[S, N] must equal -3N exactly");

    // All single and double commutators stay null.
    for (Gamma g1 : all) {
      const CoeffTensor c1 = commutator(c, g1);
      require(check_null(c1, speeds).all_null,
              std::string("single commutator ") + gamma_name(g1) +
                  " broke the null condition");
      ++checks;
      for (Gamma g2 : all) {
        const CoeffTensor c2 = commutator(c1, g2);
        require(check_null(c2, speeds).all_null,
                std::string("double commutator ") + gamma_name(g1) + "," +
                    gamma_name(g2) + " broke the null condition");
        ++checks;
      }
    }
  }
  return std::to_string(checks) + " commutator null checks, 0 failures";
}

// ---------------------------------------------------------------------------
// 3. Solver verification: convergence order and energy conservation.

std::string criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  auto standing_error = [](int n) {
    const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
    WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
    GridState state(spec, 1);
    for (int i3 = 0; i3 < n; ++i3)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i1 = 0; i1 < n; ++i1) {
          state.u[0].at(i1, i2, i3) = std::sin(spec.coord(0, i1));
        }
    SolverConfig cfg;
    cfg.cfl = 0.4;
    cfg.t_end = 1.0;
    RunParams params;
    params.solver = cfg;
    run(sys, state, params, nullptr);
    double err = 0.0;
    const double amp = std::cos(cfg.t_end);
    for (int i3 = 0; i3 < n; ++i3)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i1 = 0; i1 < n; ++i1) {
          err = std::max(err, std::fabs(state.u[0].at(i1, i2, i3) -
                                        amp * std::sin(spec.coord(0, i1))));
        }
    return err;
  };
  const double e32 = standing_error(32);
  const double e64 = standing_error(64);
  const double order = std::log2(e32 / e64);
  require(order >= 3.5, "observed order " + fmt(order) + " < 3.5");

  // E1 conservation at n = 64 over the full window (>100 steps).
  const int n = 64;
  const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
  WaveSystem sys(SpeedVector({Rational(1)}), CoeffTensor(1));
  GridState state(spec, 1);
  for (int i3 = 0; i3 < n; ++i3)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1) {
        state.u[0].at(i1, i2, i3) = std::sin(spec.coord(0, i1));
      }
  DiagnosticsEngine engine(sys, spec);
  const double e0 = engine.energy(state, 1);
  SolverConfig cfg;
  cfg.cfl = 0.4;
  cfg.t_end = 4.0;
  RunParams params;
  params.solver = cfg;
  const RunOutcome out = run(sys, state, params, nullptr);
  require(out.steps_taken >= 100, "window shorter than 100 steps");
  const double drift = std::fabs(engine.energy(state, 1) - e0) / e0;
  require(drift < 1e-6, "E1 drift " + fmt(drift) + " >= 1e-6");

  const double dt = seconds_since(t0);
  require(dt < 120.0, "runtime " + fmt(dt) + "s exceeds 2 min");
  return "order " + fmt(order) + ", E1 drift " + fmt(drift) + " over " +
         std::to_string(out.steps_taken) + " steps, " + fmt(dt) + "s";
}

// ---------------------------------------------------------------------------
// 4. Modified-energy equivalence on every small-amplitude record.

std::string criterion_4() {
  int checked = 0;
  for (const std::string name :
       {"null_global", "multispeed_nonresonant", "linear_baseline"}) {
    const auto& result = preset_run(name);
    for (const auto& r : result.series) {
      if (r.flags & (kFlagInvalidState | kFlagLightMode | kFlagJetSolveFailed))
        continue;
      if (!(r.sup_grad < 0.05) || !(r.E2 > 0.0)) continue;
      ++checked;
      require(0.5 * r.E2 <= r.Etilde2 && r.Etilde2 <= 2.0 * r.E2,
              name + " t=" + fmt(r.t) + ": Etilde2/E2 = " +
                  fmt(r.Etilde2 / r.E2));
      require(0.5 * r.E3 <= r.Etilde3 && r.Etilde3 <= 2.0 * r.E3,
              name + " t=" + fmt(r.t) + ": Etilde3/E3 = " +
                  fmt(r.Etilde3 / r.E3));
    }
  }
  require(checked >= 30, "too few small-amplitude records: " +
                             std::to_string(checked));
  return std::to_string(checked) + " records within bounds, 0 violations";
}

// ---------------------------------------------------------------------------
// 5. Theorem-shape run.

std::string criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& result = preset_run("null_global");
  require(result.outcome.terminal == Terminal::Completed,
          "terminal flag: " + result.outcome.reason);

  const auto& metrics = result.report["metrics"];
  const double ratio = metrics["E2_sqrt_max_over_initial"].get<double>();
  require(ratio <= 2.0, "sqrt(E2) grew by " + fmt(ratio));
  require(metrics["growth_E3"].contains("exponent"),
          "growth fit unavailable");
  const double expo = metrics["growth_E3"]["exponent"].get<double>();
  const double resid = metrics["growth_E3"]["residual"].get<double>();
  require(expo <= 0.1, "growth exponent " + fmt(expo) + " > 0.1");
  const double slope =
      metrics["trend_decay2"]["relative_slope"].get<double>();
  require(slope <= 0.05, "decay ratio trend slope " + fmt(slope) + " > 0.05");
  const double dt =
      seconds_since(t0) + 0.0;  // cache may have absorbed the run cost
  const double wall = result.report["wall_seconds"].get<double>();
  require(wall < 600.0, "run wall time " + fmt(wall) + "s exceeds 10 min");
  (void)dt;
  return "completed; sqrt(E2) x" + fmt(ratio) + ", exponent " + fmt(expo) +
         " (residual " + fmt(resid) + "), decay slope " + fmt(slope) +
         ", wall " + fmt(wall) + "s";
}

// ---------------------------------------------------------------------------
// 6. Blow-up dichotomy.

std::string criterion_6() {
  const auto& bad = preset_run("nonnull_blowup");
  require(bad.outcome.terminal == Terminal::BlowUp,
          "non-null run did not break down");
  require(bad.outcome.t_final > 0.0 &&
              bad.outcome.t_final <= bad.report["run"]["t_final"].get<double>() +
                                         1e-9,
          "breakdown time not finite");

  // Matched null counterpart: identical data and grid, equal tensor norm.
  const Preset blowup = make_preset("nonnull_blowup");
  RunConfig cfg = blowup.config;
  cfg.light_monitors = false;
  const auto& good =
      custom_run("dichotomy_null", cfg, norm_one_null_tensor(),
                 SpeedVector({Rational(1)}));
  require(good.outcome.terminal == Terminal::Completed,
          "null counterpart failed: " + good.outcome.reason);
  const double ratio =
      good.report["metrics"]["E2_sqrt_max_over_initial"].get<double>();
  require(ratio <= 2.0, "null counterpart sqrt(E2) grew by " + fmt(ratio));
  return "non-null breakdown at t* = " + fmt(bad.outcome.t_final) + " (" +
         bad.outcome.reason + "); null counterpart completed, sqrt(E2) x" +
         fmt(ratio);
}

// ---------------------------------------------------------------------------
// 7. Null-form discriminator on passive linear evolutions.

RunConfig discriminator_config() {
  RunConfig cfg = make_preset("null_global").config;
  cfg.solver.amplitude = 0.1;
  cfg.solver.linearize = true;
  cfg.stride = 4;
  cfg.fit_t_min = 2.0;
  cfg.light_monitors = true;
  return cfg;
}

std::string criterion_7() {
  const RunConfig cfg = discriminator_config();
  const auto& null_run = custom_run("discriminator_null", cfg,
                                    norm_one_null_tensor(),
                                    SpeedVector({Rational(1)}));
  const auto& nonnull_run = custom_run("discriminator_nonnull", cfg,
                                       norm_one_nonnull_tensor(),
                                       SpeedVector({Rational(1)}));
  const double s_null =
      null_run.report["metrics"]["trend_nullform"]["relative_slope"]
          .get<double>();
  const double s_nonnull =
      nonnull_run.report["metrics"]["trend_nullform"]["relative_slope"]
          .get<double>();
  require(s_null <= 0.05, "null tensor slope " + fmt(s_null) + " > 0.05");
  require(s_nonnull >= 3.0 * s_null,
          "non-null slope " + fmt(s_nonnull) + " not 3x the null slope " +
              fmt(s_null));
  require(s_nonnull > 0.0, "non-null slope not positive");
  return "relative slopes: null " + fmt(s_null) + ", non-null " +
         fmt(s_nonnull);
}

// ---------------------------------------------------------------------------
// 8. Klainerman-Sobolev monitors on free waves.

std::string criterion_8() {
  const auto& result = preset_run("linear_baseline");
  require(result.outcome.terminal == Terminal::Completed,
          "baseline run failed");
  const auto& metrics = result.report["metrics"];
  std::string detail = "relative slopes:";
  for (const char* name : {"trend_kl4", "trend_kl5", "trend_kl6", "trend_kl7"}) {
    const double slope = metrics[name]["relative_slope"].get<double>();
    require(slope <= 0.05,
            std::string(name) + " slope " + fmt(slope) + " > 0.05");
    detail += std::string(" ") + name + "=" + fmt(slope);
  }
  detail += "; r_min mask = " +
            fmt(result.report["grid"]["r_min_mask"].get<double>());
  return detail;
}

// ---------------------------------------------------------------------------
// 9. Reproducibility of series files.

std::string criterion_9() {
  const Preset preset = make_preset("multispeed_nonresonant");
  RunConfig cfg = preset.config;
  // A quick window is enough: bit-identical output is what is asserted.
  cfg.solver.t_end = 0.8;
  cfg.stride = 2;
  auto one = [&](const std::string& key) {
    RunConfig c2 = cfg;
    c2.directory = kOutRoot + "/" + key;
    fs::remove_all(c2.directory);
    fs::create_directories(c2.directory);
    c2.tensor_path = c2.directory + "/tensor";
    save_tensor_file(c2.tensor_path, preset.tensor, preset.speeds, key);
    run_experiment(c2);
    std::ifstream in(c2.directory + "/series.csv");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = one("repro_a");
  const std::string b = one("repro_b");
  require(!a.empty(), "empty series");
  require(a == b, "series differ between identical runs");
  return "two runs, byte-identical CSV (" + std::to_string(a.size()) +
         " bytes)";
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria{
      {1, "null checker agrees with the cone-sampling oracle", criterion_1},
      {2, "commutator closure preserves the null condition", criterion_2},
      {3, "solver order and linear energy conservation", criterion_3},
      {4, "modified-energy equivalence on small-amplitude records",
       criterion_4},
      {5, "small-data null run keeps the theorem shape", criterion_5},
      {6, "blow-up dichotomy between matched tensors", criterion_6},
      {7, "null-form discriminator on outgoing packets", criterion_7},
      {8, "Klainerman-Sobolev monitors stay bounded", criterion_8},
      {9, "fixed-seed runs reproduce series byte for byte", criterion_9},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "all") {
      selected.clear();
      break;
    }
    selected.push_back(std::atoi(arg.c_str()));
  }

  fs::create_directories(kOutRoot);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.number) ==
            selected.end()) {
      continue;
    }
    try {
      const std::string detail = c.body();
      std::printf("[PASS] criterion %d: %s — %s\n", c.number, c.title.c_str(),
                  detail.c_str());
    } catch (const Failure& f) {
      ++failures;
      std::printf("[FAIL] criterion %d: %s — %s\n", c.number, c.title.c_str(),
                  f.detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] criterion %d: %s — exception: %s\n", c.number,
                  c.title.c_str(), e.what());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
