#include "nullwave/config.hpp"
#include "nullwave/diagnostics.hpp"
#include "nullwave/report.hpp"
#include "nullwave/solver.hpp"
#include "nullwave/tensor.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

namespace {

using namespace nullwave;

// Exit codes: 0 ok, 2 condition-check failure, 3 blow-up terminal,
// 4 validation or usage error.
constexpr int kOk = 0;
constexpr int kCheckFailed = 2;
constexpr int kBlowUp = 3;
constexpr int kInvalid = 4;

int cmd_check(const std::string& path) {
  std::optional<TensorFile> loaded;
  try {
    loaded = load_tensor_file(path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  const TensorFile& tf = *loaded;
  bool ok = true;
  const auto sym = check_symmetry(tf.tensor);
  if (sym.symmetric) {
    std::cout << "symmetry: ok\n";
  } else {
    ok = false;
    std::cout << "symmetry: FAILED at " << format_index_tuple(*sym.witness)
              << "\n";
  }
  auto print_witness = [](const NullWitness& w) {
    std::printf("  witness: family %d, X = (%.12g, %.12g, %.12g, %.12g), "
                "value %.12g\n",
                w.k + 1, w.x[0], w.x[1], w.x[2], w.x[3], w.value);
  };
  if (tf.speeds.strictly_decreasing()) {
    const auto null = check_null(tf.tensor, tf.speeds);
    for (int k = 0; k < tf.tensor.families(); ++k) {
      std::cout << "null condition, family " << k + 1 << ": "
                << (null.null_per_family[static_cast<std::size_t>(k)]
                        ? "ok"
                        : "FAILED")
                << "\n";
    }
    if (!null.all_null) {
      ok = false;
      if (null.witness) print_witness(*null.witness);
    }
  } else {
    std::cout << "repeated speeds: using the extended null condition\n";
    const auto ext = check_null_extended(tf.tensor, tf.speeds,
                                         tf.speeds.equal_speed_groups());
    if (ext.all_null) {
      std::cout << "extended null condition: ok\n";
    } else {
      ok = false;
      std::cout << "extended null condition: FAILED for triples:";
      for (const auto& t : ext.failing_triples) {
        std::cout << " (" << t.i << "," << t.j << "," << t.k << ")";
      }
      std::cout << "\n";
      if (ext.witness) print_witness(*ext.witness);
    }
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_run(const std::string& config_path) {
  const ConfigLoadResult loaded = load_config(config_path);
  if (!loaded.ok()) {
    std::cerr << "invalid config:\n";
    for (const auto& e : loaded.errors) std::cerr << "  " << e << "\n";
    return kInvalid;
  }
  try {
    const ExperimentResult result = run_experiment(*loaded.config);
    std::cout << "terminal: " << result.report["run"]["terminal"]
              << " reason: " << result.report["run"]["reason"]
              << " t_final: " << result.outcome.t_final << "\n";
    std::cout << "report: " << loaded.config->directory << "/report.json\n";
    return result.exit_code == 0 ? kOk : kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_preset(const std::string& name, const std::string& outdir,
               bool dry_run) {
  Preset preset;
  try {
    preset = make_preset(name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  const std::string dir = outdir.empty() ? "out/" + name : outdir;
  const RunConfig cfg = materialize_preset(preset, dir);
  std::cout << "# preset " << name << ": " << preset.description << "\n";
  std::cout << write_config(cfg);
  if (dry_run) return kOk;
  try {
    const ExperimentResult result = run_experiment(cfg, name);
    std::cout << "terminal: " << result.report["run"]["terminal"] << "\n";
    for (const auto& check : result.report["checks"]) {
      std::cout << (check["pass"].get<bool>() ? "[PASS] " : "[FAIL] ")
                << check["name"].get<std::string>() << " ("
                << check["detail"].get<std::string>() << ")\n";
    }
    std::cout << "report: " << dir << "/report.json\n";
    return result.exit_code == 0 ? kOk : kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& out_path) {
  try {
    const auto a = load_report(a_path);
    const auto b = load_report(b_path);
    const auto diff = compare_reports(a, b);
    std::cout << diff.dump(2) << "\n";
    if (!out_path.empty()) {
      std::ofstream out(out_path);
      out << diff.dump(2) << "\n";
    }
    return kOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// dx/dt halving study on the torus standing wave u = cos(c t) sin(x1).
int cmd_convergence(int n_coarse, double t_end) {
  const SpeedVector speeds({Rational(1)});
  double errors[2];
  for (int pass = 0; pass < 2; ++pass) {
    const int n = pass == 0 ? n_coarse : 2 * n_coarse;
    const GridSpec spec = GridSpec::periodic_box(n, 2.0 * M_PI);
    WaveSystem system(speeds, CoeffTensor(1));
    GridState state(spec, 1);
    for (int i3 = 0; i3 < n; ++i3)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i1 = 0; i1 < n; ++i1) {
          state.u[0].at(i1, i2, i3) = std::sin(spec.coord(0, i1));
        }
    SolverConfig cfg;
    cfg.cfl = 0.4;
    cfg.t_end = t_end;
    RunParams params;
    params.solver = cfg;
    GridState final_state = state;
    run(system, final_state, params, nullptr);
    double err = 0.0;
    const double expected_amp = std::cos(t_end);
    for (int i3 = 0; i3 < n; ++i3)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i1 = 0; i1 < n; ++i1) {
          const double exact = expected_amp * std::sin(spec.coord(0, i1));
          err = std::max(err,
                         std::fabs(final_state.u[0].at(i1, i2, i3) - exact));
        }
    errors[pass] = err;
    std::printf("n = %3d  dt = cfl*dx/c  sup error = %.6e\n", n, err);
  }
  const double order = std::log2(errors[0] / errors[1]);
  std::printf("observed order: %.3f\n", order);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nullwave: coupled quasilinear wave systems at desk scale"};
  app.require_subcommand(1);

  std::string tensor_path;
  auto* check = app.add_subcommand(
      "check", "verify the symmetry and null conditions of a tensor file");
  check->add_option("tensor", tensor_path, "tensor file")->required();

  std::string config_path;
  auto* runc = app.add_subcommand("run", "run a config file");
  runc->add_option("config", config_path, "config file")->required();

  std::string preset_name, preset_out;
  bool dry_run = false;
  auto* preset = app.add_subcommand("preset", "expand and run a named preset");
  preset->add_option("name", preset_name,
                     "one of: linear_baseline, null_global, nonnull_blowup, "
                     "multispeed_nonresonant")
      ->required();
  preset->add_option("-o,--out", preset_out, "output directory");
  preset->add_flag("--dry-run", dry_run, "print the expanded config only");

  std::string cmp_a, cmp_b, cmp_out;
  auto* cmp = app.add_subcommand("compare", "diff two report.json files");
  cmp->add_option("a", cmp_a)->required();
  cmp->add_option("b", cmp_b)->required();
  cmp->add_option("-o,--out", cmp_out, "write the diff as JSON");

  int conv_n = 24;
  double conv_t = 2.0;
  auto* conv = app.add_subcommand(
      "convergence", "standing-wave dx/dt halving study on the torus");
  conv->add_option("-n", conv_n, "coarse resolution");
  conv->add_option("-t", conv_t, "final time");

  CLI11_PARSE(app, argc, argv);

  if (*check) return cmd_check(tensor_path);
  if (*runc) return cmd_run(config_path);
  if (*preset) return cmd_preset(preset_name, preset_out, dry_run);
  if (*cmp) return cmd_compare(cmp_a, cmp_b, cmp_out);
  if (*conv) return cmd_convergence(conv_n, conv_t);
  return kInvalid;
}
