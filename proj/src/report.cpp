#include "nullwave/report.hpp"

#include "nullwave/snapshot.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace nullwave {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json trend_json(const TrendFit& fit) {
  return json{{"slope", fit.slope},
              {"relative_slope", fit.relative_slope},
              {"samples", fit.samples}};
}

std::vector<std::pair<double, double>> ratio_series(
    const DiagnosticsSeries& series, double DiagnosticsRecord::*field) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : series) {
    if (r.flags & kFlagInvalidState) continue;
    pts.emplace_back(r.t, r.*field);
  }
  return pts;
}

json record_json(const DiagnosticsRecord& r) {
  auto safe = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return std::to_string(v);
  };
  return json{{"t", r.t},          {"E1", safe(r.E1)},
              {"E2", safe(r.E2)},  {"E3", safe(r.E3)},
              {"X2", safe(r.X2)},  {"X3", safe(r.X3)},
              {"Etilde2", safe(r.Etilde2)}, {"Etilde3", safe(r.Etilde3)},
              {"decay2", safe(r.decay2)},   {"decay3", safe(r.decay3)},
              {"kl4", safe(r.kl4)}, {"kl5", safe(r.kl5)},
              {"kl6", safe(r.kl6)}, {"kl7", safe(r.kl7)},
              {"nullform", safe(r.nullform)},
              {"trilinear", safe(r.trilinear)},
              {"sup_du", safe(r.sup_du)}, {"sup_grad", safe(r.sup_grad)},
              {"flags", r.flags}};
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config,
                                const std::string& preset_name) {
  const auto wall_start = std::chrono::steady_clock::now();
  ExperimentResult result;

  TensorFile tf = load_tensor_file(config.tensor_path);
  SpeedVector speeds = config.speeds_override
                           ? SpeedVector(*config.speeds_override)
                           : tf.speeds;
  WaveSystem system(std::move(speeds), std::move(tf.tensor));

  const GridSpec spec = config.grid_spec();
  spec.validate();
  GridState state(spec, system.families());
  config.data.fill(system.speeds(), config.solver.amplitude, state);

  const StepPlan plan = plan_steps(config.solver, spec.dx, system.max_speed());
  RunParams params;
  params.solver = config.solver;
  if (config.stride > 0) {
    for (int s = 0; s <= plan.nsteps; s += config.stride) {
      params.probe_steps.push_back(s);
    }
  }
  for (double t : config.times) {
    if (plan.dt > 0.0) {
      params.probe_steps.push_back(
          static_cast<int>(std::llround(t / plan.dt)));
    }
  }

  DiagnosticsEngine engine(system, spec, config.solver.linearize);
  DiagnosticsSeries series;
  const bool light = config.light_monitors;
  RunOutcome outcome = run(system, state, params, [&](const GridState& st) {
    series.push_back(engine.compute(st, light));
  });

  fs::create_directories(config.directory);
  const std::string csv_path =
      (fs::path(config.directory) / (config.series_basename + ".csv")).string();
  const std::string ndjson_path =
      (fs::path(config.directory) / (config.series_basename + ".ndjson"))
          .string();
  write_series_csv(csv_path, series);
  write_series_ndjson(ndjson_path, series);
  std::string snapshot_base;
  if (config.snapshot_final) {
    snapshot_base = (fs::path(config.directory) / "final").string();
    write_snapshot(snapshot_base, state);
  }

  // Aggregate metrics.
  json metrics;
  double e1_drift = 0.0, e2h_max_ratio = 0.0, sup_grad_max = 0.0,
         sup_du_max = 0.0;
  int enequiv_checked = 0, enequiv_violations = 0;
  const DiagnosticsRecord* first_valid = nullptr;
  for (const auto& r : series) {
    if (r.flags & kFlagInvalidState) continue;
    if (first_valid == nullptr) first_valid = &r;
    sup_grad_max = std::max(sup_grad_max, r.sup_grad);
    sup_du_max = std::max(sup_du_max, r.sup_du);
    if (first_valid->E1 > 0.0) {
      e1_drift = std::max(e1_drift,
                          std::fabs(r.E1 - first_valid->E1) / first_valid->E1);
    }
    if (first_valid->E2 > 0.0) {
      e2h_max_ratio =
          std::max(e2h_max_ratio, std::sqrt(r.E2 / first_valid->E2));
    }
    if (!(r.flags & kFlagLightMode) && !(r.flags & kFlagJetSolveFailed) &&
        r.sup_grad < 0.05 && r.E2 > 0.0) {
      ++enequiv_checked;
      if (!(0.5 * r.E2 <= r.Etilde2 && r.Etilde2 <= 2.0 * r.E2)) {
        ++enequiv_violations;
      }
      if (!(0.5 * r.E3 <= r.Etilde3 && r.Etilde3 <= 2.0 * r.E3)) {
        ++enequiv_violations;
      }
    }
  }
  metrics["E1_drift_rel"] = e1_drift;
  metrics["E2_sqrt_max_over_initial"] = e2h_max_ratio;
  metrics["sup_grad_max"] = sup_grad_max;
  metrics["sup_du_max"] = sup_du_max;
  metrics["enequiv_checked_records"] = enequiv_checked;
  metrics["enequiv_violations"] = enequiv_violations;

  try {
    const GrowthFit fit =
        fit_growth(series, SeriesQuantity::E3, config.fit_t_min);
    metrics["growth_E3"] = json{{"exponent", fit.exponent},
                                {"residual", fit.residual},
                                {"t_lo", fit.t_lo},
                                {"t_hi", fit.t_hi},
                                {"samples", fit.samples}};
  } catch (const std::exception& e) {
    metrics["growth_E3"] = json{{"error", e.what()}};
  }

  metrics["trend_decay2"] = trend_json(
      trend_slope(ratio_series(series, &DiagnosticsRecord::decay2),
                  config.fit_t_min));
  metrics["trend_kl4"] = trend_json(trend_slope(
      ratio_series(series, &DiagnosticsRecord::kl4), config.fit_t_min));
  metrics["trend_kl5"] = trend_json(trend_slope(
      ratio_series(series, &DiagnosticsRecord::kl5), config.fit_t_min));
  metrics["trend_kl6"] = trend_json(trend_slope(
      ratio_series(series, &DiagnosticsRecord::kl6), config.fit_t_min));
  metrics["trend_kl7"] = trend_json(trend_slope(
      ratio_series(series, &DiagnosticsRecord::kl7), config.fit_t_min));
  metrics["trend_nullform"] = trend_json(trend_slope(
      ratio_series(series, &DiagnosticsRecord::nullform), config.fit_t_min));
  metrics["trend_trilinear"] = trend_json(trend_slope(
      ratio_series(series, &DiagnosticsRecord::trilinear), config.fit_t_min));

  // Per-preset assertions.
  json checks = json::array();
  auto add_check = [&](const std::string& name, bool pass,
                       const std::string& detail) {
    checks.push_back(json{{"name", name}, {"pass", pass}, {"detail", detail}});
  };
  const bool completed = outcome.terminal == Terminal::Completed;
  if (preset_name == "linear_baseline") {
    add_check("terminal_completed", completed, outcome.reason);
    add_check("E1_conserved_1e-6", e1_drift < 1e-6,
              "drift=" + std::to_string(e1_drift));
    const double expo = metrics["growth_E3"].contains("exponent")
                            ? metrics["growth_E3"]["exponent"].get<double>()
                            : 1e9;
    add_check("growth_exponent_near_zero", std::fabs(expo) <= 0.01,
              "exponent=" + std::to_string(expo));
  } else if (preset_name == "null_global") {
    add_check("terminal_completed", completed, outcome.reason);
    add_check("E2_sqrt_within_2x", e2h_max_ratio <= 2.0,
              "max_ratio=" + std::to_string(e2h_max_ratio));
    const double expo = metrics["growth_E3"].contains("exponent")
                            ? metrics["growth_E3"]["exponent"].get<double>()
                            : 1e9;
    add_check("growth_exponent_le_0.1", expo <= 0.1,
              "exponent=" + std::to_string(expo));
    const double ds = metrics["trend_decay2"]["relative_slope"].get<double>();
    add_check("decay_ratio_no_positive_trend", ds <= 0.05,
              "relative_slope=" + std::to_string(ds));
    add_check("enequiv_no_violations", enequiv_violations == 0,
              std::to_string(enequiv_violations) + " violations");
  } else if (preset_name == "nonnull_blowup") {
    add_check("terminal_blowup", outcome.terminal == Terminal::BlowUp,
              outcome.reason);
    add_check("finite_breakdown_time",
              outcome.terminal == Terminal::BlowUp &&
                  outcome.t_final > 0.0 &&
                  outcome.t_final <= config.solver.t_end,
              "t*=" + std::to_string(outcome.t_final));
  } else if (preset_name == "multispeed_nonresonant") {
    add_check("terminal_completed", completed, outcome.reason);
    add_check("E2_sqrt_within_2x", e2h_max_ratio <= 2.0,
              "max_ratio=" + std::to_string(e2h_max_ratio));
    add_check("enequiv_no_violations", enequiv_violations == 0,
              std::to_string(enequiv_violations) + " violations");
  }

  const auto wall_end = std::chrono::steady_clock::now();
  json report;
  report["schema"] = "nullwave-report/1";
  report["preset"] = preset_name;
  report["config"] = write_config(config);
  {
    json tj;
    tj["path"] = config.tensor_path;
    tj["families"] = system.families();
    tj["frobenius_norm"] = system.tensor().frobenius_norm();
    tj["symmetric"] = system.symmetry().symmetric;
    json per_family = json::array();
    for (bool b : system.null_status().null_per_family) per_family.push_back(b);
    tj["null_per_family"] = per_family;
    tj["null"] = system.null_status().all_null;
    json speeds_j = json::array();
    for (int k = 0; k < system.families(); ++k) {
      speeds_j.push_back(system.speed(k));
    }
    tj["speeds"] = speeds_j;
    report["tensor"] = tj;
  }
  report["grid"] = json{{"n", spec.n},
                        {"dx", spec.dx},
                        {"periodic", spec.periodic},
                        {"r_min_mask", engine.r_min()}};
  report["run"] = json{
      {"terminal", completed ? "completed" : "blow-up"},
      {"reason", outcome.reason},
      {"t_final", outcome.t_final},
      {"steps", outcome.steps_taken},
      {"dt", outcome.dt},
      {"records", series.size()},
  };
  report["metrics"] = metrics;
  if (!series.empty()) {
    report["first_record"] = record_json(series.front());
    report["final_record"] = record_json(series.back());
  }
  report["checks"] = checks;
  report["files"] = json{{"series_csv", csv_path},
                         {"series_ndjson", ndjson_path},
                         {"snapshot", snapshot_base}};
  report["wall_seconds"] =
      std::chrono::duration<double>(wall_end - wall_start).count();

  {
    std::ofstream out(fs::path(config.directory) / "report.json");
    out << report.dump(2) << "\n";
  }

  result.report = std::move(report);
  result.outcome = outcome;
  result.series = std::move(series);
  result.exit_code = completed ? 0 : 3;
  return result;
}

json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  json j;
  in >> j;
  return j;
}

json compare_reports(const json& a, const json& b) {
  if (!a.contains("schema") || !b.contains("schema") ||
      a["schema"] != b["schema"]) {
    throw std::invalid_argument("compare: report schemas differ");
  }
  json diff;
  diff["schema"] = a["schema"];
  const bool same_grid = a["grid"]["n"] == b["grid"]["n"] &&
                         a["grid"]["dx"] == b["grid"]["dx"];
  diff["not_directly_comparable"] = !same_grid;

  json rows = json::array();
  auto add_row = [&](const std::string& name, const json& va, const json& vb) {
    json row{{"name", name}, {"a", va}, {"b", vb}};
    if (va.is_number() && vb.is_number()) {
      row["delta"] = vb.get<double>() - va.get<double>();
    }
    if (va != vb) rows.push_back(row);
  };
  add_row("run.terminal", a["run"]["terminal"], b["run"]["terminal"]);
  add_row("run.t_final", a["run"]["t_final"], b["run"]["t_final"]);
  auto metric = [&](const json& r, const char* outer,
                    const char* inner) -> json {
    if (!r.contains("metrics") || !r["metrics"].contains(outer)) return nullptr;
    const json& m = r["metrics"][outer];
    if (inner == nullptr) return m;
    if (!m.contains(inner)) return nullptr;
    return m[inner];
  };
  add_row("growth_E3.exponent", metric(a, "growth_E3", "exponent"),
          metric(b, "growth_E3", "exponent"));
  for (const char* name :
       {"trend_decay2", "trend_kl4", "trend_kl5", "trend_kl6", "trend_kl7",
        "trend_nullform", "trend_trilinear"}) {
    add_row(std::string(name) + ".relative_slope",
            metric(a, name, "relative_slope"), metric(b, name, "relative_slope"));
  }
  if (same_grid) {
    add_row("metrics.E1_drift_rel", metric(a, "E1_drift_rel", nullptr),
            metric(b, "E1_drift_rel", nullptr));
    add_row("metrics.E2_sqrt_max_over_initial",
            metric(a, "E2_sqrt_max_over_initial", nullptr),
            metric(b, "E2_sqrt_max_over_initial", nullptr));
  }
  diff["differences"] = rows;
  diff["identical"] = rows.empty();
  return diff;
}

}  // namespace nullwave
