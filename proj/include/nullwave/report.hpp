#pragma once

#include "nullwave/config.hpp"
#include "nullwave/diagnostics.hpp"
#include "nullwave/solver.hpp"

#include <json.hpp>

#include <string>

namespace nullwave {

struct ExperimentResult {
  nlohmann::json report;
  RunOutcome outcome;
  DiagnosticsSeries series;
  int exit_code = 0;  // 0 completed, 3 blow-up terminal
};

/// Execute a validated config: run, write series (CSV + NDJSON) and
/// report.json into the output directory, evaluate per-preset checks.
ExperimentResult run_experiment(const RunConfig& config,
                                const std::string& preset_name = "");

/// Side-by-side diff of two reports. Throws std::invalid_argument when the
/// schemas differ. Grid mismatches are flagged "not_directly_comparable" and
/// only the dimensionless metrics are diffed.
nlohmann::json compare_reports(const nlohmann::json& a,
                               const nlohmann::json& b);

nlohmann::json load_report(const std::string& path);

}  // namespace nullwave
