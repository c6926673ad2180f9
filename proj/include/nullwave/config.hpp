#pragma once

#include "nullwave/grid.hpp"
#include "nullwave/system.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nullwave {

/// Everything needed to reproduce one run. Maps 1:1 onto the sectioned
/// key-value config format (see write_config / docs in the README).
struct RunConfig {
  // [system]
  std::string tensor_path;
  std::optional<std::vector<Rational>> speeds_override;

  // [grid]
  int n = 64;
  double dx = 0.0;
  std::optional<std::array<double, 3>> origin;  // default: centered cube
  bool periodic = false;

  // [solver]
  SolverConfig solver;

  // [data]
  InitialData data;

  // [probes]
  int stride = 0;                 // probe every `stride` steps (0 = ends only)
  std::vector<double> times;      // explicit probe times, snapped to steps
  double fit_t_min = 0.0;         // fits/trends ignore earlier records
  bool light_monitors = false;

  // [outputs]
  std::string directory = "out";
  bool snapshot_final = false;
  std::string series_basename = "series";

  std::uint64_t seed = 1;

  GridSpec grid_spec() const;
};

struct ConfigLoadResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;  // all validation failures, field-qualified
  bool ok() const { return errors.empty() && config.has_value(); }
};

/// Parse and fully validate. Validation loads the tensor file, checks the
/// symmetry condition, the CFL bound, the no-reflection domain policy, and
/// the probe schedule; every failure is reported, not just the first.
ConfigLoadResult load_config(const std::string& path);
ConfigLoadResult parse_config_text(const std::string& text,
                                   const std::string& origin);

std::string write_config(const RunConfig& config);
void write_config_file(const std::string& path, const RunConfig& config);

/// Largest CFL number accepted by the validator (RK4 imaginary-axis limit
/// for the composed stencil is ~1.19; 1.0 keeps a margin).
double max_cfl();

struct Preset {
  std::string name;
  RunConfig config;  // tensor_path filled in by materialize_preset
  CoeffTensor tensor{1};
  SpeedVector speeds{std::vector<Rational>{Rational(1)}};
  std::string description;
};

const std::vector<std::string>& preset_names();
Preset make_preset(const std::string& name);

/// Write the preset's tensor file and expanded config into `directory` and
/// return the config (tensor_path set, outputs under the same directory).
RunConfig materialize_preset(const Preset& preset, const std::string& directory);

}  // namespace nullwave
