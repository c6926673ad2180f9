#pragma once

#include "nullwave/grid.hpp"
#include "nullwave/system.hpp"

#include <functional>
#include <string>
#include <vector>

namespace nullwave {

enum class Terminal { Completed, BlowUp };

struct StepStatus {
  bool ok = true;
  std::string reason;  // "nan", "quasilinearity too strong", ...
};

struct RkWorkspace {
  RkWorkspace(const GridSpec& spec, int m);
  PdeWorkspace pde;
  GridState stage;
  std::vector<GridField> a1, a2, a3, a4;  // stage accelerations
  std::vector<GridField> ut1, ut2, ut3;   // stage velocities
};

/// One classical RK4 step of (u, ut)' = (ut, acceleration). Advances t by dt
/// in place; scans the result for non-finite values.
StepStatus step(const WaveSystem& system, GridState& state, double dt,
                bool linearize, RkWorkspace& ws);

struct RunOutcome {
  Terminal terminal = Terminal::Completed;
  std::string reason;  // for blow-up: nan | gradient_growth | quasilinear_breakdown
  double t_final = 0.0;
  int steps_taken = 0;
  double dt = 0.0;
  double initial_sup_du = 0.0;
  double final_sup_du = 0.0;
};

struct RunParams {
  SolverConfig solver;
  /// Probe step indices (0 = initial data). Always deduplicated/sorted by the
  /// caller; step 0 and the final step are probed regardless.
  std::vector<int> probe_steps;
};

using ProbeFn = std::function<void(const GridState&)>;

struct StepPlan {
  int nsteps = 0;
  double dt = 0.0;
};

/// dt = t_end / ceil(t_end / (cfl dx / c1)): respects the CFL bound and hits
/// t_end exactly.
StepPlan plan_steps(const SolverConfig& cfg, double dx, double max_speed);

/// Integrate to t_end or blow-up. dt = t_end / ceil(t_end / (cfl dx / c1)) so
/// the final time is hit exactly. Blow-up means NaN/Inf, sup|du| exceeding
/// blowup_factor times its initial value, or the acceleration solve leaving
/// the small-data regime; the reason string says which.
RunOutcome run(const WaveSystem& system, GridState& state,
               const RunParams& params, const ProbeFn& probe);

/// Largest |du| over the grid: max over components of |ut| and |D_l u|.
double sup_first_derivatives(const GridState& state);

/// Largest |grad u| (spatial only), the smallness monitor of the modified
/// energy equivalence.
double sup_spatial_gradient(const GridState& state);

/// Max absolute field value outside the causal radius r0 + c1 t + 3 dx.
double exterior_field_max(const GridState& state, double support_radius,
                          double max_speed);

}  // namespace nullwave
