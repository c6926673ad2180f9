#pragma once

#include "nullwave/grid.hpp"
#include "nullwave/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nullwave {

/// Full PDE specification: speeds plus the coupling tensor, with compiled
/// double views for the grid loops.
class WaveSystem {
 public:
  WaveSystem(SpeedVector speeds, CoeffTensor tensor);

  int families() const { return tensor_.families(); }
  const SpeedVector& speeds() const { return speeds_; }
  const CoeffTensor& tensor() const { return tensor_; }
  double speed(int k) const { return speeds_.speed_double(k); }
  double max_speed() const { return speeds_.max_speed(); }

  const SymmetryReport& symmetry() const { return symmetry_; }
  /// Null status is recorded, not required; non-null systems are a feature.
  const NullCheckResult& null_status() const { return null_; }
  bool linear() const { return entries_.empty(); }

  struct Entry {
    int i, j, k, a, b, g;
    double v;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  /// Entries whose second-derivative slot is not (0,0).
  const std::vector<Entry>& entries_no_tt() const { return entries_no_tt_; }
  /// Entries with (b,g) == (0,0): these form M_{kj} = sum C^{ijk}_{a00} du^i_a.
  const std::vector<Entry>& entries_tt() const { return entries_tt_; }
  /// Compiled self-interaction cubics (one per family) for pointwise monitors.
  const std::vector<std::vector<Entry>>& diagonal_blocks() const {
    return diag_blocks_;
  }

 private:
  SpeedVector speeds_;
  CoeffTensor tensor_;
  SymmetryReport symmetry_;
  NullCheckResult null_;
  std::vector<Entry> entries_, entries_no_tt_, entries_tt_;
  std::vector<std::vector<Entry>> diag_blocks_;
};

/// Initial data families. Amplitudes here are relative shapes; the overall
/// scale is SolverConfig::amplitude.
struct InitialData {
  enum class Family { GaussianBump, PlanePacket, MultiBump };
  Family family = Family::GaussianBump;

  std::vector<double> amplitude{1.0};           // per component or broadcast
  std::vector<double> width{1.0};               // per component or broadcast
  std::vector<std::array<double, 3>> center{{0.0, 0.0, 0.0}};
  std::array<double, 3> direction{1.0, 0.0, 0.0};  // plane packet
  double wavenumber = 2.0;                         // plane packet
  int count = 3;                                   // multi bump
  double spread = 2.0;                             // multi bump
  std::uint64_t seed = 1;                          // multi bump

  double amplitude_of(int k) const;
  double width_of(int k) const;
  std::array<double, 3> center_of(int k) const;

  /// Radius outside which |u| and |du| fall below 1e-14 * amplitude.
  double support_radius(int m) const;

  /// Fill u, ut at t = 0, scaled by epsilon. Needs speeds for moving packets.
  void fill(const SpeedVector& speeds, double epsilon, GridState& state) const;
};

const char* family_name(InitialData::Family f);
std::optional<InitialData::Family> family_from_name(const std::string& name);

struct SolverConfig {
  double cfl = 0.4;
  double t_end = 1.0;
  double amplitude = 0.01;  // epsilon, the data scale
  bool linearize = false;   // evolve with N = 0 (passive-tensor runs)
  double blowup_factor = 1e3;
};

/// Scratch fields reused across acceleration calls and RK stages.
struct PdeWorkspace {
  explicit PdeWorkspace(const GridSpec& spec, int m);

  std::vector<GridField> grad;   // m x 3, D_l u
  std::vector<GridField> dut;    // m x 3, D_l ut
  std::vector<GridField> hess;   // m x 6, D_l D_n u for l <= n
  std::vector<GridField> mfield; // m x m, quasilinear matrix entries
  std::vector<GridField> nfield; // m, explicit nonlinear terms
  GridField scratch;

  GridField& grad_at(int k, int l) { return grad[static_cast<std::size_t>(k * 3 + l)]; }
  GridField& dut_at(int k, int l) { return dut[static_cast<std::size_t>(k * 3 + l)]; }
  GridField& hess_at(int k, int l, int n);  // l <= n
  int m = 0;
};

struct AccelStatus {
  bool ok = true;
  std::string error;     // "quasilinearity too strong" / "singular system"
  double max_m_norm = 0; // max over points of the inf-norm of M
  std::size_t where = 0; // offending point for error reports
};

/// Pointwise acceleration solve (I - M(du)) a = c^2 Lap u + N~, where M
/// collects the (0,0) second-derivative slots and N~ is the nonlinearity with
/// that slot zeroed. Mixed time-space second derivatives are spatial
/// derivatives of ut.
AccelStatus acceleration(const WaveSystem& system, const GridState& state,
                         bool linearize, PdeWorkspace& ws,
                         std::vector<GridField>& out);

/// Third time derivative from the once-differentiated equation; uses the same
/// matrix M. Needed by diagnostics jets, never by time stepping.
AccelStatus third_time_derivative(const WaveSystem& system,
                                  const GridState& state, bool linearize,
                                  const std::vector<GridField>& utt,
                                  PdeWorkspace& ws,
                                  std::vector<GridField>& out);

}  // namespace nullwave
