#pragma once

#include "nullwave/fields.hpp"
#include "nullwave/grid.hpp"
#include "nullwave/system.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace nullwave {

enum RecordFlags : std::uint32_t {
  kFlagInvalidState = 1u << 0,
  kFlagJetSolveFailed = 1u << 1,
  kFlagZeroDenominator = 1u << 2,
  kFlagLightMode = 1u << 3,
};

/// One time sample of every monitored quantity. Ratios are the empirical
/// constants of the monitored inequalities; 0/0 is reported as 0 and flagged.
struct DiagnosticsRecord {
  double t = 0.0;
  double E1 = 0.0, E2 = 0.0, E3 = 0.0;
  double X2 = 0.0, X3 = 0.0;
  double Etilde2 = 0.0, Etilde3 = 0.0;
  double decay2 = 0.0, decay3 = 0.0;
  double kl4 = 0.0, kl5 = 0.0, kl6 = 0.0, kl7 = 0.0;
  double nullform = 0.0, trilinear = 0.0;
  double sup_du = 0.0, sup_grad = 0.0;
  std::uint32_t flags = 0;
};

using DiagnosticsSeries = std::vector<DiagnosticsRecord>;

class DiagnosticsEngine {
 public:
  /// linearize mirrors the solver flag so jets match the evolution actually
  /// being run (passive-tensor runs keep their tensor for the ratio monitors).
  DiagnosticsEngine(const WaveSystem& system, const GridSpec& spec,
                    bool linearize = false);

  /// Points with r < r_min are excluded from weighted norms and sup monitors.
  double r_min() const { return r_min_; }

  DiagnosticsRecord compute(const GridState& state, bool light = false);

  double energy(const GridState& state, int kappa);
  double weighted_norm(const GridState& state, int kappa);
  double modified_energy(const GridState& state, int nu);
  std::array<double, 4> klainerman_monitors(const GridState& state);
  std::array<double, 2> decay_monitor(const GridState& state);
  double nullform_ratio(const GridState& state);
  double trilinear_nullform_ratio(const GridState& state);

  /// Empirical constant of the remainder bound in the derivative split:
  /// max over the masked grid of |Ru| <X> / (|Gamma u| + <c_k t - r> |du|).
  double remainder_bound_ratio(const GridState& state, int k);

 private:
  struct Scratch;
  DiagnosticsRecord compute_impl(const GridState& state, bool light);
  Scratch make_scratch(const GridState& state, int order,
                       DiagnosticsRecord* rec, bool with_base_derivs = true);
  double e1_of_row(Scratch& s, const std::vector<Jet>& row,
                   std::vector<std::array<GridField, 3>>* grads_out);
  double x_terms_one(Scratch& s, int k, const GridField& dtt,
                     const GridField* dtl, const GridField* hss);
  double x_block(Scratch& s, const std::vector<Jet>& row);
  double etilde_term(Scratch& s, const std::vector<Jet>& row,
                     const std::vector<std::array<GridField, 3>>& grads);
  void build_jets1(Scratch& s);
  void klainerman_from_scratch(Scratch& s, DiagnosticsRecord& rec);
  void nullform_from_scratch(Scratch& s, const std::vector<GridField>& gamma_sq,
                             const std::vector<GridField>& dgamma_sq,
                             bool bilinear, DiagnosticsRecord& rec);

  const WaveSystem& system_;
  GridSpec spec_;
  bool linearize_;
  double r_min_;
  GridField radius_;   // |x| per point
  GridField qweight_;  // trapezoidal cell weight * dx^3
};

enum class SeriesQuantity { E2, E3, Etilde2, Etilde3 };

struct GrowthFit {
  double exponent = 0.0;
  double residual = 0.0;  // rms residual of the log-log fit
  double t_lo = 0.0, t_hi = 0.0;
  int samples = 0;
};

/// Least-squares exponent of log E against log <t>. Requires at least 10
/// usable samples whose positive times span a factor of 4.
GrowthFit fit_growth(const DiagnosticsSeries& series, SeriesQuantity which,
                     double t_min = 0.0);

struct TrendFit {
  double slope = 0.0;           // d(ratio)/dt, least squares
  double relative_slope = 0.0;  // slope / mean ratio over the window
  int samples = 0;
};

/// Trend of a monitored ratio against time over [t_min, inf).
TrendFit trend_slope(const std::vector<std::pair<double, double>>& points,
                     double t_min = 0.0);

/// Fixed-order CSV with a versioned header row, and newline-delimited JSON.
/// Doubles are printed with %.17g so repeated runs are byte-identical.
void write_series_csv(const std::string& path, const DiagnosticsSeries& series);
void write_series_ndjson(const std::string& path,
                         const DiagnosticsSeries& series);
std::string series_csv_header();

}  // namespace nullwave
