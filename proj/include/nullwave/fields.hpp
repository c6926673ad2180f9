#pragma once

#include "nullwave/grid.hpp"
#include "nullwave/system.hpp"
#include "nullwave/tensor.hpp"

#include <span>
#include <vector>

namespace nullwave {

/// Time jet of a scalar grid function on one slice: lvl[j] holds the j-th
/// time derivative. Applying d/dt or the scaling field consumes one level;
/// purely spatial fields act level-wise.
struct Jet {
  std::vector<GridField> lvl;
  int order() const { return static_cast<int>(lvl.size()) - 1; }
};

/// Per-component jets of the evolving solution. Level 2 comes from the
/// acceleration solve and level 3 from the differentiated equation, never
/// from time-differencing snapshots.
struct StateJet {
  double t = 0.0;
  GridSpec spec;
  std::vector<Jet> comp;
  bool valid = true;  // false if a jet solve failed (e.g. near breakdown)
};

StateJet build_state_jet(const WaveSystem& system, const GridState& state,
                         int order, bool linearize, PdeWorkspace& ws);

/// Gamma applied to a jet. Requires in.order() >= 1 for Dt and Scaling.
Jet apply_gamma(const GridSpec& spec, double t, const Jet& in, Gamma g);
Jet apply_gamma_sequence(const GridSpec& spec, double t, const Jet& in,
                         std::span<const Gamma> seq);

/// How many jet levels the sequence consumes (number of Dt/S entries).
int levels_consumed(std::span<const Gamma> seq);

constexpr int kMaxSequenceLength = 2;  // grid application accuracy guard

/// Discrete d_mu u^k on the slice; mu = 0 is the stored ut.
GridField partial(const GridState& state, int mu, int k);

/// Single vector field applied to component k. Scaling uses stored ut only
/// (level-0 result), so no PDE data is needed.
GridField apply_field(const GridState& state, Gamma g, int k);

/// Gamma^a u^k, right-to-left (first sequence entry applied first). Needs the
/// system whenever the sequence consumes more than one time level.
GridField apply_sequence(const WaveSystem& system, const GridState& state,
                         std::span<const Gamma> seq, int k);

/// Good/bad derivative split d = Y_k^- D_k^- + R for one component. Points
/// with r below the mask radius are flagged and excluded from norms.
struct DerivativeSplit {
  GridField dminus;                       // (1/2)(d_t - c_k d_r) u
  std::array<GridField, 4> remainder;     // R_mu u
  std::array<GridField, 3> yminus_space;  // -x_l / (c_k r); time slot is 1
  GridField mask;                         // 1 where r >= r_min, else 0
};

DerivativeSplit decompose(const WaveSystem& system, const GridState& state,
                          int k, double r_min);

}  // namespace nullwave
