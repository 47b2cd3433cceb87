#pragma once

#include <map>
#include <vector>

#include "bbi/lattice.hpp"
#include "bbi/waveform.hpp"

namespace bbi {

inline constexpr double kMaxShakingStep = 1e-6;  // s

struct FewModeTrajectory {
  StateVector final_state;
  std::vector<double> times;  // s, snapshot stamps
  std::vector<StateVector> snapshots;
};

/// Exact propagation of the plane-wave coefficients at fixed quasimomentum.
/// Each distinct phase value gets its own eigendecomposition of H(phi); the
/// resulting step unitaries are cached by value.
class FewModePropagator {
 public:
  FewModePropagator(LatticeConfig config, double q, double dt_recoil);

  const Eigen::MatrixXcd& step(double phi);
  void apply(double phi, StateVector& psi) { psi = step(phi) * psi; }

  const LatticeConfig& config() const { return config_; }

 private:
  LatticeConfig config_;
  double q_;
  double dt_;
  std::map<double, Eigen::MatrixXcd> cache_;
};

// exp(-i H dt) for a Hermitian matrix via its eigendecomposition.
Eigen::MatrixXcd hermitian_propagator(const HermitianMatrix& h, double dt_recoil);

/// Applies the waveform sample by sample. `snapshot_every` > 0 records the
/// state after every that-many samples (plus the initial state).
FewModeTrajectory propagate_fewmode(const StateVector& initial, const Waveform& w, const LatticeConfig& config,
                                    double q = 0.0, int snapshot_every = 0);

FewModeTrajectory propagate_fewmode(const BlochState& initial, const Waveform& w, const LatticeConfig& config,
                                    int snapshot_every = 0);

// Static lattice (phi = 0) hold of the given duration in seconds.
StateVector hold_fewmode(const StateVector& initial, double seconds, const LatticeConfig& config, double q = 0.0);

// Populations |<n|psi>|^2 of bands 0..n_bands-1 at quasimomentum q.
std::vector<double> band_populations(const StateVector& psi, const LatticeConfig& config, int n_bands, double q = 0.0);

}  // namespace bbi
