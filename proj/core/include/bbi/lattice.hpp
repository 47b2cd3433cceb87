#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "bbi/units.hpp"

namespace bbi {

using cplx = std::complex<double>;
using HermitianMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

// Plane-wave basis convention, used by every module:
//
//   basis index i = l + N  <->  exp(i (2 l + q) k_L x),   l in [-N, N]
//   H(l, l)     = (2 l + q)^2
//   H(l, l + 1) = (V0 / 4) exp(-i phi)
//   H(l + 1, l) = (V0 / 4) exp(+i phi)
//
// which is the matrix of p^2 / 2m + (V0 / 2) cos(2 k_L x + phi) in E_r units.
// Shifting the lattice is a diagonal similarity:
//   H(phi) = D(phi) H(0) D(phi)^dagger,  D = diag(exp(i l phi)).

/// Band-index / quasimomentum eigenstate. The global phase is fixed so that
/// the largest-magnitude coefficient is real and positive; exact ties (as in
/// odd-parity states at q = 0) resolve to the largest l.
struct BlochState {
  int band = 0;
  double quasimomentum = 0.0;  // units of k_L, in [-1, 1)
  StateVector coefficients;

  int truncation() const { return static_cast<int>(coefficients.size() - 1) / 2; }
  cplx coefficient(int l) const { return coefficients(l + truncation()); }
};

struct BandStructure {
  std::vector<double> q_grid;
  // energies[iq][n], E_r units, ascending in n
  std::vector<std::vector<double>> energies;
  std::vector<std::vector<BlochState>> states;
};

/// Momentum order m carries momentum 2 m hbar k_L.
struct MomentumDistribution {
  std::vector<int> orders;
  std::vector<double> probabilities;
  double residual = 0.0;  // weight outside the reported orders

  double at(int m) const;
  double total() const;
};

HermitianMatrix build_hamiltonian(const LatticeConfig& config, double q, double phi);

// Normalizes and applies the phase convention in place.
void fix_phase(StateVector& v);

BandStructure solve_bands(const LatticeConfig& config, std::span<const double> q_grid, int n_bands);

// Single eigenstate at (band, q) with the lattice at rest.
BlochState bloch_state(const LatticeConfig& config, int band, double q = 0.0);

// Energies E_0..E_{n-1} at quasimomentum q.
std::vector<double> band_energies(const LatticeConfig& config, double q, int n_bands);

MomentumDistribution momentum_composition(const BlochState& state);

// Uniform grid of n points over [-1, 1).
std::vector<double> brillouin_grid(int n);

}  // namespace bbi
