#include "bbi/fewmode.hpp"

#include <cmath>

#include "bbi/errors.hpp"

namespace bbi {

Eigen::MatrixXcd hermitian_propagator(const HermitianMatrix& h, double dt_recoil) {
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed in propagator");
  const Eigen::VectorXd& e = solver.eigenvalues();
  Eigen::VectorXcd phases(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) phases(i) = std::exp(cplx(0.0, -e(i) * dt_recoil));
  const Eigen::MatrixXcd& v = solver.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

FewModePropagator::FewModePropagator(LatticeConfig config, double q, double dt_recoil)
    : config_(std::move(config)), q_(q), dt_(dt_recoil) {
  config_.validate();
}

const Eigen::MatrixXcd& FewModePropagator::step(double phi) {
  auto it = cache_.find(phi);
  if (it != cache_.end()) return it->second;
  auto [pos, inserted] = cache_.emplace(phi, hermitian_propagator(build_hamiltonian(config_, q_, phi), dt_));
  return pos->second;
}

FewModeTrajectory propagate_fewmode(const StateVector& initial, const Waveform& w, const LatticeConfig& config,
                                    double q, int snapshot_every) {
  w.validate();
  if (initial.size() != config.dimension()) throw ValidationError("initial state does not match truncation");
  if (w.sample_period > kMaxShakingStep * (1.0 + 1e-9)) {
    for (double s : w.samples) {
      if (s != 0.0) throw ValidationError("sample period above 1 us during a shaking segment");
    }
  }
  FewModePropagator prop(config, q, config.to_recoil_time(w.sample_period));
  FewModeTrajectory traj;
  StateVector psi = initial;
  if (snapshot_every > 0) {
    traj.times.push_back(0.0);
    traj.snapshots.push_back(psi);
  }
  for (std::size_t k = 0; k < w.samples.size(); ++k) {
    prop.apply(w.samples[k], psi);
    if (snapshot_every > 0 && (k + 1) % static_cast<std::size_t>(snapshot_every) == 0) {
      traj.times.push_back(w.sample_period * static_cast<double>(k + 1));
      traj.snapshots.push_back(psi);
    }
  }
  traj.final_state = std::move(psi);
  return traj;
}

FewModeTrajectory propagate_fewmode(const BlochState& initial, const Waveform& w, const LatticeConfig& config,
                                    int snapshot_every) {
  return propagate_fewmode(initial.coefficients, w, config, initial.quasimomentum, snapshot_every);
}

StateVector hold_fewmode(const StateVector& initial, double seconds, const LatticeConfig& config, double q) {
  const Eigen::MatrixXcd u = hermitian_propagator(build_hamiltonian(config, q, 0.0), config.to_recoil_time(seconds));
  return u * initial;
}

std::vector<double> band_populations(const StateVector& psi, const LatticeConfig& config, int n_bands, double q) {
  const BandStructure bands = solve_bands(config, std::vector<double>{q}, n_bands);
  std::vector<double> pops(n_bands);
  for (int n = 0; n < n_bands; ++n) pops[n] = std::norm(bands.states[0][n].coefficients.dot(psi));
  return pops;
}

}  // namespace bbi
