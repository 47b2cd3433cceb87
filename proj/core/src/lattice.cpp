#include "bbi/lattice.hpp"

#include <cmath>
#include <sstream>

#include "bbi/errors.hpp"

namespace bbi {

double MomentumDistribution::at(int m) const {
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] == m) return probabilities[i];
  }
  return 0.0;
}

double MomentumDistribution::total() const {
  double s = residual;
  for (double p : probabilities) s += p;
  return s;
}

HermitianMatrix build_hamiltonian(const LatticeConfig& config, double q, double phi) {
  config.validate();
  if (!std::isfinite(phi)) throw ValidationError("lattice phase must be finite");
  if (!std::isfinite(q) || std::abs(q) > 1.0) {
    throw ValidationError("quasimomentum must satisfy |q| <= 1");
  }
  const int n = config.truncation;
  const int dim = config.dimension();
  HermitianMatrix h = HermitianMatrix::Zero(dim, dim);
  const cplx coupling = 0.25 * config.depth * std::exp(cplx(0.0, -phi));
  for (int l = -n; l <= n; ++l) {
    const int i = l + n;
    const double k = 2.0 * l + q;
    h(i, i) = k * k;
    if (l < n) {
      h(i, i + 1) = coupling;
      h(i + 1, i) = std::conj(coupling);
    }
  }
  return h;
}

void fix_phase(StateVector& v) {
  const double norm = v.norm();
  if (norm == 0.0) throw NumericalError("cannot phase-fix a zero vector");
  v /= norm;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) best = std::max(best, std::abs(v(i)));
  Eigen::Index pick = 0;
  for (Eigen::Index i = v.size() - 1; i >= 0; --i) {
    if (std::abs(v(i)) >= best * (1.0 - 1e-8)) {
      pick = i;
      break;
    }
  }
  const cplx phase = std::conj(v(pick)) / std::abs(v(pick));
  v *= phase;
  v(pick) = cplx(std::abs(v(pick)), 0.0);
}

namespace {

struct Eigensystem {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};

Eigensystem diagonalize(const LatticeConfig& config, double q) {
  const HermitianMatrix h = build_hamiltonian(config, q, 0.0);
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver did not converge at q = " << q;
    throw NumericalError(msg.str());
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace

BandStructure solve_bands(const LatticeConfig& config, std::span<const double> q_grid, int n_bands) {
  config.validate();
  if (n_bands < 1 || n_bands > 2 * config.truncation) {
    throw ValidationError("n_bands must lie in [1, 2 N_max]");
  }
  BandStructure bands;
  bands.q_grid.assign(q_grid.begin(), q_grid.end());
  bands.energies.reserve(q_grid.size());
  bands.states.reserve(q_grid.size());
  for (double q : q_grid) {
    if (q < -1.0 || q >= 1.0) throw ValidationError("q grid must lie within [-1, 1)");
    const Eigensystem sys = diagonalize(config, q);
    std::vector<double> e(n_bands);
    std::vector<BlochState> s(n_bands);
    for (int n = 0; n < n_bands; ++n) {
      e[n] = sys.values(n);
      StateVector v = sys.vectors.col(n);
      fix_phase(v);
      s[n] = BlochState{n, q, std::move(v)};
    }
    bands.energies.push_back(std::move(e));
    bands.states.push_back(std::move(s));
  }
  return bands;
}

BlochState bloch_state(const LatticeConfig& config, int band, double q) {
  config.validate();
  if (band < 0 || band >= config.dimension()) throw ValidationError("band index out of range");
  const Eigensystem sys = diagonalize(config, q);
  StateVector v = sys.vectors.col(band);
  fix_phase(v);
  return BlochState{band, q, std::move(v)};
}

std::vector<double> band_energies(const LatticeConfig& config, double q, int n_bands) {
  const Eigensystem sys = diagonalize(config, q);
  std::vector<double> e(n_bands);
  for (int n = 0; n < n_bands; ++n) e[n] = sys.values(n);
  return e;
}

MomentumDistribution momentum_composition(const BlochState& state) {
  const int n = state.truncation();
  MomentumDistribution dist;
  dist.orders.reserve(2 * n + 1);
  dist.probabilities.reserve(2 * n + 1);
  for (int l = -n; l <= n; ++l) {
    dist.orders.push_back(l);
    dist.probabilities.push_back(std::norm(state.coefficient(l)));
  }
  return dist;
}

std::vector<double> brillouin_grid(int n) {
  if (n < 1) throw ValidationError("q grid needs at least one point");
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = -1.0 + 2.0 * i / n;
  return q;
}

}  // namespace bbi
