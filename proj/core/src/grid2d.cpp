#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bbi/errors.hpp"
#include "bbi/grid.hpp"
#include "fft.hpp"
#include "grid_internal.hpp"

namespace bbi {

namespace {

constexpr double kNormGuard = 1e-6;
constexpr double kMaxRotationAngle = 0.1;  // rad
constexpr double kSliver = 1e-15;          // s

struct Run {
  double start, end, phi;
};

// Constant-phase runs of a waveform, padded with its last value up to `total`.
std::vector<Run> runs_of(const Waveform& w, double total) {
  std::vector<Run> runs;
  const std::size_t n = w.samples.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && w.samples[j] == w.samples[i]) ++j;
    runs.push_back({static_cast<double>(i) * w.sample_period, static_cast<double>(j) * w.sample_period, w.samples[i]});
    i = j;
  }
  const double end = runs.empty() ? 0.0 : runs.back().end;
  if (total > end + kSliver) {
    const double phi = n ? w.samples.back() : 0.0;
    if (!runs.empty() && runs.back().phi == phi) {
      runs.back().end = total;
    } else {
      runs.push_back({end, total, phi});
    }
  }
  return runs;
}

/// Exact lattice propagators for one axis. In momentum space the lattice
/// only couples k to k +- 2 k_L, so the grid splits into `sites` independent
/// chains of `points_per_site` modes each.
class ChainPropagator {
 public:
  ChainPropagator(const GridAxis& axis, double depth, double recoil_time) : depth_(depth), t_r_(recoil_time) {
    const int n = axis.points();
    chains_ = axis.sites;
    std::vector<std::vector<std::pair<double, int>>> members(chains_);
    for (int j = 0; j < n; ++j) {
      const int s = j < (n + 1) / 2 ? j : j - n;
      const int r = ((s % chains_) + chains_) % chains_;
      members[r].push_back({axis.wavenumber(j), j});
    }
    m_ = static_cast<int>(members[0].size());
    index_.resize(chains_);
    k_.resize(chains_);
    for (int c = 0; c < chains_; ++c) {
      auto& mem = members[c];
      if (static_cast<int>(mem.size()) != m_) throw NumericalError("uneven momentum chains");
      std::sort(mem.begin(), mem.end());
      for (const auto& [k, j] : mem) {
        index_[c].push_back(j);
        k_[c].push_back(k);
      }
    }
  }

  int chains() const { return chains_; }
  int modes() const { return m_; }
  const std::vector<int>& index(int c) const { return index_[c]; }

  // Product over the runs overlapping [a, b) of exp(-i H(phi) tau).
  const std::vector<Eigen::MatrixXcd>& interval(const std::vector<Run>& runs, double a, double b) {
    std::vector<std::pair<double, double>> pieces;
    for (const auto& r : runs) {
      const double lo = std::max(a, r.start);
      const double hi = std::min(b, r.end);
      if (hi - lo > kSliver) pieces.push_back({r.phi, hi - lo});
    }
    if (pieces.size() == 1) {
      const auto key = pieces.front();
      auto it = single_.find(key);
      if (it != single_.end()) return it->second;
      if (single_.size() > 64) single_.clear();
      return single_.emplace(key, product(pieces)).first->second;
    }
    scratch_ = product(pieces);
    return scratch_;
  }

 private:
  struct Eig {
    std::vector<Eigen::MatrixXcd> vectors;
    std::vector<Eigen::VectorXd> values;
  };

  const Eig& eig(double phi) {
    auto it = eig_.find(phi);
    if (it != eig_.end()) return it->second;
    if (eig_.size() > 4096) eig_.clear();
    Eig e;
    const cplx up = 0.25 * depth_ * std::polar(1.0, -phi);
    for (int c = 0; c < chains_; ++c) {
      Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m_, m_);
      for (int i = 0; i < m_; ++i) h(i, i) = k_[c][i] * k_[c][i];
      for (int i = 0; i + 1 < m_; ++i) {
        h(i, i + 1) = up;
        h(i + 1, i) = std::conj(up);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
      if (solver.info() != Eigen::Success) throw NumericalError("chain eigensolver failed");
      e.vectors.push_back(solver.eigenvectors());
      e.values.push_back(solver.eigenvalues());
    }
    return eig_.emplace(phi, std::move(e)).first->second;
  }

  std::vector<Eigen::MatrixXcd> product(const std::vector<std::pair<double, double>>& pieces) {
    std::vector<Eigen::MatrixXcd> out(chains_, Eigen::MatrixXcd::Identity(m_, m_));
    for (const auto& [phi, tau] : pieces) {
      const Eig& e = eig(phi);
      const double t = tau / t_r_;
      for (int c = 0; c < chains_; ++c) {
        Eigen::VectorXcd ph(m_);
        for (int i = 0; i < m_; ++i) ph(i) = std::polar(1.0, -e.values[c](i) * t);
        out[c] = (e.vectors[c] * ph.asDiagonal() * e.vectors[c].adjoint()) * out[c];
      }
    }
    return out;
  }

  double depth_;
  double t_r_;
  int chains_ = 0;
  int m_ = 0;
  std::vector<std::vector<int>> index_;
  std::vector<std::vector<double>> k_;
  std::map<double, Eig> eig_;
  std::map<std::pair<double, double>, std::vector<Eigen::MatrixXcd>> single_;
  std::vector<Eigen::MatrixXcd> scratch_;
};

// Chain matrices along x (contiguous) for every row.
void apply_x(std::vector<cplx>& data, int nx, int nz, const ChainPropagator& chain,
             const std::vector<Eigen::MatrixXcd>& u) {
  const int m = chain.modes();
  std::vector<cplx> in(m);
  for (int iz = 0; iz < nz; ++iz) {
    cplx* row = data.data() + static_cast<std::size_t>(iz) * nx;
    for (int c = 0; c < chain.chains(); ++c) {
      const auto& idx = chain.index(c);
      for (int i = 0; i < m; ++i) in[i] = row[idx[i]];
      const Eigen::MatrixXcd& uc = u[c];
      for (int i = 0; i < m; ++i) {
        cplx s = 0.0;
        for (int j = 0; j < m; ++j) s += uc(i, j) * in[j];
        row[idx[i]] = s;
      }
    }
  }
}

// Chain matrices along z: whole rows combine, vectorized over x.
void apply_z(std::vector<cplx>& data, int nx, const ChainPropagator& chain, const std::vector<Eigen::MatrixXcd>& u,
             std::vector<cplx>& tmp) {
  const int m = chain.modes();
  tmp.resize(static_cast<std::size_t>(m) * nx);
  for (int c = 0; c < chain.chains(); ++c) {
    const auto& idx = chain.index(c);
    const Eigen::MatrixXcd& uc = u[c];
    std::fill(tmp.begin(), tmp.end(), cplx(0.0));
    for (int i = 0; i < m; ++i) {
      cplx* out = tmp.data() + static_cast<std::size_t>(i) * nx;
      for (int j = 0; j < m; ++j) {
        const cplx f = uc(i, j);
        const cplx* in = data.data() + static_cast<std::size_t>(idx[j]) * nx;
        for (int x = 0; x < nx; ++x) out[x] += f * in[x];
      }
    }
    for (int i = 0; i < m; ++i) {
      std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(i) * nx, tmp.begin() + static_cast<std::ptrdiff_t>(i + 1) * nx,
                data.begin() + static_cast<std::ptrdiff_t>(idx[i]) * nx);
    }
  }
}

}  // namespace

GridTrajectory evolve_grid_2d(const GridWavefunction& psi0, const Waveform& wx, const Waveform& wz,
                              const SignalSpec& rotation, double extra_hold, const EvolveOptions& options) {
  psi0.validate();
  if (psi0.dims() != 2) throw ValidationError("evolve_grid_2d needs a 2D wavefunction");
  rotation.validate();
  if (rotation.kind != SignalSpec::Kind::Rotation && rotation.kind != SignalSpec::Kind::None) {
    throw ValidationError("the 2D solver only takes rotation signals");
  }
  if (extra_hold < 0.0) throw ValidationError("extra hold must be non-negative");
  if (!(options.rotation_step > 0.0)) throw ValidationError("rotation step must be positive");
  if (!wx.samples.empty()) wx.validate();
  if (!wz.samples.empty()) wz.validate();

  const LatticeConfig& cfg = psi0.config;
  const double total = std::max(wx.duration(), wz.duration()) + extra_hold;
  const double omega = rotation.kind == SignalSpec::Kind::Rotation ? rotation.magnitude : 0.0;
  if (std::abs(omega) * total > kMaxRotationAngle) {
    std::ostringstream os;
    os << "rotation angle " << std::abs(omega) * total << " rad exceeds the small-rotation limit of "
       << kMaxRotationAngle << " rad";
    throw ValidationError(os.str());
  }
  const double width = std::max(rms_width(psi0, 0), rms_width(psi0, 1));
  if (options.reach.empty()) {
    const double excursion =
        options.max_excursion >= 0.0 ? options.max_excursion : 4.0 * cfg.recoil_velocity() * total;
    check_wrap_hazard(psi0, reach_around(psi0, excursion), width);
  } else {
    check_wrap_hazard(psi0, options.reach, width);
  }

  const GridAxis& ax = psi0.axes[0];
  const GridAxis& az = psi0.axes[1];
  const int nx = ax.points();
  const int nz = az.points();
  const double t_r = cfg.recoil_time();
  ChainPropagator chain_x(ax, cfg.depth, t_r);
  ChainPropagator chain_z(az, cfg.depth, t_r);
  const auto runs_x = runs_of(wx, total);
  const auto runs_z = runs_of(wz, total);

  GridTrajectory traj;
  traj.final_state = psi0;
  std::vector<cplx>& data = traj.final_state.psi;
  detail::FftLines fft_x(data, nx, nz, 1, nx);
  detail::FftLines fft_z(data, nz, nx, nx, 1);
  std::vector<cplx> tmp;

  const bool rotating = omega != 0.0;
  const double omega_r = omega * t_r;  // recoil units
  // exp(-i A tau), A = Omega z k_x, in (k_x, z); exp(-i B tau), B = -Omega x k_z, in (x, k_z)
  auto rotation_a = [&](double tau_s) {
    std::vector<cplx> f(data.size());
    const double c = -omega_r * (tau_s / t_r);
    for (int iz = 0; iz < nz; ++iz) {
      const double z = az.position(iz);
      for (int jx = 0; jx < nx; ++jx) f[static_cast<std::size_t>(iz) * nx + jx] = std::polar(1.0, c * z * ax.wavenumber(jx));
    }
    return f;
  };
  auto rotation_b = [&](double tau_s) {
    std::vector<cplx> f(data.size());
    const double c = omega_r * (tau_s / t_r);
    for (int jz = 0; jz < nz; ++jz) {
      const double k = az.wavenumber(jz);
      for (int ix = 0; ix < nx; ++ix) f[static_cast<std::size_t>(jz) * nx + ix] = std::polar(1.0, c * ax.position(ix) * k);
    }
    return f;
  };
  auto multiply = [&](const std::vector<cplx>& f) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= f[i];
  };

  // Representation bookkeeping for snapshots: which axes are in momentum space.
  bool kx = false;
  bool kz = false;
  const double t0 = psi0.time;
  double elapsed = 0.0;
  double next_snap = 0.0;
  auto snapshot = [&] {
    GridWavefunction s = traj.final_state;
    s.psi = data;
    detail::FftLines bx(s.psi, nx, nz, 1, nx);
    detail::FftLines bz(s.psi, nz, nx, nx, 1);
    if (kx) bx.backward(s.psi);
    if (kz) bz.backward(s.psi);
    s.time = t0 + elapsed;
    GridSnapshot snap;
    snap.time = s.time;
    if (options.snapshot_density) {
      snap.density = density_snapshot(s, 0);
      snap.density_z = density_snapshot(s, 1);
    }
    if (options.snapshot_orders) {
      snap.orders = measure_momentum_orders(s, 0);
      snap.orders_z = measure_momentum_orders(s, 1);
    }
    traj.snapshots.push_back(std::move(snap));
  };

  if (options.snapshot_every > 0.0) {
    snapshot();
    next_snap = options.snapshot_every;
  }

  const double dt = options.rotation_step;
  const long n_steps = std::max(1L, static_cast<long>(std::ceil(total / dt - 1e-9)));
  const double h = total / static_cast<double>(n_steps);
  if (rotating) {
    const auto a_half = rotation_a(0.5 * h);
    const auto b_half = rotation_b(0.5 * h);
    fft_x.forward(data);
    kx = true;
    for (long s = 0; s < n_steps; ++s) {
      const double ta = static_cast<double>(s) * h;
      const double tm = ta + 0.5 * h;
      const double tb = ta + h;
      // A/2 X/2 [B/2 Z B/2] X/2 A/2
      multiply(a_half);
      apply_x(data, nx, nz, chain_x, chain_x.interval(runs_x, ta, tm));
      fft_x.backward(data);
      fft_z.forward(data);
      kx = false;
      kz = true;
      multiply(b_half);
      apply_z(data, nx, chain_z, chain_z.interval(runs_z, ta, tb), tmp);
      multiply(b_half);
      fft_z.backward(data);
      fft_x.forward(data);
      kx = true;
      kz = false;
      apply_x(data, nx, nz, chain_x, chain_x.interval(runs_x, tm, tb));
      multiply(a_half);
      elapsed = tb;
      if (options.snapshot_every > 0.0 && elapsed >= next_snap - 1e-12) {
        snapshot();
        while (next_snap <= elapsed + 1e-12) next_snap += options.snapshot_every;
      }
    }
    fft_x.backward(data);
  } else {
    // Without rotation the axes decouple and each step is exact.
    fft_x.forward(data);
    fft_z.forward(data);
    kx = kz = true;
    for (long s = 0; s < n_steps; ++s) {
      const double ta = static_cast<double>(s) * h;
      const double tb = ta + h;
      apply_x(data, nx, nz, chain_x, chain_x.interval(runs_x, ta, tb));
      apply_z(data, nx, chain_z, chain_z.interval(runs_z, ta, tb), tmp);
      elapsed = tb;
      if (options.snapshot_every > 0.0 && elapsed >= next_snap - 1e-12) {
        snapshot();
        while (next_snap <= elapsed + 1e-12) next_snap += options.snapshot_every;
      }
    }
    fft_z.backward(data);
    fft_x.backward(data);
  }
  traj.final_state.time = t0 + total;
  traj.norm_drift = std::abs(psi0.norm() - traj.final_state.norm());
  if (traj.norm_drift > kNormGuard) {
    std::ostringstream os;
    os << "grid norm drifted by " << traj.norm_drift;
    throw NumericalError(os.str());
  }
  return traj;
}

}  // namespace bbi
