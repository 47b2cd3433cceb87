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

double default_excursion(const GridWavefunction& psi, const SignalSpec& signal, double duration) {
  double e = 4.0 * psi.config.recoil_velocity() * duration;
  if (signal.kind == SignalSpec::Kind::Acceleration) e += 0.5 * std::abs(signal.magnitude) * duration * duration;
  return e;
}

}  // namespace

GridTrajectory evolve_grid_1d(const GridWavefunction& psi0, const Waveform& w, const SignalSpec& signal,
                              double extra_hold, const EvolveOptions& options) {
  psi0.validate();
  if (psi0.dims() != 1) throw ValidationError("evolve_grid_1d needs a 1D wavefunction");
  signal.validate();
  if (signal.kind == SignalSpec::Kind::Rotation) throw ValidationError("rotation signals need the 2D solver");
  if (extra_hold < 0.0) throw ValidationError("extra hold must be non-negative");
  if (!w.samples.empty()) w.validate();

  const LatticeConfig& cfg = psi0.config;
  const auto steps = detail::phase_schedule(w, extra_hold, options.hold_step, options.hold_run_min);
  const double duration = detail::schedule_duration(steps);
  if (options.reach.empty()) {
    const double excursion =
        options.max_excursion >= 0.0 ? options.max_excursion : default_excursion(psi0, signal, duration);
    check_wrap_hazard(psi0, reach_around(psi0, excursion), rms_width(psi0));
  } else {
    check_wrap_hazard(psi0, options.reach, rms_width(psi0));
  }

  const GridAxis& axis = psi0.axes[0];
  const int n = axis.points();
  std::vector<double> k2(n);
  std::vector<double> x(n);
  std::vector<double> v_signal(n);
  for (int i = 0; i < n; ++i) {
    const double k = axis.wavenumber(i);
    k2[i] = k * k;
    x[i] = axis.position(i);
    v_signal[i] = signal_potential(cfg, signal, x[i]);
  }
  const double half_depth = 0.5 * cfg.depth;

  GridTrajectory traj;
  traj.final_state = psi0;
  std::vector<cplx>& data = traj.final_state.psi;
  detail::FftLines fft(data, n, 1, 1, n);

  std::map<double, std::vector<cplx>> kinetic_cache;  // dt (recoil) -> exp(-i k^2 dt / 2)
  auto kinetic = [&](double dt) -> const std::vector<cplx>& {
    auto it = kinetic_cache.find(dt);
    if (it != kinetic_cache.end()) return it->second;
    std::vector<cplx> f(n);
    for (int i = 0; i < n; ++i) f[i] = std::polar(1.0, -0.5 * k2[i] * dt);
    return kinetic_cache.emplace(dt, std::move(f)).first->second;
  };
  std::vector<cplx> pot(n);
  double pot_phi = std::nan("");
  double pot_dt = std::nan("");
  auto potential = [&](double phi, double dt) -> const std::vector<cplx>& {
    if (phi != pot_phi || dt != pot_dt) {
      for (int i = 0; i < n; ++i) pot[i] = std::polar(1.0, -dt * (half_depth * std::cos(2.0 * x[i] + phi) + v_signal[i]));
      pot_phi = phi;
      pot_dt = dt;
    }
    return pot;
  };

  const double t0 = psi0.time;
  double elapsed = 0.0;
  double next_snap = 0.0;
  std::vector<cplx> scratch;
  auto snapshot = [&] {
    GridSnapshot s;
    s.time = t0 + elapsed;
    if (options.snapshot_orders) {
      std::vector<double> spec(n);
      for (int i = 0; i < n; ++i) spec[i] = std::norm(data[i]);
      s.orders = detail::orders_from_spectrum(spec, axis, 5);
    }
    if (options.snapshot_density) {
      scratch = data;
      fft.backward(scratch);
      GridWavefunction tmp;
      tmp.config = cfg;
      tmp.axes = psi0.axes;
      tmp.psi = std::move(scratch);
      tmp.time = s.time;
      s.density = density_snapshot(tmp, 0);
      scratch = std::move(tmp.psi);
    }
    traj.snapshots.push_back(std::move(s));
  };

  fft.forward(data);  // the loop keeps the state in momentum space
  if (options.snapshot_every > 0.0) {
    snapshot();
    next_snap = options.snapshot_every;
  }
  for (const auto& st : steps) {
    const double dt = cfg.to_recoil_time(st.dt);
    const auto& kin = kinetic(dt);
    for (long c = 0; c < st.count; ++c) {
      for (int i = 0; i < n; ++i) data[i] *= kin[i];
      fft.backward(data);
      const auto& p = potential(st.phi, dt);
      for (int i = 0; i < n; ++i) data[i] *= p[i];
      fft.forward(data);
      for (int i = 0; i < n; ++i) data[i] *= kin[i];
      elapsed += st.dt;
      if (options.snapshot_every > 0.0 && elapsed >= next_snap - 1e-12) {
        snapshot();
        while (next_snap <= elapsed + 1e-12) next_snap += options.snapshot_every;
      }
    }
  }
  fft.backward(data);
  traj.final_state.time = t0 + elapsed;
  traj.norm_drift = std::abs(psi0.norm() - traj.final_state.norm());
  if (traj.norm_drift > kNormGuard) {
    std::ostringstream os;
    os << "grid norm drifted by " << traj.norm_drift;
    throw NumericalError(os.str());
  }
  return traj;
}

}  // namespace bbi
