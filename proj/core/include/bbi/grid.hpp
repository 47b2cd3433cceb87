#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bbi/lattice.hpp"
#include "bbi/waveform.hpp"

namespace bbi {

/// One spatial axis of a periodic grid. A lattice site is lambda / 2 wide,
/// i.e. pi in recoil length units, so the grid spacing is pi / points_per_site.
struct GridAxis {
  int sites = 1024;
  int points_per_site = 8;

  int points() const { return sites * points_per_site; }
  double spacing() const;  // recoil length units
  double length() const;   // recoil length units
  // Position of point i, centered so that index points() / 2 sits at 0.
  double position(int i) const;
  // Signed wavenumber (units of k_L) of FFT index j.
  double wavenumber(int j) const;
  void validate() const;
};

/// Inertial signal applied during grid propagation.
struct SignalSpec {
  enum class Kind { None, Acceleration, Gradient, Rotation };

  Kind kind = Kind::None;
  double magnitude = 0.0;  // m/s^2, 1/s^2 or rad/s

  void validate() const;
  std::string to_string() const;  // "accel:0.01"
  // Parses "none", "accel:<a>", "grad:<g'>", "rot:<Omega>".
  static SignalSpec parse(const std::string& text);
  static SignalSpec none() { return {}; }
  static SignalSpec acceleration(double a) { return {Kind::Acceleration, a}; }
  static SignalSpec gradient(double g) { return {Kind::Gradient, g}; }
  static SignalSpec rotation(double omega) { return {Kind::Rotation, omega}; }
};

std::string signal_kind_name(SignalSpec::Kind kind);

/// Complex amplitudes on a uniform 1D or 2D grid. In 2D the storage is
/// row-major with x contiguous: index = iz * nx + ix.
struct GridWavefunction {
  LatticeConfig config;
  std::vector<GridAxis> axes;  // {x} or {x, z}
  std::vector<cplx> psi;
  double time = 0.0;  // s

  int dims() const { return static_cast<int>(axes.size()); }
  std::size_t size() const { return psi.size(); }
  double cell() const;  // grid cell measure, recoil units
  double norm() const;  // L2 norm
  void normalize();
  void validate() const;
};

/// Marginal position density along one axis.
struct DensityProfile {
  std::vector<double> positions;  // m
  std::vector<double> density;    // 1/m, integrates to 1
  double time = 0.0;              // s

  double centroid(double lo = -1e300, double hi = 1e300) const;  // m, over [lo, hi)
  double integral(double lo = -1e300, double hi = 1e300) const;
  // Position of the density maximum inside [lo, hi) after smoothing over
  // `smooth` (m), refined by the centroid within +-half_window of it.
  double peak_centroid(double lo, double hi, double half_window, double smooth = 2e-6) const;
};

/// Ground- (or stated-) band Bloch function at q = 0 under a Gaussian
/// envelope of RMS width n_sites * (lambda / 2) / 2, centered at `center` (m).
GridWavefunction prepare_wavepacket(const LatticeConfig& config, int n_sites, int band, const GridAxis& axis = {},
                                    double center = 0.0);

// Product of two 1D packets on an (x, z) grid.
GridWavefunction prepare_wavepacket_2d(const LatticeConfig& config, int n_sites, int band_x, int band_z,
                                       const GridAxis& axis_x, const GridAxis& axis_z, double center_x = 0.0,
                                       double center_z = 0.0);

// <H> for a static lattice at phase phi plus the signal potential, in E_r.
double energy_expectation(const GridWavefunction& psi, double phi = 0.0, const SignalSpec& signal = {});

// Signal potential V_I at position x (recoil length) in E_r, 1D signals only.
double signal_potential(const LatticeConfig& config, const SignalSpec& signal, double x_recoil);

/// Snapshot recorded during propagation.
struct GridSnapshot {
  double time = 0.0;  // s
  DensityProfile density;              // empty unless requested (axis x)
  DensityProfile density_z;            // 2D runs only
  MomentumDistribution orders;         // axis x
  MomentumDistribution orders_z;       // 2D runs only
};

/// Range [lo, hi] (m) the cloud centroid may visit along one axis.
struct AxisReach {
  double lo = 0.0;
  double hi = 0.0;
};

struct EvolveOptions {
  double hold_step = 0.5e-6;      // s, step for constant-phase stretches
  double hold_run_min = 2e-6;     // s, constant stretches at least this long are holds
  double snapshot_every = 0.0;    // s, 0 = no snapshots
  bool snapshot_density = true;
  bool snapshot_orders = true;
  // Largest expected |displacement| from the starting centroid (m). Negative
  // means "derive from 4 v_r times the run duration".
  double max_excursion = -1.0;
  // Explicit per-axis centroid ranges; when present they replace max_excursion.
  std::vector<AxisReach> reach;
  double rotation_step = 5e-6;    // s, 2D only
};

struct GridTrajectory {
  GridWavefunction final_state;
  std::vector<GridSnapshot> snapshots;
  double norm_drift = 0.0;  // |1 - final norm|
};

// Throws NumericalError if the farthest centroid position plus 4 envelope
// widths exceeds half the domain on any axis. `width` is the RMS width (m).
void check_wrap_hazard(const GridWavefunction& psi, const std::vector<AxisReach>& reach, double width);
// Reach of +-excursion around the current centroid on every axis.
std::vector<AxisReach> reach_around(const GridWavefunction& psi, double excursion);

// RMS width (m) of the density along an axis.
double rms_width(const GridWavefunction& psi, int axis = 0);

/// Split-step spectral propagation of a 1D packet under the shaken lattice
/// and a 1D signal. Samples of the waveform are stepped one by one; constant
/// stretches at least hold_run_min long (and the trailing extra_hold) use
/// hold_step. The lattice phase during extra_hold is the last sample.
GridTrajectory evolve_grid_1d(const GridWavefunction& psi, const Waveform& w, const SignalSpec& signal,
                              double extra_hold = 0.0, const EvolveOptions& options = {});

/// 2D propagation on (x, z) with independent lattice phases per axis and
/// the rotation term -Omega (x p_z - z p_x). The lattice part of each axis is
/// propagated exactly chain by chain in momentum space; rotation sub-terms
/// are applied in the mixed (k_x, z) and (x, k_z) representations with
/// symmetric splitting every rotation_step.
GridTrajectory evolve_grid_2d(const GridWavefunction& psi, const Waveform& wx, const Waveform& wz,
                              const SignalSpec& rotation, double extra_hold = 0.0, const EvolveOptions& options = {});

/// Momentum-order populations along one axis (marginal over the other):
/// orders m in [-max_order, max_order], bins [(2m - 1) k_L, (2m + 1) k_L).
MomentumDistribution measure_momentum_orders(const GridWavefunction& psi, int axis = 0, int max_order = 5);

DensityProfile density_snapshot(const GridWavefunction& psi, int axis = 0);

/// Dominant nonzero frequency (Hz) of a uniformly sampled signal, from a
/// Hann-windowed DFT with parabolic peak interpolation. Returns 0 when no
/// bin rises above the noise floor.
double vibrational_spectrum(const std::vector<double>& times, const std::vector<double>& values,
                            double noise_floor = 1e-6);

// P(order)(t) extracted from snapshots along an axis.
std::vector<double> order_series(const std::vector<GridSnapshot>& snaps, int order, int axis = 0);

}  // namespace bbi
