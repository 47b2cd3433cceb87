#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbi/circuit.hpp"
#include "bbi/grid.hpp"

namespace bbi {

enum class SensorKind { Accelerometer, AccelerometerHold, Gradiometer, GradiometerHold, Gyroscope };

std::string sensor_kind_name(SensorKind kind);
SensorKind parse_sensor_kind(const std::string& name);
std::vector<SensorKind> all_sensor_kinds();
// Signal a sensor responds to: acceleration, gradient or rotation.
SignalSpec::Kind sensor_signal(SensorKind kind);

/// Timing of a sensing circuit. All times are spacings between gate
/// centers. The accelerometers use T1 as their T.
struct SensorDesign {
  SensorKind kind = SensorKind::Accelerometer;
  double T1 = 3e-3;    // s
  double T2 = 3e-3;    // s, gradiometer and gyroscope
  double hold = 0.0;   // s, T_H of the hold variants
  int bs_variant = 1;
  int mirror_variant = 1;
  int cbbs_variant = 1;
  int sh_variant = 1;
  int echo_variant = 2;
  int asym_variant = 1;

  void validate() const;
};

/// Closed-form phase difference (rad) for a signal of the design's kind:
///   accelerometer        2 a p T^2 / hbar
///   with hold            2 a p T (T + T_H) / hbar
///   gradiometer          8 g' T1 T2^2 p^2 / (hbar m)
///   with hold            8 g' T1 T2 (T2 + T_H) p^2 / (hbar m)
///   gyroscope            8 Omega p^2 T1 T2 / (m hbar)
/// with p = 4 hbar k_L.
double analytic_phase(const SensorDesign& design, double signal, const LatticeConfig& config);

/// Phase from the classical action along the plan's piecewise-ballistic
/// arms: -(1/hbar) sum_arms sign(arm) S(arm), where sign is the product of
/// +1 per "u" and -1 per "l" in the arm label. For two arms that is
/// (S_l - S_u) / hbar; for four, -(S_uu - S_ul - S_lu + S_ll) / hbar.
/// Throws ValidationError for open plans.
double path_action(const SegmentPlan& plan, const SignalSpec& signal, const LatticeConfig& config);

/// Builds the sensing circuit from a library, placing gate centers at the
/// design spacings (waits absorb the gate half-durations). Echoes sit at the
/// midpoint of each hold. Throws ValidationError when a spacing is shorter
/// than the gates around it.
Circuit sensor_circuit(const SensorDesign& design, const GateLibrary& library, const LatticeConfig& config);

// Signal span (centered on zero) covering `fringes` fringes of analytic_phase.
double fringe_span(const SensorDesign& design, double fringes, const LatticeConfig& config);

// ---------------------------------------------------------------------------
// Scans

struct ScanOptions {
  GridAxis axis_x{1024, 8};
  GridAxis axis_z{160, 7};  // 2D runs only
  int envelope_sites = 20;  // initial RMS width is envelope_sites / 2 lattice sites
  // m, initial z position in 2D runs; unset centers the plan's z range on
  // the grid (0 without a plan)
  std::optional<double> center_z;
  double extra_hold = 0.0;  // s, free hold appended before readout
  EvolveOptions evolve;
  int workers = 0;  // 0 = BBI_WORKERS / hardware
};

inline constexpr int kScanMaxOrder = 3;

struct ScanResult {
  std::string parameter;  // "a", "g'" or "Omega"
  std::string unit;       // "m/s^2", "1/s^2", "rad/s"
  std::vector<double> beta;
  std::vector<int> orders;               // -3..3
  std::vector<std::vector<double>> probabilities;  // [point][order]
  std::vector<double> residual;
  std::vector<bool> flagged;  // wrap hazard or numerical failure
  std::vector<std::string> flags;
  std::string circuit_hash;
  std::string settings;  // grid description
  std::string provenance;  // tool version, seed and config hash
  double seconds = 0.0;  // wall time

  std::size_t size() const { return beta.size(); }
  // P(order) column over the scan.
  std::vector<double> column(int order) const;
  void validate() const;
  std::string to_json() const;
  static ScanResult from_json(const std::string& text);
};

std::vector<double> linspace(double lo, double hi, int n);

/// Propagates the stitched circuit on the grid for every beta and measures
/// momentum orders along x. Rotation signals run the 2D solver. The plan,
/// when given, sets the wrap-hazard reach on each axis.
ScanResult run_scan(const StitchedWaveform& circuit, const SegmentPlan* plan, SignalSpec::Kind kind,
                    const std::vector<double>& beta, const LatticeConfig& config, const ScanOptions& options = {});

struct FringeFit {
  double omega = 0.0;  // rad per unit beta
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double rms = 0.0;  // residual RMS
};

/// Least-squares fit of y = offset + amplitude cos(omega beta + phase):
/// a dense omega grid up to the grid Nyquist limit, then golden-section
/// refinement around the best grid value.
FringeFit fit_fringe(const std::vector<double>& beta, const std::vector<double>& y, double omega_min = 0.0,
                     double omega_max = 0.0);

// ---------------------------------------------------------------------------
// Fisher information and sensitivity

inline constexpr double kProbabilityFloor = 1e-12;

/// I(beta) = sum_m (dP/dbeta)^2 / P, central differences inside the grid and
/// one-sided at the edges. Terms with P below 1e-12 are dropped. Flagged
/// points are treated as missing (NaN).
std::vector<double> cfi(const ScanResult& scan, bool include_residual = false);
std::vector<double> cfi(const std::vector<double>& beta, const std::vector<std::vector<double>>& probabilities);

struct SensitivityRow {
  double shots = 0.0;
  double dbeta_min = 0.0;  // from the largest I
  double dbeta_max = 0.0;  // from the smallest I, +inf when it is 0
};

struct SensitivityReport {
  std::vector<double> information;
  double atoms = 1000.0;  // N
  double info_min = 0.0;
  double info_max = 0.0;
  bool unbounded = false;  // I_min == 0
  std::vector<SensitivityRow> rows;
};

// dbeta = 1 / sqrt(s N I) at each shot count.
SensitivityReport sensitivity(const std::vector<double>& information, double atoms, const std::vector<double>& shots);

// Logarithmically spaced shot counts from lo to hi inclusive.
std::vector<double> shot_grid(double lo, double hi, int per_decade = 10);

}  // namespace bbi
