#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bbi/lattice.hpp"
#include "bbi/waveform.hpp"

namespace bbi {

enum class GateKind { Beamsplitter, AsymBeamsplitter, Mirror, CbBeamsplitter, SplitHold, Echo, Identity };

std::string_view gate_kind_name(GateKind kind);
GateKind parse_gate_kind(std::string_view name);  // accepts long names and short aliases ("bs", "sh", ...)
std::vector<GateKind> designed_gate_kinds();  // the six designed kinds

/// Target transformation expressed on Bloch states at q = 0.
///
/// Column j of `map` is the desired image of |input_bands[j]>, written in the
/// basis |output_bands[i]>. A state target is the d = 1 case.
struct GateTarget {
  enum class Form { State, Operator };

  GateKind kind = GateKind::Beamsplitter;
  int variant = 1;
  Form form = Form::State;
  std::vector<int> input_bands;
  std::vector<int> output_bands;
  Eigen::MatrixXcd map;

  int dimension() const { return static_cast<int>(input_bands.size()); }
  std::string name() const;
  void validate() const;
};

GateTarget gate_target(GateKind kind, int variant);

/// Vectors a_j (inputs) and t_j (desired outputs) in the plane-wave basis.
struct TargetBasis {
  std::vector<StateVector> inputs;
  std::vector<StateVector> targets;
};
TargetBasis materialize(const GateTarget& target, const LatticeConfig& config);

double state_fidelity(const StateVector& final_state, const StateVector& target);
// F = |tr(T^dagger M)|^2 / d^2
double operator_fidelity(const Eigen::MatrixXcd& achieved, const Eigen::MatrixXcd& target, int d);

struct SynthesisOptions {
  double duration = 150e-6;      // s
  double control_bin = 1e-6;     // s
  double amplitude_bound = constants::pi;
  int restarts = 16;
  int max_iterations = 400;
  double fidelity_goal = 0.99;
  std::uint64_t seed = 0;
  double smoothness_weight = 2e-5;
  int truncation = kSynthesisTruncation;
  int workers = 0;  // 0 = from BBI_WORKERS / hardware

  int bins() const;
  void validate() const;
};

SynthesisOptions default_synthesis_options(GateKind kind);

struct FidelityReport {
  double fidelity = 0.0;
  std::vector<double> channel_overlaps;  // |<t_j|U|a_j>|^2
  std::vector<double> band_populations;  // summed over inputs / d, bands 0..5
  double leakage = 0.0;                   // population outside the output subspace
  double gradient_norm = 0.0;
  int iterations = 0;
  int restart = -1;
  double penalty = 0.0;
  double verification_fidelity = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;  // verification differs from synthesis by more than 0.01
  std::vector<double> restart_fidelities;
};

/// Fidelity and its exact gradient with respect to the per-bin phases, for
/// a piecewise-constant control at q = 0. Used by the optimizer and exposed
/// for gradient checks.
class ControlProblem {
 public:
  ControlProblem(const GateTarget& target, const LatticeConfig& config, double bin_seconds);

  // Returns F; fills `grad` (same size as phases) when non-null.
  double fidelity(const std::vector<double>& phases, std::vector<double>* grad = nullptr) const;

  // Per-channel |<t_j|U|a_j>|^2 and band populations for reporting.
  void analyze(const std::vector<double>& phases, FidelityReport& report) const;

  int dimension() const { return dim_; }

 private:
  GateTarget target_;
  LatticeConfig config_;
  int dim_;
  TargetBasis basis_;
  Eigen::MatrixXcd step0_;  // exp(-i H(0) dt)
  Eigen::VectorXd orders_;  // l for each basis index

  void apply_step(double phi, StateVector& v) const;
  void apply_step_adjoint(double phi, StateVector& v) const;
};

struct SynthesisResult {
  Waveform waveform;  // resampled to 50 ns
  std::vector<double> control;  // per-bin phases
  FidelityReport report;
};

SynthesisResult synthesize(const GateTarget& target, const LatticeConfig& config, const SynthesisOptions& opts);

// Re-propagates at the verification truncation with 50 ns steps, through
// propagate_fewmode rather than the optimizer's propagators.
FidelityReport verify_gate(const Waveform& w, const GateTarget& target, const LatticeConfig& config);

// Gate role used by circuit planning for a given kind.
std::string gate_role(GateKind kind);

}  // namespace bbi
