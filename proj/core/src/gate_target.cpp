#include <cmath>

#include "bbi/errors.hpp"
#include "bbi/gatesynth.hpp"

namespace bbi {

std::string_view gate_kind_name(GateKind kind) {
  switch (kind) {
    case GateKind::Beamsplitter: return "beamsplitter";
    case GateKind::AsymBeamsplitter: return "asym_beamsplitter";
    case GateKind::Mirror: return "mirror";
    case GateKind::CbBeamsplitter: return "cb_beamsplitter";
    case GateKind::SplitHold: return "split_hold";
    case GateKind::Echo: return "echo";
    case GateKind::Identity: return "identity";
  }
  return "?";
}

GateKind parse_gate_kind(std::string_view name) {
  if (name == "beamsplitter" || name == "bs") return GateKind::Beamsplitter;
  if (name == "asym_beamsplitter" || name == "asym" || name == "abs") return GateKind::AsymBeamsplitter;
  if (name == "mirror" || name == "m") return GateKind::Mirror;
  if (name == "cb_beamsplitter" || name == "cbbs" || name == "cb") return GateKind::CbBeamsplitter;
  if (name == "split_hold" || name == "sh") return GateKind::SplitHold;
  if (name == "echo") return GateKind::Echo;
  if (name == "identity" || name == "id") return GateKind::Identity;
  throw ValidationError("unknown gate kind '" + std::string(name) + "'");
}

std::vector<GateKind> designed_gate_kinds() {
  return {GateKind::Beamsplitter, GateKind::AsymBeamsplitter, GateKind::Mirror,
          GateKind::CbBeamsplitter, GateKind::SplitHold, GateKind::Echo};
}

std::string GateTarget::name() const {
  return std::string(gate_kind_name(kind)) + ":" + std::to_string(variant);
}

void GateTarget::validate() const {
  if (variant != 1 && variant != 2) throw ValidationError("gate variant must be 1 or 2");
  const auto d = static_cast<Eigen::Index>(input_bands.size());
  if (d < 1 || map.cols() != d || map.rows() != static_cast<Eigen::Index>(output_bands.size())) {
    throw ValidationError("gate target map has inconsistent shape");
  }
  if (form == Form::State) {
    if (d != 1 || std::abs(map.col(0).norm() - 1.0) > 1e-12) {
      throw ValidationError("state target must be a single normalized column");
    }
  } else {
    const Eigen::MatrixXcd gram = map.adjoint() * map;
    if ((gram - Eigen::MatrixXcd::Identity(d, d)).norm() > 1e-12) {
      throw ValidationError("operator target is not unitary on its subspace");
    }
  }
}

GateTarget gate_target(GateKind kind, int variant) {
  if (variant != 1 && variant != 2) throw ValidationError("gate variant must be 1 or 2");
  const double r = 1.0 / std::sqrt(2.0);
  const bool v1 = variant == 1;
  GateTarget t;
  t.kind = kind;
  t.variant = variant;
  switch (kind) {
    case GateKind::Beamsplitter:
      // |0> -> |3>  or  |0> -> |4>
      t.form = GateTarget::Form::State;
      t.input_bands = {0};
      t.output_bands = {v1 ? 3 : 4};
      t.map = Eigen::MatrixXcd::Ones(1, 1);
      break;
    case GateKind::AsymBeamsplitter:
      // |0> -> (|3> + |4>)/sqrt2  or  (|3> - |4>)/sqrt2
      t.form = GateTarget::Form::State;
      t.input_bands = {0};
      t.output_bands = {3, 4};
      t.map.resize(2, 1);
      t.map << r, (v1 ? r : -r);
      break;
    case GateKind::Mirror:
    case GateKind::Echo:
      // Pauli Z:  |a> -> |a>, |b> -> -|b>;   Pauli Y:  |a> -> |b>, |b> -> -|a>
      t.form = GateTarget::Form::Operator;
      t.input_bands = kind == GateKind::Mirror ? std::vector<int>{3, 4} : std::vector<int>{0, 1};
      t.output_bands = t.input_bands;
      t.map.resize(2, 2);
      if (v1) {
        t.map << 1, 0, 0, -1;
      } else {
        t.map << 0, -1, 1, 0;
      }
      break;
    case GateKind::CbBeamsplitter:
      // Hadamard-type maps on {|3>, |4>}
      t.form = GateTarget::Form::Operator;
      t.input_bands = {3, 4};
      t.output_bands = {3, 4};
      t.map.resize(2, 2);
      if (v1) {
        t.map << r, r, r, -r;
      } else {
        t.map << r, r, -r, r;
      }
      break;
    case GateKind::SplitHold:
      // {|3>, |4>} -> {|0>, |1>} in either pairing
      t.form = GateTarget::Form::Operator;
      t.input_bands = {3, 4};
      t.output_bands = {0, 1};
      t.map.resize(2, 2);
      if (v1) {
        t.map << 1, 0, 0, 1;
      } else {
        t.map << 0, 1, 1, 0;
      }
      break;
    case GateKind::Identity:
      t.form = GateTarget::Form::State;
      t.input_bands = {0};
      t.output_bands = {0};
      t.map = Eigen::MatrixXcd::Ones(1, 1);
      break;
  }
  t.validate();
  return t;
}

TargetBasis materialize(const GateTarget& target, const LatticeConfig& config) {
  int max_band = 0;
  for (int b : target.input_bands) max_band = std::max(max_band, b);
  for (int b : target.output_bands) max_band = std::max(max_band, b);
  const BandStructure bands = solve_bands(config, std::vector<double>{0.0}, max_band + 1);
  const auto& s = bands.states[0];
  TargetBasis basis;
  for (int j = 0; j < target.dimension(); ++j) {
    basis.inputs.push_back(s[target.input_bands[j]].coefficients);
    StateVector t = StateVector::Zero(config.dimension());
    for (std::size_t i = 0; i < target.output_bands.size(); ++i) {
      t += target.map(static_cast<Eigen::Index>(i), j) * s[target.output_bands[i]].coefficients;
    }
    basis.targets.push_back(std::move(t));
  }
  return basis;
}

double state_fidelity(const StateVector& final_state, const StateVector& target) {
  const double f = std::norm(target.dot(final_state)) / (target.squaredNorm() * final_state.squaredNorm());
  return std::clamp(f, 0.0, 1.0);
}

double operator_fidelity(const Eigen::MatrixXcd& achieved, const Eigen::MatrixXcd& target, int d) {
  const cplx tr = (target.adjoint() * achieved).trace();
  return std::clamp(std::norm(tr) / (static_cast<double>(d) * d), 0.0, 1.0);
}

std::string gate_role(GateKind kind) {
  switch (kind) {
    case GateKind::Beamsplitter: return "splitter";
    case GateKind::AsymBeamsplitter: return "asym_splitter";
    case GateKind::Mirror: return "mirror";
    case GateKind::CbBeamsplitter: return "cb_splitter";
    case GateKind::SplitHold: return "split_hold";
    case GateKind::Echo: return "echo";
    case GateKind::Identity: return "idle";
  }
  return "idle";
}

}  // namespace bbi
