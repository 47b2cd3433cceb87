#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bbi/errors.hpp"
#include "bbi/gatesynth.hpp"
#include "bbi/waveform.hpp"

namespace bbi {

/// Parse failure with a 1-based source position.
class ParseError : public ValidationError {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct CircuitElement {
  enum class Kind { Gate, Wait, Repeat };

  Kind kind = Kind::Gate;
  std::string gate;  // Gate
  bool reversed = false;
  bool negated = false;
  std::int64_t duration_ns = 0;       // Wait
  int repeat = 1;                     // Repeat
  std::vector<CircuitElement> body;   // Repeat
  int line = 0;
  int column = 0;

  static CircuitElement make_gate(std::string name, bool rev = false, bool neg = false);
  static CircuitElement make_wait(std::int64_t ns);
  static CircuitElement make_repeat(int n, std::vector<CircuitElement> body);
};

struct AxisProgram {
  std::string axis;  // "x" or "z"
  std::vector<CircuitElement> elements;
};

struct Circuit {
  std::vector<AxisProgram> axes;

  const AxisProgram* axis(std::string_view name) const;
  std::vector<std::string> gate_names() const;  // distinct, in first-use order
};

// "150us", "3ms", "50ns", "1.5ms", "0.002s". Must be a positive multiple of 50 ns.
std::int64_t parse_duration_ns(std::string_view text);
std::string format_duration(std::int64_t ns);

class GateLibrary;

/// Parses the circuit language:
///   circuit := axisblock+
///   axisblock := "axis" id "{" stmt* "}"
///   stmt := "gate" id modifier* ";" | "wait" duration ";" | "repeat" int "{" stmt* "}"
///   modifier := "rev" | "neg"
/// `#` starts a comment. With a library, gate names are checked on the spot.
Circuit parse_circuit(std::string_view text, const GateLibrary* library = nullptr);

// Canonical text form; parse_circuit(format_circuit(c)) == c.
std::string format_circuit(const Circuit& c);

// Inlines every Repeat block.
Circuit expand_repeats(const Circuit& c);

/// Named gate waveforms. Names are case-insensitive; a name without a
/// trailing variant digit resolves to variant 1 ("BS" -> "BS1").
class GateLibrary {
 public:
  void add(const std::string& name, Waveform w);
  bool contains(std::string_view name) const;
  const Waveform& resolve(std::string_view name) const;  // throws ValidationError
  std::vector<std::string> names() const;
  std::size_t size() const { return gates_.size(); }

  // Loads every *.wave.json in a directory; the entry name is the file stem
  // before ".wave.json".
  static GateLibrary load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

 private:
  std::optional<std::string> key_of(std::string_view name) const;
  std::map<std::string, Waveform> gates_;
};

// Conventional library name for a kind and variant, e.g. ("BS", 1) -> "BS1".
std::string library_name(GateKind kind, int variant);
std::string short_gate_name(GateKind kind);

struct StitchSegment {
  CircuitElement::Kind kind = CircuitElement::Kind::Gate;
  std::string name;  // resolved gate name, empty for waits
  std::string role;  // from gate metadata
  bool reversed = false;
  bool negated = false;
  std::size_t first_sample = 0;
  std::size_t count = 0;

  double start() const;  // s
  double end() const;    // s
};

struct StitchedAxis {
  std::string axis;
  Waveform waveform;
  std::vector<StitchSegment> segments;
};

struct StitchedWaveform {
  std::vector<StitchedAxis> axes;
  double depth = 10.0;
  std::string circuit_hash;
  std::map<std::string, std::string> library_hashes;  // gate name -> provenance

  const StitchedAxis* axis(std::string_view name) const;
  // Waveform for an axis, or an all-zero waveform of the longest axis
  // duration when the circuit has no program for it.
  Waveform axis_waveform(std::string_view name) const;
  double duration() const;  // s, longest axis
};

/// Concatenates gate samples and constant waits at 50 ns per axis. Waits
/// continue the last emitted value.
StitchedWaveform stitch(const Circuit& circuit, const GateLibrary& library);

/// AWG CSV: header comment lines, then "t_ns,phi_rad" rows at 50 ns.
void export_awg(const StitchedWaveform& w, std::string_view axis, const std::filesystem::path& path);
void export_awg(const Waveform& w, const std::filesystem::path& path, const std::string& extra_header = {});
Waveform import_awg(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Classical segment plan

/// One ballistic stretch of an arm. Velocities are in units of p / m with
/// p = 4 hbar k_L, so each component is -1, 0 or +1.
struct PlanSegment {
  double t0 = 0.0;  // s
  double t1 = 0.0;  // s
  double x0 = 0.0;  // m
  double z0 = 0.0;  // m
  int vx = 0;
  int vz = 0;
};

struct PlanArm {
  std::string label;  // "u", "l", "uu", ... ("" before the first split)
  int parent = -1;    // index of the arm this one split from
  std::vector<PlanSegment> segments;
  bool leaf = true;   // false once split into children

  double x_at(double t, double speed) const;
  double z_at(double t, double speed) const;
};

struct SegmentPlan {
  double speed = 0.0;  // p / m, m/s
  double duration = 0.0;
  std::vector<PlanArm> arms;  // every arm ever created, merged ones included
  bool closed = false;        // all branches merged back into one arm
  std::vector<std::string> diagnostics;

  std::vector<const PlanArm*> leaves() const;  // arms never split further
  const PlanArm* leaf(std::string_view label) const;
  double max_excursion(int axis) const;        // max |x| or |z| over all arms, m
  // Lowest and highest x or z reached by any arm, m.
  std::pair<double, double> extent(int axis) const;
  // Oriented (x, z) area enclosed by the loop of a leaf arm, m^2.
  double loop_area(const PlanArm& leaf) const;
  // Sum of |loop_area| over all leaves, m^2.
  double enclosed_area() const;
  // Space-time area between two leaf arms along x, m s.
  double spacetime_area(const PlanArm& a, const PlanArm& b) const;
  // Reconstructs the full path of a leaf (ancestors then itself).
  std::vector<PlanSegment> path(const PlanArm& leaf) const;
};

/// Idealized plan with instantaneous gates at the gate centers. Gate roles
/// come from library metadata: splitters branch, mirrors reverse, split &
/// hold stores the velocity and its reverse releases it, echoes reverse the
/// stored velocity, reversed splitters merge sibling arms.
SegmentPlan circuit_plan(const Circuit& circuit, const GateLibrary& library, const LatticeConfig& config);

// +1 or -1: direction of the asymmetric splitter's output for a variant.
int asym_direction(int variant, const LatticeConfig& config);

}  // namespace bbi
