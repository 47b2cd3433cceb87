#include <algorithm>
#include <cmath>
#include <sstream>

#include "bbi/sensing.hpp"

namespace bbi {

namespace {

constexpr std::int64_t kGrid = kAwgSamplePeriodNs;

std::int64_t to_ns(double seconds, const char* what) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) throw ValidationError(std::string(what) + " must be non-negative");
  const auto ns = static_cast<std::int64_t>(std::llround(seconds * 1e9));
  return (ns + kGrid / 2) / kGrid * kGrid;
}

std::int64_t gate_ns(const GateLibrary& lib, const std::string& name) {
  const Waveform& w = lib.resolve(name);
  return static_cast<std::int64_t>(w.samples.size()) * w.sample_period_ns();
}

// A gate placed by its center time on one axis.
struct Placed {
  std::string name;
  std::int64_t center;  // ns
  bool rev = false;
  bool neg = false;
};

AxisProgram place(const std::string& axis, std::vector<Placed> gates, const GateLibrary& lib) {
  std::sort(gates.begin(), gates.end(), [](const Placed& a, const Placed& b) { return a.center < b.center; });
  AxisProgram p;
  p.axis = axis;
  std::int64_t t = 0;
  for (const auto& g : gates) {
    const std::int64_t d = gate_ns(lib, g.name);
    // Centers fall on the 50 ns grid when the duration is a multiple of 100 ns;
    // otherwise the start is rounded down.
    const std::int64_t start = (g.center - d / 2) / kGrid * kGrid;
    if (start < t) {
      std::ostringstream os;
      os << "gate " << g.name << " on axis " << axis << " would start " << (t - start) * 1e-3
         << " us before the previous gate ends; increase the spacings";
      throw ValidationError(os.str());
    }
    if (start > t) p.elements.push_back(CircuitElement::make_wait(start - t));
    p.elements.push_back(CircuitElement::make_gate(g.name, g.rev, g.neg));
    t = start + d;
  }
  return p;
}

std::int64_t mid(std::int64_t a, std::int64_t b) { return (a + b) / 2 / kGrid * kGrid; }

}  // namespace

std::string sensor_kind_name(SensorKind kind) {
  switch (kind) {
    case SensorKind::Accelerometer: return "accelerometer";
    case SensorKind::AccelerometerHold: return "accelerometer-hold";
    case SensorKind::Gradiometer: return "gradiometer";
    case SensorKind::GradiometerHold: return "gradiometer-hold";
    case SensorKind::Gyroscope: return "gyroscope";
  }
  return "accelerometer";
}

SensorKind parse_sensor_kind(const std::string& name) {
  for (SensorKind k : all_sensor_kinds()) {
    if (sensor_kind_name(k) == name) return k;
  }
  if (name == "accel") return SensorKind::Accelerometer;
  if (name == "accel-hold") return SensorKind::AccelerometerHold;
  if (name == "grad") return SensorKind::Gradiometer;
  if (name == "grad-hold") return SensorKind::GradiometerHold;
  if (name == "gyro") return SensorKind::Gyroscope;
  throw ValidationError("unknown sensor kind '" + name + "'");
}

std::vector<SensorKind> all_sensor_kinds() {
  return {SensorKind::Accelerometer, SensorKind::AccelerometerHold, SensorKind::Gradiometer,
          SensorKind::GradiometerHold, SensorKind::Gyroscope};
}

SignalSpec::Kind sensor_signal(SensorKind kind) {
  switch (kind) {
    case SensorKind::Accelerometer:
    case SensorKind::AccelerometerHold: return SignalSpec::Kind::Acceleration;
    case SensorKind::Gradiometer:
    case SensorKind::GradiometerHold: return SignalSpec::Kind::Gradient;
    case SensorKind::Gyroscope: return SignalSpec::Kind::Rotation;
  }
  return SignalSpec::Kind::None;
}

void SensorDesign::validate() const {
  if (!(T1 > 0.0) || !(T2 > 0.0)) throw ValidationError("sensor spacings must be positive");
  if (!(hold >= 0.0)) throw ValidationError("hold time must be non-negative");
  const bool needs_hold = kind == SensorKind::AccelerometerHold || kind == SensorKind::GradiometerHold;
  if (needs_hold && !(hold > 0.0)) throw ValidationError(sensor_kind_name(kind) + " needs a positive hold time");
}

double analytic_phase(const SensorDesign& d, double signal, const LatticeConfig& cfg) {
  d.validate();
  const double hbar = constants::hbar;
  const double p = 4.0 * hbar * cfg.wavenumber();
  const double m = cfg.atom_mass;
  switch (d.kind) {
    case SensorKind::Accelerometer: return 2.0 * signal * p * d.T1 * d.T1 / hbar;
    case SensorKind::AccelerometerHold: return 2.0 * signal * p * d.T1 * (d.T1 + d.hold) / hbar;
    case SensorKind::Gradiometer: return 8.0 * signal * d.T1 * d.T2 * d.T2 * p * p / (hbar * m);
    case SensorKind::GradiometerHold: return 8.0 * signal * d.T1 * d.T2 * (d.T2 + d.hold) * p * p / (hbar * m);
    case SensorKind::Gyroscope: return 8.0 * signal * p * p * d.T1 * d.T2 / (m * hbar);
  }
  return 0.0;
}

double fringe_span(const SensorDesign& design, double fringes, const LatticeConfig& config) {
  const double slope = analytic_phase(design, 1.0, config);
  return 2.0 * constants::pi * fringes / slope;
}

double path_action(const SegmentPlan& plan, const SignalSpec& signal, const LatticeConfig& cfg) {
  if (!plan.closed) throw ValidationError("path_action needs a closed plan");
  signal.validate();
  const double m = cfg.atom_mass;
  const double u = plan.speed;
  const double g = signal.magnitude;
  // The kinetic actions are ~1e5 rad per arm and cancel between arms, so
  // they are summed exactly in integer nanoseconds (plan times sit on it).
  std::int64_t kinetic_ns = 0;
  double total = 0.0;
  for (const PlanArm* arm : plan.leaves()) {
    int sign = 1;
    for (char c : arm->label) sign *= (c == 'l') ? -1 : 1;
    double s = 0.0;
    for (const auto& seg : plan.path(*arm)) {
      const double tau = seg.t1 - seg.t0;
      const double vx = u * seg.vx;
      const double vz = u * seg.vz;
      kinetic_ns += sign * (seg.vx * seg.vx + seg.vz * seg.vz) * (std::llround(seg.t1 * 1e9) - std::llround(seg.t0 * 1e9));
      switch (signal.kind) {
        case SignalSpec::Kind::Acceleration: s -= m * g * (seg.x0 * tau + 0.5 * vx * tau * tau); break;
        case SignalSpec::Kind::Gradient:
          s -= m * g * (seg.x0 * seg.x0 * tau + seg.x0 * vx * tau * tau + vx * vx * tau * tau * tau / 3.0);
          break;
        case SignalSpec::Kind::Rotation: s += m * g * (seg.x0 * vz - seg.z0 * vx) * tau; break;
        case SignalSpec::Kind::None: break;
      }
    }
    total += sign * s;
  }
  total += 0.5 * m * u * u * static_cast<double>(kinetic_ns) * 1e-9;
  return -total / constants::hbar;
}

Circuit sensor_circuit(const SensorDesign& d, const GateLibrary& lib, const LatticeConfig& cfg) {
  d.validate();
  const std::string bs = library_name(GateKind::Beamsplitter, d.bs_variant);
  const std::string mirror = library_name(GateKind::Mirror, d.mirror_variant);
  const std::string cbbs = library_name(GateKind::CbBeamsplitter, d.cbbs_variant);
  const std::string sh = library_name(GateKind::SplitHold, d.sh_variant);
  const std::string echo = library_name(GateKind::Echo, d.echo_variant);
  const std::string asym = library_name(GateKind::AsymBeamsplitter, d.asym_variant);
  const std::int64_t t1 = to_ns(d.T1, "T1");
  const std::int64_t t2 = to_ns(d.T2, "T2");
  const std::int64_t th = to_ns(d.hold, "hold");
  const std::int64_t c0 = gate_ns(lib, bs) / 2;

  Circuit c;
  switch (d.kind) {
    case SensorKind::Accelerometer:
      c.axes.push_back(place("x", {{bs, c0}, {mirror, c0 + t1}, {bs, c0 + 2 * t1, true}}, lib));
      break;
    case SensorKind::AccelerometerHold: {
      const std::int64_t s = c0 + t1;
      c.axes.push_back(place("x",
                             {{bs, c0}, {sh, s}, {echo, mid(s, s + th)}, {sh, s + th, true}, {bs, s + th + t1, true}},
                             lib));
      break;
    }
    case SensorKind::Gradiometer:
      c.axes.push_back(place("x",
                             {{bs, c0},
                              {cbbs, c0 + t1},
                              {mirror, c0 + t1 + t2},
                              {cbbs, c0 + t1 + 2 * t2, true},
                              {bs, c0 + 2 * t1 + 2 * t2, true}},
                             lib));
      break;
    case SensorKind::GradiometerHold: {
      const std::int64_t s = c0 + t1 + t2;
      c.axes.push_back(place("x",
                             {{bs, c0},
                              {cbbs, c0 + t1},
                              {sh, s},
                              {echo, mid(s, s + th)},
                              {sh, s + th, true},
                              {cbbs, s + th + t2, true},
                              {bs, s + th + t2 + t1, true}},
                             lib));
      break;
    }
    case SensorKind::Gyroscope: {
      // x splits and holds while z transports; z holds while x exchanges the
      // arms; the loop closes in reverse order. The z launch direction is
      // chosen so that the arm leaving along +x circulates clockwise in (x, z).
      const std::int64_t d_sh = gate_ns(lib, sh);
      const std::int64_t d_asym = gate_ns(lib, asym);
      const bool neg = asym_direction(d.asym_variant, cfg) > 0;
      const std::int64_t s1 = c0 + t1;                     // x stops
      const std::int64_t a0 = s1 + d_sh / 2 + d_asym / 2;  // z launches
      const std::int64_t s2 = a0 + t2;                     // z stops
      const std::int64_t r1 = s2 + d_sh;                   // x released
      const std::int64_t s3 = r1 + 2 * t1;                 // x stops
      const std::int64_t r2 = s3 + d_sh;                   // z released
      const std::int64_t a1 = r2 + t2;                     // z stopped
      const std::int64_t r3 = a1 + d_asym / 2 + d_sh / 2;  // x released
      c.axes.push_back(place("x",
                             {{bs, c0},
                              {sh, s1},
                              {echo, mid(s1, r1)},
                              {sh, r1, true},
                              {sh, s3},
                              {echo, mid(s3, r3)},
                              {sh, r3, true},
                              {bs, r3 + t1, true}},
                             lib));
      c.axes.push_back(place("z",
                             {{asym, a0, false, neg},
                              {sh, s2},
                              {echo, mid(s2, r2)},
                              {sh, r2, true},
                              {asym, a1, true, neg}},
                             lib));
      break;
    }
  }
  return c;
}

}  // namespace bbi
