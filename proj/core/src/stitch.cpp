#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bbi/circuit.hpp"

namespace bbi {

namespace {

constexpr double kDepthTolerance = 1e-9;

Waveform at_awg_rate(const Waveform& w) {
  if (w.sample_period_ns() == kAwgSamplePeriodNs) return w;
  return resample_hold(w, kAwgSamplePeriod);
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

}  // namespace

double StitchSegment::start() const { return static_cast<double>(first_sample) * kAwgSamplePeriod; }
double StitchSegment::end() const { return static_cast<double>(first_sample + count) * kAwgSamplePeriod; }

const StitchedAxis* StitchedWaveform::axis(std::string_view name) const {
  for (const auto& a : axes) {
    if (a.axis == name) return &a;
  }
  return nullptr;
}

Waveform StitchedWaveform::axis_waveform(std::string_view name) const {
  if (const StitchedAxis* a = axis(name)) return a->waveform;
  Waveform w;
  w.label = "idle-" + std::string(name);
  w.meta.depth = depth;
  w.samples.assign(static_cast<std::size_t>(std::llround(duration() / kAwgSamplePeriod)), 0.0);
  return w;
}

double StitchedWaveform::duration() const {
  double d = 0.0;
  for (const auto& a : axes) d = std::max(d, a.waveform.duration());
  return d;
}

StitchedWaveform stitch(const Circuit& circuit, const GateLibrary& library) {
  if (circuit.axes.empty()) throw ValidationError("circuit has no axis programs");
  StitchedWaveform out;
  out.circuit_hash = hash_text(format_circuit(circuit));
  bool have_depth = false;
  const Circuit flat = expand_repeats(circuit);
  for (const auto& prog : flat.axes) {
    StitchedAxis ax;
    ax.axis = prog.axis;
    ax.waveform.label = "circuit-" + prog.axis;
    std::vector<double>& s = ax.waveform.samples;
    for (const auto& e : prog.elements) {
      StitchSegment seg;
      seg.kind = e.kind;
      seg.first_sample = s.size();
      if (e.kind == CircuitElement::Kind::Wait) {
        const double hold = s.empty() ? 0.0 : s.back();
        s.insert(s.end(), static_cast<std::size_t>(e.duration_ns / kAwgSamplePeriodNs), hold);
      } else {
        const Waveform& g = library.resolve(e.gate);
        if (!have_depth) {
          out.depth = g.meta.depth;
          have_depth = true;
        } else if (std::abs(g.meta.depth - out.depth) > kDepthTolerance) {
          std::ostringstream os;
          os << "lattice depth mismatch: gate " << e.gate << " was designed for " << g.meta.depth << " E_r, others for "
             << out.depth << " E_r";
          throw ValidationError(os.str());
        }
        Waveform w = at_awg_rate(g);
        if (e.reversed) w = reverse(w);
        if (e.negated) w = negate(w);
        s.insert(s.end(), w.samples.begin(), w.samples.end());
        seg.name = g.label.empty() ? e.gate : g.label;
        seg.role = g.meta.role;
        seg.reversed = e.reversed;
        seg.negated = e.negated;
        out.library_hashes[seg.name] = g.meta.provenance;
      }
      seg.count = s.size() - seg.first_sample;
      ax.segments.push_back(seg);
    }
    out.axes.push_back(std::move(ax));
  }
  for (auto& ax : out.axes) {
    ax.waveform.meta.depth = out.depth;
    ax.waveform.finalize();
  }
  return out;
}

void export_awg(const StitchedWaveform& w, std::string_view axis_name, const std::filesystem::path& path) {
  const StitchedAxis* a = w.axis(axis_name);
  if (!a) throw ValidationError("circuit has no program for axis " + std::string(axis_name));
  std::ostringstream header;
  header << "# axis: " << a->axis << "\n# circuit_hash: " << w.circuit_hash << "\n# library:";
  for (const auto& [name, hash] : w.library_hashes) header << " " << name << "=" << hash;
  header << "\n";
  export_awg(a->waveform, path, header.str());
}

void export_awg(const Waveform& w, const std::filesystem::path& path, const std::string& extra_header) {
  const Waveform r = at_awg_rate(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "# bbi AWG export\n";
  out << "# sample_period_ns: " << kAwgSamplePeriodNs << "\n";
  out << "# depth_Er: " << format_double(r.meta.depth) << "\n";
  out << "# samples: " << r.samples.size() << "\n";
  out << "# provenance: " << content_hash(r.samples) << "\n";
  out << extra_header;
  out << "t_ns,phi_rad\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    out << static_cast<std::int64_t>(i) * kAwgSamplePeriodNs << "," << format_double(r.samples[i]) << "\n";
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

Waveform import_awg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  Waveform w;
  w.label = path.stem().string();
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# depth_Er: ";
      if (line.rfind(key, 0) == 0) w.meta.depth = std::stod(line.substr(key.size()));
      continue;
    }
    if (!header_seen) {
      if (line != "t_ns,phi_rad") throw ValidationError(path.string() + ": expected header t_ns,phi_rad");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    std::int64_t t = 0;
    double phi = 0.0;
    const char* b = line.data();
    const auto r1 = std::from_chars(b, b + (comma == std::string::npos ? line.size() : comma), t);
    const auto r2 = comma == std::string::npos ? std::from_chars_result{nullptr, std::errc::invalid_argument}
                                               : std::from_chars(b + comma + 1, b + line.size(), phi);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != b + line.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    if (t != static_cast<std::int64_t>(w.samples.size()) * kAwgSamplePeriodNs) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": rows must be spaced by 50 ns from t = 0");
    }
    w.samples.push_back(phi);
  }
  if (!header_seen) throw ValidationError(path.string() + ": missing t_ns,phi_rad header");
  w.validate();
  w.finalize();
  return w;
}

}  // namespace bbi
