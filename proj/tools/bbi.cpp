// bbi: command-line front end for band structure, gate synthesis, circuit
// stitching, grid simulation, signal scans and sensitivity analysis.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bbi/circuit.hpp"
#include "bbi/gatesynth.hpp"
#include "bbi/grid.hpp"
#include "bbi/lattice.hpp"
#include "bbi/run_config.hpp"
#include "bbi/sensing.hpp"
#include "bbi/version.hpp"
#include "json.hpp"

namespace {

using namespace bbi;
using nlohmann::json;

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

// Flags shared by every subcommand; set flags override the config file.
struct CommonFlags {
  std::string config_path;
  std::string preset;
  double depth = std::nan("");
  int truncation = 0;
  long long seed = -1;
  int workers = -1;
  std::string output_dir;
  int sites = 0;
  int pps = 0;
  int sites_z = 0;
  int pps_z = 0;
  int envelope = 0;
  std::string hold_step;
  std::string rotation_step;

  void attach(CLI::App* app, bool grid) {
    app->add_option("--config", config_path, "JSON run configuration (flags override it)");
    app->add_option("--preset", preset, "Physical preset (rb87-1064)");
    app->add_option("--depth", depth, "Lattice depth in E_r");
    app->add_option("--truncation", truncation, "Plane-wave truncation N (orders -N..N)");
    app->add_option("--seed", seed, "Random seed (default 0)");
    app->add_option("--workers", workers, "Worker threads (default BBI_WORKERS or all cores)");
    app->add_option("--output-dir", output_dir, "Directory for default output names");
    if (!grid) return;
    app->add_option("--sites", sites, "Grid sites along x");
    app->add_option("--pps", pps, "Grid points per site along x");
    app->add_option("--sites-z", sites_z, "Grid sites along z (2D runs)");
    app->add_option("--pps-z", pps_z, "Grid points per site along z (2D runs)");
    app->add_option("--envelope", envelope, "Initial packet size parameter in sites");
    app->add_option("--hold-step", hold_step, "Time step for constant stretches, e.g. 500ns");
    app->add_option("--rotation-step", rotation_step, "Rotation splitting step (2D), e.g. 5us");
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (!preset.empty()) c.preset = preset;
    if (!std::isnan(depth)) c.depth = depth;
    if (truncation > 0) c.truncation = truncation;
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    if (workers >= 0) c.workers = workers;
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (sites > 0) c.sites = sites;
    if (pps > 0) c.points_per_site = pps;
    if (sites_z > 0) c.sites_z = sites_z;
    if (pps_z > 0) c.points_per_site_z = pps_z;
    if (envelope > 0) c.envelope_sites = envelope;
    if (!hold_step.empty()) c.hold_step_ns = parse_duration_ns(hold_step);
    if (!rotation_step.empty()) c.rotation_step_ns = parse_duration_ns(rotation_step);
    c.validate();
    return c;
  }
};

std::string provenance(const RunConfig& c) {
  std::ostringstream os;
  os << "bbi " << kVersion << " seed=" << c.seed << " config=" << c.hash();
  return os.str();
}

std::string output_path(const RunConfig& c, const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  return (std::filesystem::path(c.output_dir) / fallback).string();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
  if (!out) throw ValidationError("write failed for " + path);
}

// "<stem>.<axis>.wave.json" when a circuit has more than one axis.
std::string axis_path(const std::string& path, const std::string& axis, bool multi) {
  if (!multi) return path;
  const std::string suffixes[] = {".wave.json", ".csv", ".json"};
  for (const auto& s : suffixes) {
    if (path.size() > s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0) {
      return path.substr(0, path.size() - s.size()) + "." + axis + s;
    }
  }
  return path + "." + axis;
}

// "bs:1" or "bs" (variant 1).
GateTarget parse_target(const std::string& text) {
  const auto colon = text.find(':');
  const GateKind kind = parse_gate_kind(text.substr(0, colon));
  int variant = 1;
  if (colon != std::string::npos) {
    try {
      variant = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("malformed target '" + text + "', expected kind:variant");
    }
  }
  return gate_target(kind, variant);
}

SignalSpec::Kind parse_param(const std::string& p) {
  if (p == "a" || p == "accel") return SignalSpec::Kind::Acceleration;
  if (p == "g" || p == "g'" || p == "grad") return SignalSpec::Kind::Gradient;
  if (p == "omega" || p == "Omega" || p == "rot") return SignalSpec::Kind::Rotation;
  throw ValidationError("unknown scan parameter '" + p + "' (a, g or omega)");
}

// "lo:hi:n"
std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw ValidationError("range must be lo:hi:n, got '" + text + "'");
  try {
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int n = std::stoi(parts[2]);
    if (n < 1 || !(hi >= lo)) throw ValidationError("range needs hi >= lo and n >= 1");
    return linspace(lo, hi, n);
  } catch (const std::invalid_argument&) {
    throw ValidationError("malformed range '" + text + "'");
  } catch (const std::out_of_range&) {
    throw ValidationError("malformed range '" + text + "'");
  }
}

double seconds_of(const std::string& duration) { return static_cast<double>(parse_duration_ns(duration)) * 1e-9; }

void print_plan(const SegmentPlan& plan) {
  std::cout << "plan: " << (plan.closed ? "closed" : "OPEN") << ", " << plan.leaves().size() << " arm(s), max |x| "
            << plan.max_excursion(0) * 1e6 << " um, max |z| " << plan.max_excursion(1) * 1e6 << " um\n";
  if (plan.max_excursion(1) > 0.0) {
    std::cout << "plan: enclosed area " << plan.enclosed_area() * 1e6 << " mm^2 (sum over arms)\n";
  }
  for (const auto& d : plan.diagnostics) std::cout << "plan: " << d << "\n";
}

json plan_json(const SegmentPlan& plan) {
  json j;
  j["speed_m_per_s"] = plan.speed;
  j["duration_s"] = plan.duration;
  j["closed"] = plan.closed;
  j["diagnostics"] = plan.diagnostics;
  j["enclosed_area_m2"] = plan.enclosed_area();
  json arms = json::array();
  for (const PlanArm* a : plan.leaves()) {
    json arm;
    arm["label"] = a->label;
    json segs = json::array();
    for (const auto& s : plan.path(*a)) {
      segs.push_back({{"t0", s.t0}, {"t1", s.t1}, {"x0", s.x0}, {"z0", s.z0}, {"vx", s.vx}, {"vz", s.vz}});
    }
    arm["segments"] = segs;
    arms.push_back(arm);
  }
  j["arms"] = arms;
  return j;
}

// ---------------------------------------------------------------------------

int cmd_bands(const RunConfig& rc, int q_points, int n_bands, const std::string& out) {
  const LatticeConfig cfg = rc.lattice();
  std::cout << "# " << provenance(rc) << "\n";
  std::cout << "depth " << cfg.depth << " E_r, E_r/h = " << cfg.recoil_frequency() << " Hz, t_r = "
            << cfg.recoil_time() * 1e6 << " us, v_r = " << cfg.recoil_velocity() * 1e3 << " mm/s\n";
  std::cout << "band  E(q=0)/E_r   P(-3)    P(-2)    P(-1)    P(0)     P(+1)    P(+2)    P(+3)\n";
  for (int b = 0; b < n_bands; ++b) {
    const BlochState s = bloch_state(cfg, b);
    const MomentumDistribution m = momentum_composition(s);
    std::cout << std::setw(4) << b << "  " << std::setw(11) << std::fixed << std::setprecision(6)
              << band_energies(cfg, 0.0, n_bands)[b];
    for (int k = -3; k <= 3; ++k) std::cout << "  " << std::setprecision(5) << m.at(k);
    std::cout << "\n" << std::defaultfloat;
  }
  if (!out.empty()) {
    const auto q = brillouin_grid(q_points);
    const BandStructure bs = solve_bands(cfg, q, n_bands);
    std::ostringstream os;
    os << "# " << provenance(rc) << "\n# depth_Er: " << cfg.depth << "\nq";
    for (int b = 0; b < n_bands; ++b) os << ",E" << b;
    os << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < q.size(); ++i) {
      os << q[i];
      for (int b = 0; b < n_bands; ++b) os << "," << bs.energies[i][b];
      os << "\n";
    }
    write_text(out, os.str());
    std::cout << "wrote " << out << "\n";
  }
  return kOk;
}

struct SynthFlags {
  std::string gate;
  int variant = 1;
  std::string duration;
  std::string bin = "1us";
  int restarts = 16;
  int iterations = 400;
  std::string out;
};

int cmd_synth(const RunConfig& rc, const SynthFlags& f) {
  const LatticeConfig cfg = rc.lattice();
  const GateKind kind = parse_gate_kind(f.gate);
  const GateTarget target = gate_target(kind, f.variant);
  SynthesisOptions o = default_synthesis_options(kind);
  if (!f.duration.empty()) o.duration = seconds_of(f.duration);
  o.control_bin = seconds_of(f.bin);
  o.restarts = f.restarts;
  o.max_iterations = f.iterations;
  o.seed = rc.seed;
  o.truncation = rc.truncation;
  o.workers = rc.workers;
  SynthesisResult r = synthesize(target, cfg, o);
  r.waveform.meta.generator = provenance(rc);
  const std::string path = output_path(rc, f.out, library_name(kind, f.variant) + ".wave.json");
  save_waveform(r.waveform, path);
  std::cout << target.name() << ": fidelity " << std::setprecision(6) << r.report.fidelity << " (verification "
            << r.report.verification_fidelity << "), duration " << o.duration * 1e6 << " us, restart "
            << r.report.restart << " of " << o.restarts << "\n";
  if (r.report.flagged) std::cout << "warning: verification differs from synthesis by more than 0.01\n";
  std::cout << "wrote " << path << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& rc, const std::string& wave, std::string target_text) {
  const Waveform w = load_waveform(wave);
  if (target_text.empty()) {
    if (w.meta.gate.empty()) throw ValidationError("waveform has no gate metadata; pass --target kind:variant");
    target_text = w.meta.gate + ":" + std::to_string(w.meta.variant > 0 ? w.meta.variant : 1);
  }
  LatticeConfig cfg = rc.lattice();
  cfg.depth = w.meta.depth;
  const GateTarget target = parse_target(target_text);
  const FidelityReport rep = verify_gate(w, target, cfg);
  std::cout << target.name() << " fidelity " << std::setprecision(6) << rep.fidelity << "\n";
  std::cout << "channel overlaps:";
  for (double c : rep.channel_overlaps) std::cout << " " << c;
  std::cout << "\nband populations:";
  for (double p : rep.band_populations) std::cout << " " << p;
  std::cout << "\nleakage " << rep.leakage << "\n";
  return kOk;
}

struct CircuitFlags {
  std::string circuit;
  std::string library = "gates";
};

Circuit load_circuit(const CircuitFlags& f, const GateLibrary& lib) {
  if (f.circuit.empty()) throw ValidationError("--circuit is required");
  return parse_circuit(read_text(f.circuit), &lib);
}

int cmd_stitch(const RunConfig& rc, const CircuitFlags& cf, const std::string& out, const std::string& awg,
               const std::string& plan_out) {
  const GateLibrary lib = GateLibrary::load(cf.library);
  const Circuit c = load_circuit(cf, lib);
  const StitchedWaveform sw = stitch(c, lib);
  const bool multi = sw.axes.size() > 1;
  std::cout << "stitched " << sw.axes.size() << " axis program(s), depth " << sw.depth << " E_r, circuit "
            << sw.circuit_hash << "\n";
  for (const auto& a : sw.axes) {
    std::cout << "axis " << a.axis << ": " << a.waveform.samples.size() << " samples, " << a.waveform.duration() * 1e3
              << " ms\n";
    if (!out.empty()) {
      Waveform w = a.waveform;
      w.meta.generator = provenance(rc);
      save_waveform(w, axis_path(out, a.axis, multi));
      std::cout << "wrote " << axis_path(out, a.axis, multi) << "\n";
    }
    if (!awg.empty()) {
      export_awg(sw, a.axis, axis_path(awg, a.axis, multi));
      std::cout << "wrote " << axis_path(awg, a.axis, multi) << "\n";
    }
  }
  const SegmentPlan plan = circuit_plan(c, lib, rc.lattice());
  print_plan(plan);
  if (!plan_out.empty()) {
    json j = plan_json(plan);
    j["provenance"] = provenance(rc);
    write_text(plan_out, j.dump(1) + "\n");
    std::cout << "wrote " << plan_out << "\n";
  }
  return kOk;
}

struct RunFlags {
  std::string signal = "none";
  std::string extra_hold;
  std::string snapshot_every;
  std::string out;
};

int cmd_run(const RunConfig& rc, const CircuitFlags& cf, const RunFlags& f) {
  const LatticeConfig cfg = rc.lattice();
  const GateLibrary lib = GateLibrary::load(cf.library);
  const Circuit c = load_circuit(cf, lib);
  const StitchedWaveform sw = stitch(c, lib);
  const SegmentPlan plan = circuit_plan(c, lib, cfg);
  const SignalSpec signal = SignalSpec::parse(f.signal);
  const ScanOptions so = rc.scan_options();
  EvolveOptions eo = so.evolve;
  if (!f.snapshot_every.empty()) eo.snapshot_every = seconds_of(f.snapshot_every);
  const double extra = f.extra_hold.empty() ? 0.0 : seconds_of(f.extra_hold);
  const bool two_d = sw.axis("z") != nullptr || signal.kind == SignalSpec::Kind::Rotation;
  // Center the z packet on the plan's z range so the loop fits the grid.
  const auto [z_lo, z_hi] = plan.extent(1);
  const double center_z = -0.5 * (z_lo + z_hi);
  const double excursion = std::max(plan.max_excursion(0), 0.5 * (z_hi - z_lo));
  eo.max_excursion = excursion + 4.0 * cfg.recoil_velocity() * extra +
                     (signal.kind == SignalSpec::Kind::Acceleration
                          ? 0.5 * std::abs(signal.magnitude) * std::pow(sw.duration() + extra, 2)
                          : 0.0);
  GridTrajectory tr;
  if (two_d) {
    const GridWavefunction psi =
        prepare_wavepacket_2d(cfg, rc.envelope_sites, 0, 0, so.axis_x, so.axis_z, 0.0, center_z);
    tr = evolve_grid_2d(psi, sw.axis_waveform("x"), sw.axis_waveform("z"), signal, extra, eo);
  } else {
    const GridWavefunction psi = prepare_wavepacket(cfg, rc.envelope_sites, 0, so.axis_x);
    tr = evolve_grid_1d(psi, sw.axis_waveform("x"), signal, extra, eo);
  }
  const MomentumDistribution d = measure_momentum_orders(tr.final_state, 0, 5);
  std::cout << "# " << provenance(rc) << "\n";
  std::cout << "signal " << signal.to_string() << ", duration " << tr.final_state.time * 1e3 << " ms, norm drift "
            << tr.norm_drift << "\n";
  std::cout << "orders (x):";
  for (std::size_t k = 0; k < d.orders.size(); ++k) std::cout << " " << d.orders[k] << ":" << d.probabilities[k];
  std::cout << " residual:" << d.residual << "\n";
  if (!f.out.empty()) {
    json j;
    j["provenance"] = provenance(rc);
    j["signal"] = signal.to_string();
    j["circuit_hash"] = sw.circuit_hash;
    j["norm_drift"] = tr.norm_drift;
    j["final_orders"] = d.probabilities;
    j["orders"] = d.orders;
    json snaps = json::array();
    for (const auto& s : tr.snapshots) {
      json js;
      js["t"] = s.time;
      js["orders"] = s.orders.probabilities;
      if (!s.density.positions.empty()) {
        js["centroid_right"] = s.density.centroid(0.0);
        js["centroid_left"] = s.density.centroid(-1e300, 0.0);
      }
      if (two_d) js["orders_z"] = s.orders_z.probabilities;
      snaps.push_back(js);
    }
    j["snapshots"] = snaps;
    write_text(f.out, j.dump(1) + "\n");
    std::cout << "wrote " << f.out << "\n";
  }
  return kOk;
}

struct ScanFlags {
  std::string sensor;
  std::string t1 = "3ms";
  std::string t2 = "3ms";
  std::string hold;
  std::string param;
  std::string range;
  double fringes = 0.0;
  int points = 41;
  std::string extra_hold;
  std::string out;
};

int cmd_scan(const RunConfig& rc, const CircuitFlags& cf, const ScanFlags& f) {
  const LatticeConfig cfg = rc.lattice();
  const GateLibrary lib = GateLibrary::load(cf.library);
  Circuit c;
  std::optional<SensorDesign> design;
  if (!f.sensor.empty()) {
    SensorDesign d;
    d.kind = parse_sensor_kind(f.sensor);
    d.T1 = seconds_of(f.t1);
    d.T2 = seconds_of(f.t2);
    if (!f.hold.empty()) d.hold = seconds_of(f.hold);
    c = sensor_circuit(d, lib, cfg);
    design = d;
  } else {
    c = load_circuit(cf, lib);
  }
  SignalSpec::Kind kind;
  if (!f.param.empty()) {
    kind = parse_param(f.param);
  } else if (design) {
    kind = sensor_signal(design->kind);
  } else {
    throw ValidationError("--param is required with --circuit");
  }
  std::vector<double> beta;
  if (!f.range.empty()) {
    beta = parse_range(f.range);
  } else if (design && f.fringes > 0.0) {
    const double span = fringe_span(*design, f.fringes, cfg);
    beta = linspace(-0.5 * span, 0.5 * span, f.points);
  } else {
    throw ValidationError("give --range lo:hi:n, or --sensor with --fringes");
  }
  const StitchedWaveform sw = stitch(c, lib);
  const SegmentPlan plan = circuit_plan(c, lib, cfg);
  ScanOptions so = rc.scan_options();
  if (!f.extra_hold.empty()) so.extra_hold = seconds_of(f.extra_hold);
  ScanResult scan = run_scan(sw, &plan, kind, beta, cfg, so);
  scan.provenance = provenance(rc);
  const std::string path = output_path(rc, f.out, "scan.json");
  write_text(path, scan.to_json());
  std::cout << "# " << provenance(rc) << "\n";
  std::cout << "scan of " << scan.parameter << " over " << beta.size() << " points in " << scan.seconds << " s ("
            << scan.settings << ")\n";
  std::size_t good = 0;
  for (bool fl : scan.flagged) good += fl ? 0 : 1;
  if (good >= 5) {
    const FringeFit fit = fit_fringe(scan.beta, scan.column(0));
    std::cout << "order-0 fringe: omega = " << fit.omega << " rad per " << scan.unit << ", amplitude " << fit.amplitude
              << ", rms " << fit.rms << "\n";
    if (design) {
      const double slope = analytic_phase(*design, 1.0, cfg);
      std::cout << "closed form: " << slope << " rad per " << scan.unit << ", ratio " << fit.omega / slope << "\n";
    }
  }
  std::cout << "wrote " << path << "\n";
  if (!scan.flags.empty()) {
    std::cerr << "flagged points:\n";
    for (const auto& fl : scan.flags) std::cerr << "  " << fl << "\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_sense(const RunConfig& rc, const std::string& scan_path, double atoms, const std::string& shots_text,
              int per_decade, bool include_residual, const std::string& out) {
  const ScanResult scan = ScanResult::from_json(read_text(scan_path));
  const auto colon = shots_text.find(':');
  if (colon == std::string::npos) throw ValidationError("--shots must be lo:hi");
  double lo = 0.0;
  double hi = 0.0;
  try {
    lo = std::stod(shots_text.substr(0, colon));
    hi = std::stod(shots_text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("malformed --shots '" + shots_text + "'");
  }
  const auto info = cfi(scan, include_residual);
  const SensitivityReport rep = sensitivity(info, atoms, shot_grid(lo, hi, per_decade));
  std::cout << "# " << provenance(rc) << "\n";
  std::cout << "Fisher information over the scan: min " << rep.info_min << ", max " << rep.info_max << " per ("
            << scan.unit << ")^2\n";
  if (rep.unbounded) std::cout << "warning: the Fisher information vanishes somewhere; the upper band is unbounded\n";
  std::ostringstream os;
  os << "# " << provenance(rc) << "\n# scan provenance: " << scan.provenance << "\n# parameter: " << scan.parameter
     << " [" << scan.unit << "], atoms " << atoms << "\nshots,dbeta_min,dbeta_max\n"
     << std::setprecision(10);
  for (const auto& r : rep.rows) os << r.shots << "," << r.dbeta_min << "," << r.dbeta_max << "\n";
  const std::string path = output_path(rc, out, "sensitivity.csv");
  write_text(path, os.str());
  const auto& first = rep.rows.front();
  std::cout << "s = " << first.shots << ": " << first.dbeta_min << " .. " << first.dbeta_max << " " << scan.unit
            << "\nwrote " << path << "\n";
  return kOk;
}

int cmd_export(const RunConfig& rc, const std::string& wave, const CircuitFlags& cf, const std::string& axis,
               const std::string& out) {
  if (out.empty()) throw ValidationError("--out is required");
  if (!wave.empty()) {
    const Waveform w = load_waveform(wave);
    export_awg(w, out, "# source: " + w.label + " " + w.meta.provenance + "\n# " + provenance(rc) + "\n");
  } else {
    const GateLibrary lib = GateLibrary::load(cf.library);
    const StitchedWaveform sw = stitch(load_circuit(cf, lib), lib);
    export_awg(sw, axis, out);
  }
  std::cout << "wrote " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch-band atom interferometry toolkit"};
  app.set_version_flag("--version", std::string("bbi ") + kVersion);
  app.require_subcommand(1);

  CommonFlags common;

  auto* bands = app.add_subcommand("bands", "Band energies and momentum composition");
  int q_points = 64;
  int n_bands = 6;
  std::string bands_out;
  bands->add_option("--q-points", q_points, "Quasimomentum samples for --out");
  bands->add_option("--bands", n_bands, "Number of bands");
  bands->add_option("--out", bands_out, "CSV of E_n(q)");
  common.attach(bands, false);

  auto* synth = app.add_subcommand("synth", "Synthesize a gate waveform by optimal control");
  SynthFlags sf;
  synth->add_option("--gate", sf.gate, "Gate kind: bs, asym, mirror, cbbs, sh, echo")->required();
  synth->add_option("--variant", sf.variant, "Target variant (1 or 2)");
  synth->add_option("--duration", sf.duration, "Gate duration, e.g. 150us (default per gate)");
  synth->add_option("--bin", sf.bin, "Control bin width, e.g. 1us");
  synth->add_option("--restarts", sf.restarts, "Random restarts");
  synth->add_option("--iterations", sf.iterations, "Optimizer iterations per restart");
  synth->add_option("--out", sf.out, "Output waveform JSON");
  common.attach(synth, false);

  auto* verify = app.add_subcommand("verify", "Re-propagate a waveform and report its fidelity");
  std::string verify_wave;
  std::string verify_target;
  verify->add_option("--wave", verify_wave, "Waveform JSON")->required();
  verify->add_option("--target", verify_target, "Target kind:variant (default from the file)");
  common.attach(verify, false);

  CircuitFlags cf;
  auto add_circuit = [&cf](CLI::App* sub) {
    sub->add_option("--circuit", cf.circuit, "Circuit file (.bbi)");
    sub->add_option("--library", cf.library, "Gate library directory");
  };

  auto* stitch_cmd = app.add_subcommand("stitch", "Stitch a circuit into per-axis waveforms");
  std::string stitch_out;
  std::string stitch_awg;
  std::string stitch_plan;
  add_circuit(stitch_cmd);
  stitch_cmd->add_option("--out", stitch_out, "Stitched waveform JSON");
  stitch_cmd->add_option("--awg", stitch_awg, "AWG CSV export");
  stitch_cmd->add_option("--plan", stitch_plan, "Segment plan JSON");
  common.attach(stitch_cmd, false);

  auto* run = app.add_subcommand("run", "Grid simulation of a circuit");
  RunFlags rf;
  add_circuit(run);
  run->add_option("--signal", rf.signal, "none, accel:<m/s^2>, grad:<1/s^2> or rot:<rad/s>");
  run->add_option("--extra-hold", rf.extra_hold, "Free evolution appended at the end, e.g. 7ms");
  run->add_option("--snapshot-every", rf.snapshot_every, "Snapshot interval, e.g. 500us");
  run->add_option("--out", rf.out, "Trajectory JSON");
  common.attach(run, true);

  auto* scan = app.add_subcommand("scan", "Signal scan with momentum-order readout");
  ScanFlags scf;
  add_circuit(scan);
  scan->add_option("--sensor", scf.sensor,
                   "Build the circuit: accelerometer, accelerometer-hold, gradiometer, gradiometer-hold, gyroscope");
  scan->add_option("--t1", scf.t1, "T (accelerometers) or T1, gate-center spacing");
  scan->add_option("--t2", scf.t2, "T2, gate-center spacing");
  scan->add_option("--hold", scf.hold, "Hold time T_H");
  scan->add_option("--param", scf.param, "Scanned parameter: a, g or omega");
  scan->add_option("--range", scf.range, "lo:hi:n (use --range=lo:hi:n for negative lo)");
  scan->add_option("--fringes", scf.fringes, "With --sensor: span this many fringes around zero");
  scan->add_option("--points", scf.points, "With --fringes: number of points");
  scan->add_option("--extra-hold", scf.extra_hold, "Free evolution before readout");
  scan->add_option("--out", scf.out, "Scan JSON");
  common.attach(scan, true);

  auto* sense = app.add_subcommand("sense", "Fisher information and sensitivity band from a scan");
  std::string sense_scan;
  double atoms = 1000.0;
  std::string shots = "1:10000";
  int per_decade = 10;
  bool with_residual = false;
  std::string sense_out;
  sense->add_option("--scan", sense_scan, "Scan JSON")->required();
  sense->add_option("--atoms", atoms, "Independent trials per shot N");
  sense->add_option("--shots", shots, "Shot range lo:hi");
  sense->add_option("--per-decade", per_decade, "Shot samples per decade");
  sense->add_flag("--include-residual", with_residual, "Count the residual channel as an outcome");
  sense->add_option("--out", sense_out, "CSV with columns shots,dbeta_min,dbeta_max");
  common.attach(sense, false);

  auto* exp = app.add_subcommand("export", "AWG CSV export of a waveform or circuit axis");
  std::string exp_wave;
  std::string exp_axis = "x";
  std::string exp_out;
  exp->add_option("--wave", exp_wave, "Waveform JSON");
  add_circuit(exp);
  exp->add_option("--axis", exp_axis, "Circuit axis to export");
  exp->add_option("--out", exp_out, "Output CSV")->required();
  common.attach(exp, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    const RunConfig rc = common.resolve();
    if (*bands) return cmd_bands(rc, q_points, n_bands, bands_out);
    if (*synth) return cmd_synth(rc, sf);
    if (*verify) return cmd_verify(rc, verify_wave, verify_target);
    if (*stitch_cmd) return cmd_stitch(rc, cf, stitch_out, stitch_awg, stitch_plan);
    if (*run) return cmd_run(rc, cf, rf);
    if (*scan) return cmd_scan(rc, cf, scf);
    if (*sense) return cmd_sense(rc, sense_scan, atoms, shots, per_decade, with_residual, sense_out);
    if (*exp) return cmd_export(rc, exp_wave, cf, exp_axis, exp_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
