// Acceptance suite. Prints one PASS/FAIL line per criterion; with a number
// argument only that criterion runs. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bbi/circuit.hpp"
#include "bbi/errors.hpp"
#include "bbi/fewmode.hpp"
#include "bbi/gatesynth.hpp"
#include "bbi/grid.hpp"
#include "bbi/lattice.hpp"
#include "bbi/sensing.hpp"

using namespace bbi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const GateLibrary& library() {
  static const GateLibrary lib = GateLibrary::load(BBI_GATE_DIR);
  return lib;
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// Least-squares line y = a t + b.
std::pair<double, double> line_fit(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const double a = (n * sty - st * sy) / (n * stt - st * st);
  return {a, (sy - a * st) / n};
}

// Peak-window centroids of the clouds on either side of the origin.
constexpr double kWindow = 12e-6;
double right_cloud(const DensityProfile& d) { return d.peak_centroid(0.0, 1e300, kWindow); }
double left_cloud(const DensityProfile& d) { return d.peak_centroid(-1e300, 0.0, kWindow); }

Waveform constant(double value, std::size_t samples) {
  Waveform w;
  w.samples.assign(samples, value);
  return w;
}

// Fringe frequency of P(0) over a centered scan of a sensor, relative to the
// closed-form slope.
struct FringeCheck {
  double measured = 0.0;
  double expected = 0.0;
  double seconds = 0.0;
  int flagged = 0;
};

FringeCheck scan_fringe(const SensorDesign& d, double span, int points, ScanOptions options = {}) {
  const LatticeConfig cfg;
  const auto circuit = sensor_circuit(d, library(), cfg);
  const auto plan = circuit_plan(circuit, library(), cfg);
  if (!plan.closed) throw NumericalError("sensor plan does not close");
  const auto stitched = stitch(circuit, library());
  const auto kind = sensor_signal(d.kind);
  const auto scan = run_scan(stitched, &plan, kind, linspace(-span / 2, span / 2, points), cfg, options);
  FringeCheck r;
  r.expected = analytic_phase(d, 1.0, cfg);
  r.measured = fit_fringe(scan.beta, scan.column(0)).omega;
  r.seconds = scan.seconds;
  r.flagged = static_cast<int>(std::count(scan.flagged.begin(), scan.flagged.end(), true));
  return r;
}

// ---------------------------------------------------------------------------

Outcome band_composition() {
  LatticeConfig cfg;
  bool ok = true;
  std::string detail;
  for (int n : {3, 4}) {
    const auto d = momentum_composition(bloch_state(cfg, n));
    const double plus = d.at(2);
    const double minus = d.at(-2);
    ok = ok && std::abs(plus - 0.474) <= 0.005 && std::abs(minus - 0.474) <= 0.005;
    detail += fmt("band %d P(+2) = %.5f P(-2) = %.5f P(0) = %.1e; ", n, plus, minus, d.at(0));
    if (n == 4) ok = ok && d.at(0) < 1e-12;
  }
  return {ok, detail + "want 0.474 +- 0.005 each"};
}

Outcome gate_synthesis() {
  const LatticeConfig cfg;
  double worst = 1.0;
  std::string worst_name;
  double bs_best = 0.0;
  double bs_duration = 0.0;
  for (GateKind k : designed_gate_kinds()) {
    for (int v : {1, 2}) {
      const auto target = gate_target(k, v);
      const auto opts = default_synthesis_options(k);
      const auto r = synthesize(target, cfg, opts);
      std::printf("  %-18s %4.0f us  F = %.6f\n", target.name().c_str(), opts.duration * 1e6, r.report.fidelity);
      if (r.report.fidelity < worst) {
        worst = r.report.fidelity;
        worst_name = target.name();
      }
      if (k == GateKind::Beamsplitter && r.report.fidelity > bs_best) {
        bs_best = r.report.fidelity;
        bs_duration = opts.duration;
      }
    }
  }
  const bool ok = worst >= 0.90 && bs_best >= 0.99 && bs_duration <= 150e-6 + 1e-12;
  return {ok, fmt("worst F = %.6f (%s), beamsplitter F = %.6f at %.0f us", worst, worst_name.c_str(), bs_best,
                  bs_duration * 1e6)};
}

Outcome beamsplitter_kinematics() {
  const LatticeConfig cfg;
  const auto& bs = library().resolve("BS1");
  const auto psi = prepare_wavepacket(cfg, 20, 0);
  EvolveOptions o;
  o.snapshot_every = 250e-6;
  o.snapshot_orders = false;
  const auto tr = evolve_grid_1d(psi, bs, SignalSpec::none(), 7e-3, o);
  std::vector<double> t, xr, xl;
  for (const auto& s : tr.snapshots) {
    if (s.time < bs.duration() + 1e-3) continue;
    t.push_back(s.time);
    xr.push_back(right_cloud(s.density));
    xl.push_back(left_cloud(s.density));
  }
  const double v4 = 4.0 * cfg.recoil_velocity();
  const double vr = line_fit(t, xr).first / v4;
  const double vl = line_fit(t, xl).first / v4;
  const auto end = density_snapshot(tr.final_state);
  const double sep = right_cloud(end) - left_cloud(end);
  const bool ok = within(sep, 240e-6, 0.15) && within(vr, 1.0, 0.02) && within(vl, -1.0, 0.02);
  return {ok, fmt("separation %.1f um (240 +- 15%%), speeds %+.4f / %+.4f x 4 v_r (+-2%%)", sep * 1e6, vr, vl)};
}

Outcome mirror_closure() {
  const LatticeConfig cfg;
  const auto circuit = parse_circuit("axis x { gate BS1; wait 4ms; gate MIRROR1; wait 4ms; }");
  const auto w = stitch(circuit, library()).axes[0].waveform;
  const auto& mirror = library().resolve("MIRROR1");
  const double mirror_end = 150e-6 + 4e-3 + mirror.duration();
  const auto psi = prepare_wavepacket(cfg, 20, 0);
  EvolveOptions o;
  o.snapshot_every = 100e-6;
  o.snapshot_orders = false;
  const auto tr = evolve_grid_1d(psi, w, SignalSpec::none(), 0.5e-3, o);
  // Track both clouds on the way in while they are well apart, then
  // intersect the two straight tracks.
  std::vector<double> t, xr, xl;
  for (const auto& s : tr.snapshots) {
    if (s.time < mirror_end + 0.3e-3) continue;
    const double r = right_cloud(s.density);
    const double l = left_cloud(s.density);
    if (r - l < 30e-6) continue;
    t.push_back(s.time);
    xr.push_back(r);
    xl.push_back(l);
  }
  if (t.size() < 5) return {false, "too few separated snapshots after the mirror"};
  const auto [ar, br] = line_fit(t, xr);
  const auto [al, bl] = line_fit(t, xl);
  const double tc = (bl - br) / (ar - al);
  const double xc = ar * tc + br;
  const bool ok = std::abs(xc) < 5e-6;
  return {ok, fmt("clouds cross at x = %+.2f um (|x| < 5 um), t = %.3f ms", xc * 1e6, tc * 1e3)};
}

// The part of a 1D state on one side of x = 0, renormalized.
GridWavefunction one_side(const GridWavefunction& psi, bool right) {
  auto out = psi;
  const auto& ax = psi.axes.at(0);
  for (int i = 0; i < ax.points(); ++i) {
    if ((ax.position(i) >= 0.0) != right) out.psi[i] = 0.0;
  }
  out.normalize();
  return out;
}

Outcome split_hold_localization() {
  const LatticeConfig cfg;
  const auto circuit = parse_circuit("axis x { gate BS1; wait 1ms; gate SH1; }");
  const auto w = stitch(circuit, library()).axes[0].waveform;
  const auto psi = prepare_wavepacket(cfg, 20, 0);
  const auto held = evolve_grid_1d(psi, w, SignalSpec::none()).final_state;
  const auto e = band_energies(cfg, 0.0, 2);
  const double f_band = (e[1] - e[0]) * cfg.recoil_frequency();
  // Hold each cloud for 4 ms in the lattice as the gate left it, sampling the
  // order populations well above the vibrational frequency. The clouds hold
  // opposite superpositions of bands 0 and 1, and band 1 is odd, so the beat
  // shows in each cloud's order asymmetry and cancels in the total.
  EvolveOptions o;
  o.snapshot_every = 5e-6;
  o.snapshot_density = false;
  o.max_excursion = 5e-6;
  bool ok = true;
  std::string detail;
  for (bool right : {true, false}) {
    const auto start = one_side(held, right);
    const auto tr = evolve_grid_1d(start, constant(w.samples.back(), 1), SignalSpec::none(), 4e-3, o);
    const double x0 = right ? right_cloud(density_snapshot(start)) : left_cloud(density_snapshot(start));
    const auto d1 = density_snapshot(tr.final_state);
    const double move = std::abs((right ? right_cloud(d1) : left_cloud(d1)) - x0);
    std::vector<double> times;
    for (const auto& s : tr.snapshots) times.push_back(s.time);
    const auto up = order_series(tr.snapshots, 1);
    const auto down = order_series(tr.snapshots, -1);
    std::vector<double> asym(up.size());
    for (std::size_t k = 0; k < up.size(); ++k) asym[k] = up[k] - down[k];
    const double f = vibrational_spectrum(times, asym);
    ok = ok && move < 1e-6 && within(f, f_band, 0.10);
    detail += fmt("%s cloud drift %.3f um, P(+1) - P(-1) at %.0f Hz; ", right ? "right" : "left", move * 1e6, f);
  }
  return {ok, detail + fmt("want < 1 um over 4 ms and %.0f Hz +- 10%%", f_band)};
}

Outcome echo_round_trip() {
  const LatticeConfig cfg = LatticeConfig{}.with_truncation(kVerificationTruncation);
  const auto circuit = parse_circuit("axis x { repeat 2 { gate ECHO2; } }");
  const auto w = stitch(circuit, library()).axes[0].waveform;
  const auto ground = bloch_state(cfg, 0);
  const auto r = propagate_fewmode(ground, w, cfg);
  const double f = state_fidelity(r.final_state, ground.coefficients);
  const auto mid = propagate_fewmode(ground, library().resolve("ECHO2"), cfg);
  const double f1 = state_fidelity(mid.final_state, bloch_state(cfg, 1).coefficients);
  return {f >= 0.95, fmt("|<0|E E|0>|^2 = %.6f (>= 0.95), |<1|E|0>|^2 = %.6f", f, f1)};
}

Outcome accelerometer_fringe() {
  SensorDesign d;
  const double span = 2e-3 * constants::standard_gravity;
  const auto r = scan_fringe(d, span, 41);
  const double ratio = r.measured / r.expected;
  const bool ok = within(ratio, 1.0, 0.05) && r.flagged == 0;
  return {ok, fmt("fringe %.2f rad/(m/s^2) vs 2pT^2/hbar = %.2f, ratio %.4f (+-5%%), scan %.0f s", r.measured,
                  r.expected, ratio, r.seconds)};
}

Outcome hold_enhancement() {
  const double span = 2e-3 * constants::standard_gravity;
  SensorDesign plain;
  SensorDesign hold;
  hold.kind = SensorKind::AccelerometerHold;
  hold.hold = 16e-3;
  const auto a = scan_fringe(plain, span, 41);
  const auto h = scan_fringe(hold, span, 41);
  const double gain = h.measured / a.measured;
  const double want = (hold.T1 + hold.hold) / hold.T1;
  const bool ok = within(gain, want, 0.05) && a.flagged == 0 && h.flagged == 0;
  return {ok, fmt("hold/plain fringe ratio %.4f vs (T+T_H)/T = %.4f (+-5%%); hold fringe / closed form %.4f", gain,
                  want, h.measured / h.expected)};
}

Outcome gradiometer_fringe() {
  const LatticeConfig cfg;
  SensorDesign g;
  g.kind = SensorKind::Gradiometer;
  SensorDesign gh = g;
  gh.kind = SensorKind::GradiometerHold;
  gh.hold = 8e-3;
  // Order populations are bilinear in the four path amplitudes, and a
  // gradient centered on the source treats the two diamonds symmetrically,
  // so the readout may fringe at half the four-path phase. Three fringes of
  // the closed form keep at least one and a half readout periods in the fit.
  const auto a = scan_fringe(g, fringe_span(g, 3.0, cfg), 41);
  const auto b = scan_fringe(gh, fringe_span(gh, 3.0, cfg), 41);
  const double ra = a.measured / a.expected;
  const double rb = b.measured / b.expected;
  const bool ok = within(ra, 1.0, 0.05) && within(rb, 1.0, 0.05) && a.flagged == 0 && b.flagged == 0;
  return {ok, fmt("fringe / closed form: %.4f without hold, %.4f with 8 ms hold (+-5%%); scans %.0f s + %.0f s", ra, rb,
                  a.seconds, b.seconds)};
}

Outcome gyroscope() {
  const LatticeConfig cfg;
  SensorDesign d;
  d.kind = SensorKind::Gyroscope;
  const auto plan = circuit_plan(sensor_circuit(d, library(), cfg), library(), cfg);
  const double loop = plan.enclosed_area();
  ScanOptions o;
  o.axis_x = {256, 7};
  o.axis_z = {160, 7};
  o.envelope_sites = 8;
  o.evolve.rotation_step = 20e-6;
  const auto r = scan_fringe(d, fringe_span(d, 1.5, cfg), 13, o);
  const double ratio = r.measured / r.expected;
  const bool ok = within(ratio, 1.0, 0.10) && within(loop, 0.010e-6, 0.10) && r.flagged == 0;
  return {ok, fmt("fringe / closed form %.4f (+-10%%), loop area %.5f mm^2 (0.010 +- 10%%), scan %.0f s", ratio,
                  loop * 1e6, r.seconds)};
}

Outcome oracle_identity() {
  const LatticeConfig cfg;
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> ticks(20000, 120000);
  std::uniform_real_distribution<double> signal(-1.0, 1.0);
  double worst = 0.0;
  for (SensorKind k : all_sensor_kinds()) {
    for (int i = 0; i < 100; ++i) {
      SensorDesign d;
      d.kind = k;
      d.T1 = ticks(rng) * 50e-9;
      d.T2 = ticks(rng) * 50e-9;
      if (k == SensorKind::AccelerometerHold || k == SensorKind::GradiometerHold) d.hold = ticks(rng) * 100e-9;
      const auto plan = circuit_plan(sensor_circuit(d, library(), cfg), library(), cfg);
      const double beta = signal(rng);
      const double a = analytic_phase(d, beta, cfg);
      const double p = path_action(plan, SignalSpec{sensor_signal(k), beta}, cfg);
      worst = std::max(worst, std::abs(p - a) / std::abs(a));
    }
  }
  const auto beta = linspace(0.1, 3.0, 2901);
  std::vector<std::vector<double>> probs;
  for (double b : beta) probs.push_back({0.5 * (1.0 + std::cos(b)), 0.5 * (1.0 - std::cos(b))});
  const auto info = cfi(beta, probs);
  double cfi_err = 0.0;
  for (std::size_t i = 1; i + 1 < info.size(); ++i) cfi_err = std::max(cfi_err, std::abs(info[i] - 1.0));
  const bool ok = worst <= 1e-10 && cfi_err <= 1e-6;
  return {ok, fmt("path action vs closed form: worst relative error %.2e over 500 draws (<= 1e-10); "
                  "two-outcome CFI error %.2e (<= 1e-6)",
                  worst, cfi_err)};
}

Outcome property_suites() {
  const LatticeConfig cfg;
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  // Norm and energy conservation in a static lattice.
  {
    const auto psi = prepare_wavepacket(cfg, 20, 2, GridAxis{128, 8});
    const auto r = evolve_grid_1d(psi, constant(0.0, 4000), SignalSpec::none());
    check(r.norm_drift < 1e-12, "grid norm");
    // Split steps conserve energy to O(dt^2).
    const double e0 = energy_expectation(psi);
    check(std::abs(energy_expectation(r.final_state) - e0) < 1e-6 * std::abs(e0), "grid energy");
    const auto fm = propagate_fewmode(bloch_state(cfg, 0), library().resolve("MIRROR1"), cfg);
    check(std::abs(fm.final_state.norm() - 1.0) < 1e-10, "few-mode norm");
  }
  // Adjoint gradient against central differences.
  {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (GateKind k : designed_gate_kinds()) {
      const ControlProblem p(gate_target(k, 1), cfg, 1e-6);
      std::vector<double> x(20);
      for (double& v : x) v = u(rng);
      std::vector<double> g;
      p.fidelity(x, &g);
      double worst = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        auto hi = x, lo = x;
        hi[i] += 1e-5;
        lo[i] -= 1e-5;
        const double fd = (p.fidelity(hi) - p.fidelity(lo)) / 2e-5;
        worst = std::max(worst, std::abs(fd - g[i]));
        scale = std::max(scale, std::abs(g[i]));
      }
      check(worst <= 1e-5 * scale, std::string("gradient ") + std::string(gate_kind_name(k)));
    }
  }
  // Reverse and negate are involutions, also through the circuit layer.
  {
    for (const auto& name : library().names()) {
      const auto& w = library().resolve(name);
      check(reverse(reverse(w)).samples == w.samples && negate(negate(w)).samples == w.samples, "involution " + name);
    }
    const auto a = stitch(parse_circuit("axis x { gate CBBS2 rev neg; }"), library()).axes[0].waveform;
    check(reverse(negate(a)).samples == library().resolve("CBBS2").samples, "circuit modifiers");
  }
  // Determinism under a fixed seed.
  {
    auto o = default_synthesis_options(GateKind::Beamsplitter);
    o.restarts = 2;
    o.max_iterations = 60;
    o.seed = 17;
    const auto t = gate_target(GateKind::Beamsplitter, 1);
    check(synthesize(t, cfg, o).control == synthesize(t, cfg, o).control, "synthesis determinism");
    const auto circuit = parse_circuit("axis x { gate BS1; wait 200us; gate BS1 rev; }");
    const auto sw = stitch(circuit, library());
    ScanOptions so;
    so.axis_x = {128, 8};
    const auto s1 = run_scan(sw, nullptr, SignalSpec::Kind::Acceleration, {0.0, 0.5, 1.0}, cfg, so);
    so.workers = 2;
    const auto s2 = run_scan(sw, nullptr, SignalSpec::Kind::Acceleration, {0.0, 0.5, 1.0}, cfg, so);
    check(s1.probabilities == s2.probabilities, "scan determinism");
  }
  // Time-step halving.
  {
    const auto circuit = parse_circuit("axis x { gate BS1; wait 1ms; gate MIRROR1; }");
    const auto w = stitch(circuit, library()).axes[0].waveform;
    const auto psi = prepare_wavepacket(cfg, 20, 0, GridAxis{256, 8});
    EvolveOptions coarse;
    coarse.hold_step = 1e-6;
    EvolveOptions fine = coarse;
    fine.hold_step = 0.5e-6;
    const auto a = measure_momentum_orders(evolve_grid_1d(psi, w, SignalSpec::acceleration(0.05), 0, coarse).final_state);
    const auto b = measure_momentum_orders(evolve_grid_1d(psi, w, SignalSpec::acceleration(0.05), 0, fine).final_state);
    double diff = 0.0;
    for (int m = -3; m <= 3; ++m) diff = std::max(diff, std::abs(a.at(m) - b.at(m)));
    check(diff < 1e-4, "grid hold-step halving");
    const auto g = library().resolve("ECHO2");
    const auto f1 = propagate_fewmode(bloch_state(cfg, 0), g, cfg).final_state;
    const auto f2 = propagate_fewmode(bloch_state(cfg, 0), resample_hold(g, 25e-9), cfg).final_state;
    check((f1 - f2).norm() < 1e-10, "few-mode step halving");
  }
  std::string detail = failed.empty() ? "norm, energy, gradient, involution, determinism and step-halving checks green"
                                      : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "band composition", 1, band_composition},
      {2, "gate synthesis", 1800, gate_synthesis},
      {3, "beamsplitter kinematics", 120, beamsplitter_kinematics},
      {4, "mirror closure", 300, mirror_closure},
      {5, "split & hold localization", 300, split_hold_localization},
      {6, "echo round trip", 60, echo_round_trip},
      {7, "accelerometer fringe law", 1800, accelerometer_fringe},
      {8, "hold enhancement", 2700, hold_enhancement},
      {9, "gradiometer fringe law", 3600, gradiometer_fringe},
      {10, "gyroscope", 7200, gyroscope},
      {11, "oracle identity", 60, oracle_identity},
      {12, "property suites", 600, property_suites},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %-28s %s  %s; %.1f s (limit %.0f s)%s\n", c.number, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), s, c.limit_seconds, in_time ? "" : " over time");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
