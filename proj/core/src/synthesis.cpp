#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "bbi/errors.hpp"
#include "bbi/fewmode.hpp"
#include "bbi/gatesynth.hpp"
#include "bbi/workers.hpp"

namespace bbi {

int SynthesisOptions::bins() const { return static_cast<int>(std::llround(duration / control_bin)); }

void SynthesisOptions::validate() const {
  if (!(duration > 0.0) || !(control_bin > 0.0)) throw ValidationError("synthesis duration and bin must be positive");
  const double ratio = duration / control_bin;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw ValidationError("synthesis duration must be an integral number of control bins");
  }
  if (bins() < 3) throw ValidationError("synthesis needs at least three control bins");
  const double periods = control_bin / kAwgSamplePeriod;
  if (std::abs(periods - std::round(periods)) > 1e-6) {
    throw ValidationError("control bin must be a multiple of 50 ns");
  }
  if (!(fidelity_goal > 0.9 && fidelity_goal < 1.0)) throw ValidationError("fidelity goal must lie in (0.9, 1)");
  if (!(amplitude_bound > 0.0) || amplitude_bound > 2.0 * constants::pi) {
    throw ValidationError("amplitude bound must lie in (0, 2 pi]");
  }
  if (restarts < 1 || max_iterations < 1) throw ValidationError("restarts and iterations must be positive");
}

SynthesisOptions default_synthesis_options(GateKind kind) {
  SynthesisOptions o;
  switch (kind) {
    case GateKind::Beamsplitter: o.duration = 150e-6; break;
    case GateKind::Mirror: o.duration = 250e-6; break;  // 200 us stalls near F = 0.86
    default: o.duration = 200e-6; break;
  }
  return o;
}

// ---------------------------------------------------------------------------
// Control problem

ControlProblem::ControlProblem(const GateTarget& target, const LatticeConfig& config, double bin_seconds)
    : target_(target), config_(config), dim_(target.dimension()) {
  target_.validate();
  config_.validate();
  basis_ = materialize(target_, config_);
  step0_ = hermitian_propagator(build_hamiltonian(config_, 0.0, 0.0), config_.to_recoil_time(bin_seconds));
  const int n = config_.truncation;
  orders_.resize(config_.dimension());
  for (int i = 0; i < config_.dimension(); ++i) orders_(i) = i - n;
}

void ControlProblem::apply_step(double phi, StateVector& v) const {
  // exp(-i H(phi) dt) = D exp(-i H(0) dt) D^dagger, D = diag(exp(i l phi))
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= std::polar(1.0, -orders_(i) * phi);
  v = step0_ * v;
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= std::polar(1.0, orders_(i) * phi);
}

void ControlProblem::apply_step_adjoint(double phi, StateVector& v) const {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= std::polar(1.0, -orders_(i) * phi);
  v = step0_.adjoint() * v;
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= std::polar(1.0, orders_(i) * phi);
}

double ControlProblem::fidelity(const std::vector<double>& phases, std::vector<double>* grad) const {
  const std::size_t k_bins = phases.size();
  const double norm = 1.0 / (static_cast<double>(dim_) * dim_);

  // forward[k][j]: state of channel j after k bins
  std::vector<std::vector<StateVector>> forward;
  if (grad) forward.reserve(k_bins + 1);
  std::vector<StateVector> psi = basis_.inputs;
  if (grad) forward.push_back(psi);
  for (std::size_t k = 0; k < k_bins; ++k) {
    for (auto& v : psi) apply_step(phases[k], v);
    if (grad) forward.push_back(psi);
  }
  cplx z = 0.0;
  for (int j = 0; j < dim_; ++j) z += basis_.targets[j].dot(psi[j]);
  const double f = std::norm(z) * norm;
  if (!grad) return f;

  // dz/dphi_k = i (g_k - g_{k-1}),  g_k = sum_j <chi_j(k)| L |psi_j(k)>
  grad->assign(k_bins, 0.0);
  std::vector<StateVector> chi = basis_.targets;
  auto g_at = [&](std::size_t k) {
    cplx g = 0.0;
    for (int j = 0; j < dim_; ++j) g += chi[j].dot(orders_.cast<cplx>().cwiseProduct(forward[k][j]));
    return g;
  };
  cplx g_next = g_at(k_bins);
  for (std::size_t k = k_bins; k >= 1; --k) {
    for (auto& v : chi) apply_step_adjoint(phases[k - 1], v);
    const cplx g_prev = g_at(k - 1);
    const cplx dz = cplx(0.0, 1.0) * (g_next - g_prev);
    (*grad)[k - 1] = 2.0 * std::real(std::conj(z) * dz) * norm;
    g_next = g_prev;
  }
  return f;
}

void ControlProblem::analyze(const std::vector<double>& phases, FidelityReport& report) const {
  std::vector<StateVector> psi = basis_.inputs;
  for (double phi : phases) {
    for (auto& v : psi) apply_step(phi, v);
  }
  report.channel_overlaps.clear();
  for (int j = 0; j < dim_; ++j) report.channel_overlaps.push_back(std::norm(basis_.targets[j].dot(psi[j])));
  const int n_report = 6;
  const BandStructure bands = solve_bands(config_, std::vector<double>{0.0}, n_report);
  report.band_populations.assign(n_report, 0.0);
  for (int b = 0; b < n_report; ++b) {
    for (int j = 0; j < dim_; ++j) {
      report.band_populations[b] += std::norm(bands.states[0][b].coefficients.dot(psi[j])) / dim_;
    }
  }
  double inside = 0.0;
  for (int b : target_.output_bands) {
    if (b < n_report) inside += report.band_populations[b];
  }
  report.leakage = std::max(0.0, 1.0 - inside);
}

// ---------------------------------------------------------------------------
// Optimizer

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Band-limited seed: sine series with up to 10 harmonics, vanishing at both ends.
std::vector<double> seed_control(int bins, std::uint64_t master_seed, int restart) {
  std::mt19937_64 rng(splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(restart) + 1)));
  const int harmonics = 1 + static_cast<int>(uniform01(rng) * 10.0) % 10;
  std::vector<double> amp(harmonics);
  for (double& a : amp) a = 2.0 * uniform01(rng) - 1.0;
  std::vector<double> phi(bins, 0.0);
  for (int k = 0; k < bins; ++k) {
    const double t = (k + 0.5) / bins;
    for (int h = 0; h < harmonics; ++h) phi[k] += amp[h] * std::sin(constants::pi * (h + 1) * t);
  }
  double peak = 0.0;
  for (double p : phi) peak = std::max(peak, std::abs(p));
  const double scale = peak > 0.0 ? (constants::pi / 4.0) * (0.5 + 0.5 * uniform01(rng)) / peak : 0.0;
  for (double& p : phi) p *= scale;
  phi.front() = 0.0;
  phi.back() = 0.0;
  return phi;
}

struct Objective {
  const ControlProblem& problem;
  double weight;

  // Maximized: F - w * sum (phi_{k+1} - phi_k)^2. Endpoints are pinned, so the
  // free variables are phases[1..K-2].
  double operator()(const std::vector<double>& free, std::vector<double>& grad, double* fid, double* pen) const {
    const std::size_t k_bins = free.size() + 2;
    std::vector<double> phases(k_bins, 0.0);
    std::copy(free.begin(), free.end(), phases.begin() + 1);
    std::vector<double> g;
    const double f = problem.fidelity(phases, &g);
    double penalty = 0.0;
    std::vector<double> gp(k_bins, 0.0);
    for (std::size_t k = 0; k + 1 < k_bins; ++k) {
      const double d = phases[k + 1] - phases[k];
      penalty += d * d;
      gp[k + 1] += 2.0 * d;
      gp[k] -= 2.0 * d;
    }
    grad.resize(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) grad[i] = g[i + 1] - weight * gp[i + 1];
    if (fid) *fid = f;
    if (pen) *pen = weight * penalty;
    return f - weight * penalty;
  }
};

struct RestartOutcome {
  std::vector<double> control;
  double fidelity = 0.0;
  double penalty = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// Projected L-BFGS ascent with backtracking (Armijo) step control.
RestartOutcome optimize(const Objective& objective, std::vector<double> x, double bound, int max_iterations) {
  constexpr std::size_t kMemory = 12;
  auto project = [bound](std::vector<double>& v) {
    for (double& e : v) e = std::clamp(e, -bound, bound);
  };
  project(x);
  std::vector<double> g;
  double fid = 0.0;
  double pen = 0.0;
  double j = objective(x, g, &fid, &pen);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y) for f = -J
  int it = 0;
  int stalls = 0;
  for (; it < max_iterations; ++it) {
    if (inf_norm(g) < 1e-9 || fid > 1.0 - 1e-12) break;
    // two-loop recursion on the minimization gradient G = -g
    std::vector<double> q(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) q[i] = -g[i];
    std::vector<double> alpha(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      const auto& [s, y] = memory[m];
      alpha[m] = dot(s, q) / dot(y, s);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[m] * y[i];
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& e : q) e *= gamma;
    } else {
      const double scale = 0.05 / std::max(inf_norm(q), 1e-300);
      for (double& e : q) e *= scale;
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const auto& [s, y] = memory[m];
      const double beta = dot(y, q) / dot(y, s);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += s[i] * (alpha[m] - beta);
    }
    // q now approximates H G; ascent direction is -q
    std::vector<double> dir(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) dir[i] = -q[i];
    if (dot(dir, g) <= 0.0) {
      memory.clear();
      const double scale = 0.05 / std::max(inf_norm(g), 1e-300);
      for (std::size_t i = 0; i < g.size(); ++i) dir[i] = g[i] * scale;
    }

    double step = 1.0;
    bool accepted = false;
    std::vector<double> x_new(x.size());
    std::vector<double> g_new;
    double fid_new = 0.0;
    double pen_new = 0.0;
    double j_new = 0.0;
    for (int tries = 0; tries < 40; ++tries) {
      for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + step * dir[i];
      project(x_new);
      std::vector<double> dx(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x_new[i] - x[i];
      j_new = objective(x_new, g_new, &fid_new, &pen_new);
      if (j_new >= j + 1e-4 * dot(g, dx) && j_new > j) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (memory.empty()) break;
      memory.clear();
      continue;
    }
    std::vector<double> s(x.size());
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = -(g_new[i] - g[i]);
    }
    if (dot(s, y) > 1e-16) {
      memory.emplace_back(std::move(s), std::move(y));
      if (memory.size() > kMemory) memory.pop_front();
    }
    stalls = (j_new - j < 1e-12) ? stalls + 1 : 0;
    x = std::move(x_new);
    g = std::move(g_new);
    j = j_new;
    fid = fid_new;
    pen = pen_new;
    if (stalls >= 8) break;
  }
  RestartOutcome out;
  out.control = std::move(x);
  out.fidelity = fid;
  out.penalty = pen;
  out.gradient_norm = std::sqrt(dot(g, g));
  out.iterations = it;
  return out;
}

}  // namespace

SynthesisResult synthesize(const GateTarget& target, const LatticeConfig& config, const SynthesisOptions& opts) {
  opts.validate();
  target.validate();
  const LatticeConfig cfg = config.with_truncation(opts.truncation);
  const ControlProblem problem(target, cfg, opts.control_bin);
  const Objective objective{problem, opts.smoothness_weight};
  const int bins = opts.bins();

  std::vector<RestartOutcome> outcomes(opts.restarts);
  parallel_for(static_cast<std::size_t>(opts.restarts), opts.workers, [&](std::size_t r) {
    const std::vector<double> seed = seed_control(bins, opts.seed, static_cast<int>(r));
    std::vector<double> free(seed.begin() + 1, seed.end() - 1);
    outcomes[r] = optimize(objective, std::move(free), opts.amplitude_bound, opts.max_iterations);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r) {
    if (outcomes[r].fidelity > outcomes[best].fidelity) best = r;
  }
  if (outcomes[best].fidelity < 0.90) {
    std::ostringstream msg;
    msg << "synthesis of " << target.name() << " failed: no restart reached 0.90 (";
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
      msg << (r ? ", " : "") << "#" << r << "=" << outcomes[r].fidelity;
    }
    msg << ")";
    throw NumericalError(msg.str());
  }

  SynthesisResult result;
  const RestartOutcome& win = outcomes[best];
  result.control.assign(bins, 0.0);
  std::copy(win.control.begin(), win.control.end(), result.control.begin() + 1);

  FidelityReport& rep = result.report;
  rep.fidelity = win.fidelity;
  rep.gradient_norm = win.gradient_norm;
  rep.iterations = win.iterations;
  rep.restart = static_cast<int>(best);
  rep.penalty = win.penalty;
  for (const auto& o : outcomes) rep.restart_fidelities.push_back(o.fidelity);
  problem.analyze(result.control, rep);

  Waveform coarse;
  coarse.samples = result.control;
  coarse.sample_period = opts.control_bin;
  Waveform w = resample_hold(coarse, kAwgSamplePeriod);
  w.label = target.name();
  w.meta.depth = config.depth;
  w.meta.fidelity = win.fidelity;
  w.meta.seed = opts.seed;
  w.meta.gate = std::string(gate_kind_name(target.kind));
  w.meta.variant = target.variant;
  w.meta.role = gate_role(target.kind);
  w.finalize();

  const FidelityReport check = verify_gate(w, target, config);
  rep.verification_fidelity = check.fidelity;
  rep.flagged = std::abs(check.fidelity - rep.fidelity) > 0.01;
  result.waveform = std::move(w);
  return result;
}

FidelityReport verify_gate(const Waveform& w, const GateTarget& target, const LatticeConfig& config) {
  target.validate();
  const LatticeConfig cfg = config.with_truncation(kVerificationTruncation);
  Waveform fine = w;
  if (w.sample_period > kAwgSamplePeriod * (1.0 + 1e-12)) fine = resample_hold(w, kAwgSamplePeriod);
  const TargetBasis basis = materialize(target, cfg);
  const int d = target.dimension();
  const int n_report = 6;
  const BandStructure bands = solve_bands(cfg, std::vector<double>{0.0}, n_report);

  FidelityReport rep;
  rep.band_populations.assign(n_report, 0.0);
  cplx z = 0.0;
  for (int j = 0; j < d; ++j) {
    const StateVector out = propagate_fewmode(basis.inputs[j], fine, cfg, 0.0).final_state;
    const cplx overlap = basis.targets[j].dot(out);
    z += overlap;
    rep.channel_overlaps.push_back(std::norm(overlap));
    for (int b = 0; b < n_report; ++b) {
      rep.band_populations[b] += std::norm(bands.states[0][b].coefficients.dot(out)) / d;
    }
  }
  rep.fidelity = std::clamp(std::norm(z) / (static_cast<double>(d) * d), 0.0, 1.0);
  rep.verification_fidelity = rep.fidelity;
  double inside = 0.0;
  for (int b : target.output_bands) {
    if (b < n_report) inside += rep.band_populations[b];
  }
  rep.leakage = std::max(0.0, 1.0 - inside);
  return rep;
}

}  // namespace bbi
