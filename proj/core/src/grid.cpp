#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "bbi/errors.hpp"
#include "bbi/grid.hpp"
#include "fft.hpp"
#include "grid_internal.hpp"

namespace bbi {

double GridAxis::spacing() const { return constants::pi / points_per_site; }
double GridAxis::length() const { return constants::pi * sites; }
double GridAxis::position(int i) const { return (i - points() / 2) * spacing(); }

double GridAxis::wavenumber(int j) const {
  const int n = points();
  const int s = j < (n + 1) / 2 ? j : j - n;
  return 2.0 * s / sites;
}

void GridAxis::validate() const {
  if (sites < 4) throw ValidationError("grid needs at least 4 lattice sites per axis");
  if (points_per_site < 4) throw ValidationError("grid needs at least 4 points per lattice site");
}

// ---------------------------------------------------------------------------

std::string signal_kind_name(SignalSpec::Kind kind) {
  switch (kind) {
    case SignalSpec::Kind::None: return "none";
    case SignalSpec::Kind::Acceleration: return "accel";
    case SignalSpec::Kind::Gradient: return "grad";
    case SignalSpec::Kind::Rotation: return "rot";
  }
  return "none";
}

void SignalSpec::validate() const {
  if (!std::isfinite(magnitude)) throw ValidationError("signal magnitude must be finite");
  if (kind == Kind::None && magnitude != 0.0) throw ValidationError("signal 'none' cannot carry a magnitude");
}

std::string SignalSpec::to_string() const {
  if (kind == Kind::None) return "none";
  std::ostringstream os;
  os.precision(17);
  os << signal_kind_name(kind) << ":" << magnitude;
  return os.str();
}

SignalSpec SignalSpec::parse(const std::string& text) {
  if (text == "none" || text.empty()) return {};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("signal must look like kind:value, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  SignalSpec s;
  if (kind == "accel" || kind == "a") {
    s.kind = Kind::Acceleration;
  } else if (kind == "grad" || kind == "g") {
    s.kind = Kind::Gradient;
  } else if (kind == "rot" || kind == "omega") {
    s.kind = Kind::Rotation;
  } else {
    throw ValidationError("unknown signal kind '" + kind + "'");
  }
  std::size_t used = 0;
  try {
    s.magnitude = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ValidationError("malformed signal value '" + value + "'");
  s.validate();
  return s;
}

double signal_potential(const LatticeConfig& config, const SignalSpec& signal, double x) {
  const double m = config.atom_mass;
  const double k = config.wavenumber();
  const double er = config.recoil_energy();
  switch (signal.kind) {
    case SignalSpec::Kind::Acceleration: return m * signal.magnitude * x / (k * er);
    case SignalSpec::Kind::Gradient: return m * signal.magnitude * x * x / (k * k * er);
    default: return 0.0;
  }
}

// ---------------------------------------------------------------------------

double GridWavefunction::cell() const {
  double c = 1.0;
  for (const auto& a : axes) c *= a.spacing();
  return c;
}

double GridWavefunction::norm() const {
  double s = 0.0;
  for (const auto& v : psi) s += std::norm(v);
  return std::sqrt(s * cell());
}

void GridWavefunction::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw NumericalError("cannot normalize a zero wavefunction");
  for (auto& v : psi) v /= n;
}

void GridWavefunction::validate() const {
  if (axes.empty() || axes.size() > 2) throw ValidationError("grid must be 1D or 2D");
  std::size_t n = 1;
  for (const auto& a : axes) {
    a.validate();
    n *= static_cast<std::size_t>(a.points());
  }
  if (psi.size() != n) throw ValidationError("grid amplitudes do not match the axis sizes");
}

double DensityProfile::centroid(double lo, double hi) const {
  double w = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < lo || positions[i] >= hi) continue;
    w += density[i];
    s += density[i] * positions[i];
  }
  return w > 0.0 ? s / w : 0.0;
}

double DensityProfile::peak_centroid(double lo, double hi, double half_window, double smooth) const {
  if (positions.size() < 2) return 0.0;
  const double dx = positions[1] - positions[0];
  const long h = std::max(0L, static_cast<long>(std::lround(0.5 * smooth / dx)));
  const long n = static_cast<long>(positions.size());
  // running-sum box filter
  std::vector<double> cum(n + 1, 0.0);
  for (long i = 0; i < n; ++i) cum[i + 1] = cum[i] + density[i];
  long best = -1;
  double best_v = -1.0;
  for (long i = 0; i < n; ++i) {
    if (positions[i] < lo || positions[i] >= hi) continue;
    const double v = cum[std::min(n, i + h + 1)] - cum[std::max(0L, i - h)];
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  if (best < 0) return 0.0;
  const double p = positions[best];
  return centroid(std::max(lo, p - half_window), std::min(hi, p + half_window));
}

double DensityProfile::integral(double lo, double hi) const {
  if (positions.size() < 2) return 0.0;
  const double dx = positions[1] - positions[0];
  double s = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= lo && positions[i] < hi) s += density[i];
  }
  return s * dx;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<cplx> packet_1d(const LatticeConfig& config, int n_sites, int band, const GridAxis& axis, double center) {
  if (band < 0 || band > 4) throw ValidationError("wavepacket band must lie in 0..4");
  if (n_sites < 4) throw ValidationError("wavepacket needs at least 4 sites");
  axis.validate();
  const double sigma = n_sites * constants::pi / 2.0;
  if (axis.length() < 6.0 * sigma) {
    throw ValidationError("grid domain of " + std::to_string(axis.sites) + " sites is too small for a " +
                          std::to_string(n_sites) + "-site envelope");
  }
  const BlochState b = bloch_state(config, band, 0.0);
  const int n = b.truncation();
  const double x0 = config.to_recoil_length(center);
  std::vector<cplx> out(axis.points());
  for (int i = 0; i < axis.points(); ++i) {
    const double x = axis.position(i);
    cplx u = 0.0;
    for (int l = -n; l <= n; ++l) u += b.coefficient(l) * std::polar(1.0, 2.0 * l * x);
    const double d = x - x0;
    out[i] = u * std::exp(-d * d / (4.0 * sigma * sigma));
  }
  return out;
}

}  // namespace

GridWavefunction prepare_wavepacket(const LatticeConfig& config, int n_sites, int band, const GridAxis& axis,
                                    double center) {
  config.validate();
  GridWavefunction g;
  g.config = config;
  g.axes = {axis};
  g.psi = packet_1d(config, n_sites, band, axis, center);
  g.normalize();
  return g;
}

GridWavefunction prepare_wavepacket_2d(const LatticeConfig& config, int n_sites, int band_x, int band_z,
                                       const GridAxis& axis_x, const GridAxis& axis_z, double center_x,
                                       double center_z) {
  config.validate();
  const auto px = packet_1d(config, n_sites, band_x, axis_x, center_x);
  const auto pz = packet_1d(config, n_sites, band_z, axis_z, center_z);
  GridWavefunction g;
  g.config = config;
  g.axes = {axis_x, axis_z};
  g.psi.resize(px.size() * pz.size());
  for (std::size_t iz = 0; iz < pz.size(); ++iz) {
    for (std::size_t ix = 0; ix < px.size(); ++ix) g.psi[iz * px.size() + ix] = px[ix] * pz[iz];
  }
  g.normalize();
  return g;
}

// ---------------------------------------------------------------------------

namespace {

// Line geometry of an axis inside the row-major storage.
struct Lines {
  int n, howmany, stride, dist;
};

Lines lines_of(const GridWavefunction& g, int axis) {
  const int nx = g.axes[0].points();
  if (g.dims() == 1) return {nx, 1, 1, nx};
  const int nz = g.axes[1].points();
  return axis == 0 ? Lines{nx, nz, 1, nx} : Lines{nz, nx, nx, 1};
}

// |psi|^2 marginal along `axis`, optionally after an FFT along that axis.
std::vector<double> marginal(const GridWavefunction& g, int axis, bool momentum) {
  if (axis < 0 || axis >= g.dims()) throw ValidationError("axis out of range");
  std::vector<cplx> data = g.psi;
  const Lines l = lines_of(g, axis);
  if (momentum) {
    detail::FftLines fft(data, l.n, l.howmany, l.stride, l.dist);
    fft.forward(data);
  }
  std::vector<double> out(l.n, 0.0);
  for (int line = 0; line < l.howmany; ++line) {
    for (int i = 0; i < l.n; ++i) {
      out[i] += std::norm(data[static_cast<std::size_t>(line) * l.dist + static_cast<std::size_t>(i) * l.stride]);
    }
  }
  return out;
}

long floor_div(long a, long b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

MomentumDistribution detail::orders_from_spectrum(const std::vector<double>& spectrum, const GridAxis& axis, int max_order) {
  MomentumDistribution d;
  for (int m = -max_order; m <= max_order; ++m) d.orders.push_back(m);
  d.probabilities.assign(d.orders.size(), 0.0);
  double total = 0.0;
  const int n = axis.points();
  const long s = axis.sites;
  for (int j = 0; j < n; ++j) {
    const long signed_j = j < (n + 1) / 2 ? j : j - n;
    const long m = floor_div(2 * signed_j + s, 2 * s);
    total += spectrum[j];
    if (m >= -max_order && m <= max_order) d.probabilities[m + max_order] += spectrum[j];
  }
  double inside = 0.0;
  for (double& p : d.probabilities) {
    p /= total;
    inside += p;
  }
  d.residual = std::max(0.0, 1.0 - inside);
  return d;
}

MomentumDistribution measure_momentum_orders(const GridWavefunction& psi, int axis, int max_order) {
  psi.validate();
  if (max_order < 0) throw ValidationError("max order must be non-negative");
  return detail::orders_from_spectrum(marginal(psi, axis, true), psi.axes[axis], max_order);
}

DensityProfile density_snapshot(const GridWavefunction& psi, int axis) {
  psi.validate();
  const auto m = marginal(psi, axis, false);
  const GridAxis& a = psi.axes[axis];
  DensityProfile d;
  d.time = psi.time;
  d.positions.resize(m.size());
  d.density.resize(m.size());
  double total = 0.0;
  for (double v : m) total += v;
  const double dx = psi.config.to_meters(a.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) {
    d.positions[i] = psi.config.to_meters(a.position(static_cast<int>(i)));
    d.density[i] = m[i] / (total * dx);
  }
  return d;
}

double rms_width(const GridWavefunction& psi, int axis) {
  const DensityProfile d = density_snapshot(psi, axis);
  const double c = d.centroid();
  double s = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i < d.positions.size(); ++i) {
    s += d.density[i] * (d.positions[i] - c) * (d.positions[i] - c);
    w += d.density[i];
  }
  return std::sqrt(s / w);
}

std::vector<AxisReach> reach_around(const GridWavefunction& psi, double excursion) {
  std::vector<AxisReach> r;
  for (int a = 0; a < psi.dims(); ++a) {
    const double c = density_snapshot(psi, a).centroid();
    r.push_back({c - std::abs(excursion), c + std::abs(excursion)});
  }
  return r;
}

void check_wrap_hazard(const GridWavefunction& psi, const std::vector<AxisReach>& reach, double width) {
  if (reach.size() != static_cast<std::size_t>(psi.dims())) throw ValidationError("need one reach per axis");
  for (int a = 0; a < psi.dims(); ++a) {
    const double half = 0.5 * psi.config.to_meters(psi.axes[a].length());
    const double far = std::max(std::abs(reach[a].lo), std::abs(reach[a].hi));
    if (far + 4.0 * width > half) {
      std::ostringstream os;
      os << "wrap hazard on axis " << (a == 0 ? "x" : "z") << ": reach " << far * 1e6 << " um + 4 x " << width * 1e6
         << " um envelope exceeds the half-domain of " << half * 1e6 << " um";
      throw NumericalError(os.str());
    }
  }
}

double energy_expectation(const GridWavefunction& psi, double phi, const SignalSpec& signal) {
  psi.validate();
  const double v0 = psi.config.depth;
  double kinetic = 0.0;
  for (int a = 0; a < psi.dims(); ++a) {
    const auto spec = marginal(psi, a, true);
    double tot = 0.0;
    double s = 0.0;
    for (int j = 0; j < static_cast<int>(spec.size()); ++j) {
      const double k = psi.axes[a].wavenumber(j);
      tot += spec[j];
      s += spec[j] * k * k;
    }
    kinetic += s / tot;
  }
  double potential = 0.0;
  double tot = 0.0;
  const int nx = psi.axes[0].points();
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double w = std::norm(psi.psi[i]);
    const double x = psi.axes[0].position(static_cast<int>(i % nx));
    double v = 0.5 * v0 * std::cos(2.0 * x + phi) + signal_potential(psi.config, signal, x);
    if (psi.dims() == 2) v += 0.5 * v0 * std::cos(2.0 * psi.axes[1].position(static_cast<int>(i / nx)));
    potential += w * v;
    tot += w;
  }
  return kinetic + potential / tot;
}

// ---------------------------------------------------------------------------

double vibrational_spectrum(const std::vector<double>& times, const std::vector<double>& values, double noise_floor) {
  const std::size_t n = values.size();
  if (n < 8 || times.size() != n) throw ValidationError("spectrum needs at least 8 uniformly spaced samples");
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw ValidationError("spectrum sample times must increase");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> w(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * constants::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    wsum += w[i];
  }
  // zero-padded DFT, 4x oversampled in frequency
  const std::size_t bins = 2 * n;
  std::vector<double> mag(bins + 1, 0.0);
  for (std::size_t k = 1; k <= bins; ++k) {
    const double f = static_cast<double>(k) / (4.0 * n * dt);
    cplx s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += w[i] * (values[i] - mean) * std::polar(1.0, -2.0 * constants::pi * f * dt * static_cast<double>(i));
    }
    mag[k] = 2.0 * std::abs(s) / wsum;
  }
  // skip the window's main lobe around zero frequency
  std::size_t best = 0;
  for (std::size_t k = 8; k < bins; ++k) {
    if (mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && (best == 0 || mag[k] > mag[best])) best = k;
  }
  if (best == 0 || mag[best] < noise_floor) return 0.0;
  const double a = mag[best - 1];
  const double b = mag[best];
  const double c = mag[best + 1];
  const double denom = a - 2.0 * b + c;
  const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  const double f = (static_cast<double>(best) + shift) / (4.0 * n * dt);
  if (times.back() - times.front() < 2.0 / f) {
    throw ValidationError("spectrum window is shorter than two oscillation periods");
  }
  return f;
}

std::vector<detail::PhaseStep> detail::phase_schedule(const Waveform& w, double extra_hold, double hold_step,
                                                     double hold_run_min) {
  if (!(hold_step > 0.0)) throw ValidationError("hold step must be positive");
  std::vector<PhaseStep> steps;
  auto push = [&](double phi, double dt, long count) {
    if (count <= 0) return;
    if (!steps.empty() && steps.back().phi == phi && steps.back().dt == dt) {
      steps.back().count += count;
    } else {
      steps.push_back({phi, dt, count});
    }
  };
  auto push_hold = [&](double phi, double duration) {
    if (duration <= 0.0) return;
    const long n = std::max(1L, static_cast<long>(std::ceil(duration / hold_step - 1e-9)));
    push(phi, duration / static_cast<double>(n), n);
  };
  const std::size_t n = w.samples.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && w.samples[j] == w.samples[i]) ++j;
    const double run = static_cast<double>(j - i) * w.sample_period;
    if (run >= hold_run_min) {
      push_hold(w.samples[i], run);
    } else {
      push(w.samples[i], w.sample_period, static_cast<long>(j - i));
    }
    i = j;
  }
  push_hold(n ? w.samples.back() : 0.0, extra_hold);
  return steps;
}

double detail::schedule_duration(const std::vector<PhaseStep>& steps) {
  double t = 0.0;
  for (const auto& s : steps) t += s.dt * static_cast<double>(s.count);
  return t;
}

std::vector<double> order_series(const std::vector<GridSnapshot>& snaps, int order, int axis) {
  std::vector<double> out;
  out.reserve(snaps.size());
  for (const auto& s : snaps) out.push_back(axis == 0 ? s.orders.at(order) : s.orders_z.at(order));
  return out;
}

}  // namespace bbi
