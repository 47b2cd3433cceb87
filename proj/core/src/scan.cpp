#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "bbi/sensing.hpp"
#include "bbi/workers.hpp"
#include "json.hpp"

namespace bbi {

namespace {

using nlohmann::json;

AxisReach plan_reach(const SegmentPlan& plan, int axis) {
  const auto [lo, hi] = plan.extent(axis);
  return {lo, hi};
}

std::string parameter_name(SignalSpec::Kind kind) {
  switch (kind) {
    case SignalSpec::Kind::Acceleration: return "a";
    case SignalSpec::Kind::Gradient: return "g'";
    case SignalSpec::Kind::Rotation: return "Omega";
    case SignalSpec::Kind::None: break;
  }
  throw ValidationError("scan needs an acceleration, gradient or rotation parameter");
}

std::string parameter_unit(SignalSpec::Kind kind) {
  switch (kind) {
    case SignalSpec::Kind::Acceleration: return "m/s^2";
    case SignalSpec::Kind::Gradient: return "1/s^2";
    case SignalSpec::Kind::Rotation: return "rad/s";
    case SignalSpec::Kind::None: break;
  }
  return "";
}

// Sum of squared residuals of the best (offset, cos, sin) fit at omega.
double fit_at(const std::vector<double>& x, const std::vector<double>& y, double omega, Eigen::Vector3d* coef) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector3d row(1.0, std::cos(omega * x[i]), std::sin(omega * x[i]));
    ata += row * row.transpose();
    aty += row * y[i];
  }
  const Eigen::Vector3d c = ata.ldlt().solve(aty);
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (c(0) + c(1) * std::cos(omega * x[i]) + c(2) * std::sin(omega * x[i]));
    sse += r * r;
  }
  if (coef) *coef = c;
  return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ValidationError("need at least one point");
  if (n == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

std::vector<double> ScanResult::column(int order) const {
  const auto it = std::find(orders.begin(), orders.end(), order);
  if (it == orders.end()) throw ValidationError("order " + std::to_string(order) + " is not in the scan");
  const auto k = static_cast<std::size_t>(it - orders.begin());
  std::vector<double> out;
  out.reserve(size());
  for (const auto& row : probabilities) out.push_back(row[k]);
  return out;
}

void ScanResult::validate() const {
  const std::size_t n = beta.size();
  if (probabilities.size() != n || residual.size() != n || flagged.size() != n) {
    throw ValidationError("scan arrays have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (probabilities[i].size() != orders.size()) throw ValidationError("scan row has the wrong number of orders");
    if (flagged[i]) continue;
    double s = residual[i];
    for (double p : probabilities[i]) {
      if (!(p >= -1e-12)) throw ValidationError("negative probability in scan");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6) throw ValidationError("scan row does not sum to 1");
  }
}

std::string ScanResult::to_json() const {
  json j;
  j["parameter"] = parameter;
  j["unit"] = unit;
  j["beta"] = beta;
  j["orders"] = orders;
  json rows = json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    if (flagged[i]) {
      rows.push_back(nullptr);
    } else {
      rows.push_back(probabilities[i]);
    }
  }
  j["probabilities"] = rows;
  json res = json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    if (flagged[i]) {
      res.push_back(nullptr);
    } else {
      res.push_back(residual[i]);
    }
  }
  j["residual"] = res;
  j["flagged"] = flagged;
  j["flags"] = flags;
  j["circuit_hash"] = circuit_hash;
  j["settings"] = settings;
  j["provenance"] = provenance;
  j["seconds"] = seconds;
  return j.dump(1) + "\n";
}

ScanResult ScanResult::from_json(const std::string& text) {
  ScanResult s;
  try {
    const json j = json::parse(text);
    s.parameter = j.at("parameter").get<std::string>();
    s.unit = j.value("unit", std::string{});
    s.beta = j.at("beta").get<std::vector<double>>();
    s.orders = j.at("orders").get<std::vector<int>>();
    s.flagged = j.at("flagged").get<std::vector<bool>>();
    s.flags = j.value("flags", std::vector<std::string>{});
    const auto& rows = j.at("probabilities");
    const auto& res = j.at("residual");
    if (rows.size() != s.beta.size() || res.size() != s.beta.size()) {
      throw ValidationError("scan arrays have inconsistent lengths");
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].is_null()) {
        s.probabilities.emplace_back(s.orders.size(), nan);
        s.residual.push_back(nan);
      } else {
        s.probabilities.push_back(rows[i].get<std::vector<double>>());
        s.residual.push_back(res[i].get<double>());
      }
    }
    s.circuit_hash = j.value("circuit_hash", std::string{});
    s.settings = j.value("settings", std::string{});
    s.provenance = j.value("provenance", std::string{});
    s.seconds = j.value("seconds", 0.0);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scan JSON: ") + e.what());
  }
  s.validate();
  return s;
}

ScanResult run_scan(const StitchedWaveform& circuit, const SegmentPlan* plan, SignalSpec::Kind kind,
                    const std::vector<double>& beta, const LatticeConfig& config, const ScanOptions& options) {
  if (beta.empty()) throw ValidationError("scan needs at least one point");
  const auto start = std::chrono::steady_clock::now();
  const bool two_d = kind == SignalSpec::Kind::Rotation;
  ScanResult out;
  out.parameter = parameter_name(kind);
  out.unit = parameter_unit(kind);
  out.beta = beta;
  for (int m = -kScanMaxOrder; m <= kScanMaxOrder; ++m) out.orders.push_back(m);
  out.circuit_hash = circuit.circuit_hash;
  {
    std::ostringstream os;
    os << (two_d ? "2D " : "1D ") << "x " << options.axis_x.sites << " sites x " << options.axis_x.points_per_site
       << " points";
    if (two_d) os << ", z " << options.axis_z.sites << " sites x " << options.axis_z.points_per_site << " points";
    os << ", envelope " << options.envelope_sites << " sites, hold step " << options.evolve.hold_step * 1e6 << " us";
    if (two_d) os << ", rotation step " << options.evolve.rotation_step * 1e6 << " us";
    os << ", extra hold " << options.extra_hold * 1e3 << " ms";
    out.settings = os.str();
  }
  const std::size_t n = beta.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.probabilities.assign(n, std::vector<double>(out.orders.size(), nan));
  out.residual.assign(n, nan);
  out.flagged.assign(n, false);
  std::vector<std::string> flag_text(n);

  const Waveform wx = circuit.axis_waveform("x");
  const Waveform wz = circuit.axis_waveform("z");
  double center_z = 0.0;
  if (options.center_z) {
    center_z = *options.center_z;
  } else if (plan && two_d) {
    const auto [lo, hi] = plan->extent(1);
    center_z = -0.5 * (lo + hi);
  }
  const GridWavefunction psi0 =
      two_d ? prepare_wavepacket_2d(config, options.envelope_sites, 0, 0, options.axis_x, options.axis_z, 0.0,
                                    center_z)
            : prepare_wavepacket(config, options.envelope_sites, 0, options.axis_x);
  const double duration = std::max(wx.duration(), two_d ? wz.duration() : 0.0) + options.extra_hold;

  parallel_for(n, worker_count(options.workers), [&](std::size_t i) {
    const SignalSpec signal{kind, beta[i]};
    EvolveOptions eo = options.evolve;
    if (plan && eo.reach.empty()) {
      eo.reach.push_back(plan_reach(*plan, 0));
      if (two_d) {
        AxisReach rz = plan_reach(*plan, 1);
        rz.lo += center_z;
        rz.hi += center_z;
        eo.reach.push_back(rz);
      }
      if (kind == SignalSpec::Kind::Acceleration) {
        const double drift = 0.5 * std::abs(beta[i]) * duration * duration;
        eo.reach[0].lo -= drift;
        eo.reach[0].hi += drift;
      }
    }
    try {
      const GridTrajectory tr = two_d ? evolve_grid_2d(psi0, wx, wz, signal, options.extra_hold, eo)
                                      : evolve_grid_1d(psi0, wx, signal, options.extra_hold, eo);
      const MomentumDistribution d = measure_momentum_orders(tr.final_state, 0, kScanMaxOrder);
      double inside = 0.0;
      for (std::size_t k = 0; k < out.orders.size(); ++k) {
        out.probabilities[i][k] = d.at(out.orders[k]);
        inside += out.probabilities[i][k];
      }
      out.residual[i] = std::max(0.0, 1.0 - inside);
    } catch (const NumericalError& e) {
      out.flagged[i] = true;
      std::ostringstream os;
      os << out.parameter << " = " << beta[i] << ": " << e.what();
      flag_text[i] = os.str();
    }
  });
  for (const auto& f : flag_text) {
    if (!f.empty()) out.flags.push_back(f);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

FringeFit fit_fringe(const std::vector<double>& beta, const std::vector<double>& y, double omega_min,
                     double omega_max) {
  std::vector<double> x;
  std::vector<double> v;
  for (std::size_t i = 0; i < beta.size() && i < y.size(); ++i) {
    if (std::isfinite(y[i])) {
      x.push_back(beta[i]);
      v.push_back(y[i]);
    }
  }
  if (x.size() < 5 || beta.size() != y.size()) throw ValidationError("fringe fit needs at least 5 valid points");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double span = *hi_it - *lo_it;
  if (!(span > 0.0)) throw ValidationError("fringe fit needs a nonzero scan span");
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double step = span;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] > sorted[i - 1]) step = std::min(step, sorted[i] - sorted[i - 1]);
  }
  if (omega_min <= 0.0) omega_min = constants::pi / span;
  if (omega_max <= 0.0) omega_max = constants::pi / step;
  if (!(omega_max > omega_min)) throw ValidationError("fringe fit frequency range is empty");

  const int grid = 4000;
  const double dw = (omega_max - omega_min) / grid;
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= grid; ++k) {
    const double sse = fit_at(x, v, omega_min + k * dw, nullptr);
    if (sse < best_sse) {
      best_sse = sse;
      best = k;
    }
  }
  // Golden-section refinement within one grid cell on either side.
  double a = omega_min + std::max(best - 1, 0) * dw;
  double b = omega_min + std::min(best + 1, grid) * dw;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = fit_at(x, v, c, nullptr);
  double fd = fit_at(x, v, d, nullptr);
  for (int it = 0; it < 100 && (b - a) > 1e-12 * b; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = fit_at(x, v, c, nullptr);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = fit_at(x, v, d, nullptr);
    }
  }
  FringeFit f;
  f.omega = 0.5 * (a + b);
  Eigen::Vector3d coef;
  const double sse = fit_at(x, v, f.omega, &coef);
  f.offset = coef(0);
  f.amplitude = std::hypot(coef(1), coef(2));
  f.phase = std::atan2(-coef(2), coef(1));
  f.rms = std::sqrt(sse / static_cast<double>(x.size()));
  return f;
}

}  // namespace bbi
