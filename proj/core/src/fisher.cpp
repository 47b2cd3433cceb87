#include <algorithm>
#include <cmath>
#include <limits>

#include "bbi/sensing.hpp"

namespace bbi {

std::vector<double> cfi(const std::vector<double>& beta, const std::vector<std::vector<double>>& probabilities) {
  const std::size_t n = beta.size();
  if (n < 3) throw ValidationError("Fisher information needs at least 3 scan points");
  if (probabilities.size() != n) throw ValidationError("probability rows do not match the scan grid");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(beta[i] > beta[i - 1])) throw ValidationError("scan grid must be strictly increasing");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> info(n, nan);
  auto valid = [&](std::size_t i) {
    return std::all_of(probabilities[i].begin(), probabilities[i].end(), [](double p) { return std::isfinite(p); });
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid(i)) continue;
    std::size_t lo = i;
    std::size_t hi = i;
    if (i > 0 && valid(i - 1)) lo = i - 1;
    if (i + 1 < n && valid(i + 1)) hi = i + 1;
    if (lo == hi) continue;
    const double h = beta[hi] - beta[lo];
    double s = 0.0;
    for (std::size_t m = 0; m < probabilities[i].size(); ++m) {
      const double p = probabilities[i][m];
      if (p < kProbabilityFloor) continue;
      const double dp = (probabilities[hi][m] - probabilities[lo][m]) / h;
      s += dp * dp / p;
    }
    info[i] = s;
  }
  return info;
}

std::vector<double> cfi(const ScanResult& scan, bool include_residual) {
  std::vector<std::vector<double>> rows = scan.probabilities;
  if (include_residual) {
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].push_back(scan.residual[i]);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (scan.flagged[i]) std::fill(rows[i].begin(), rows[i].end(), std::numeric_limits<double>::quiet_NaN());
  }
  return cfi(scan.beta, rows);
}

SensitivityReport sensitivity(const std::vector<double>& information, double atoms, const std::vector<double>& shots) {
  if (!(atoms >= 1.0)) throw ValidationError("the number of atoms per shot must be at least 1");
  SensitivityReport r;
  r.information = information;
  r.atoms = atoms;
  bool any = false;
  r.info_min = std::numeric_limits<double>::infinity();
  r.info_max = 0.0;
  for (double i : information) {
    if (!std::isfinite(i)) continue;
    if (i < 0.0) throw NumericalError("negative Fisher information");
    any = true;
    r.info_min = std::min(r.info_min, i);
    r.info_max = std::max(r.info_max, i);
  }
  if (!any) throw ValidationError("no valid Fisher information values");
  r.unbounded = r.info_min <= 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (double s : shots) {
    if (!(s >= 1.0)) throw ValidationError("shot counts must be at least 1");
    SensitivityRow row;
    row.shots = s;
    row.dbeta_min = r.info_max > 0.0 ? 1.0 / std::sqrt(s * atoms * r.info_max) : inf;
    row.dbeta_max = r.info_min > 0.0 ? 1.0 / std::sqrt(s * atoms * r.info_min) : inf;
    r.rows.push_back(row);
  }
  return r;
}

std::vector<double> shot_grid(double lo, double hi, int per_decade) {
  if (!(lo >= 1.0) || !(hi >= lo) || per_decade < 1) throw ValidationError("shot range must satisfy 1 <= lo <= hi");
  std::vector<double> out;
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  const int n = std::max(1, static_cast<int>(std::ceil((l1 - l0) * per_decade)));
  for (int k = 0; k <= n; ++k) {
    const double v = k == n ? hi : std::pow(10.0, l0 + (l1 - l0) * k / n);
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

}  // namespace bbi
