#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bbi/circuit.hpp"
#include "bbi/errors.hpp"
#include "bbi/run_config.hpp"
#include "bbi/sensing.hpp"

using namespace bbi;

namespace {

const GateLibrary& library() {
  static const GateLibrary lib = GateLibrary::load(BBI_GATE_DIR);
  return lib;
}

// Phase slope per unit signal from first principles, p = 4 hbar k_L.
double oracle_slope(const SensorDesign& d, const LatticeConfig& c) {
  const double hbar = constants::hbar;
  const double p = 4.0 * hbar * c.wavenumber();
  const double m = c.atom_mass;
  switch (d.kind) {
    case SensorKind::Accelerometer:
      return 2.0 * p * d.T1 * d.T1 / hbar;
    case SensorKind::AccelerometerHold:
      return 2.0 * p * d.T1 * (d.T1 + d.hold) / hbar;
    case SensorKind::Gradiometer:
      return 8.0 * d.T1 * d.T2 * d.T2 * p * p / (hbar * m);
    case SensorKind::GradiometerHold:
      return 8.0 * d.T1 * d.T2 * (d.T2 + d.hold) * p * p / (hbar * m);
    case SensorKind::Gyroscope:
      return 8.0 * p * p * d.T1 * d.T2 / (m * hbar);
  }
  return 0.0;
}

SensorDesign random_design(SensorKind kind, std::mt19937& rng) {
  // Spacings on the 50 ns grid between 1 and 6 ms.
  std::uniform_int_distribution<int> ticks(20000, 120000);
  SensorDesign d;
  d.kind = kind;
  d.T1 = ticks(rng) * 50e-9;
  d.T2 = ticks(rng) * 50e-9;
  if (kind == SensorKind::AccelerometerHold || kind == SensorKind::GradiometerHold) d.hold = ticks(rng) * 100e-9;
  return d;
}

}  // namespace

TEST(Sensor, KindNamesRoundTrip) {
  for (SensorKind k : all_sensor_kinds()) EXPECT_EQ(parse_sensor_kind(sensor_kind_name(k)), k);
  EXPECT_EQ(parse_sensor_kind("gyro"), SensorKind::Gyroscope);
  EXPECT_THROW(parse_sensor_kind("barometer"), ValidationError);
}

TEST(Sensor, AnalyticPhaseMatchesFirstPrinciples) {
  const LatticeConfig c;
  std::mt19937 rng(5);
  for (SensorKind k : all_sensor_kinds()) {
    for (int i = 0; i < 20; ++i) {
      const auto d = random_design(k, rng);
      EXPECT_NEAR(analytic_phase(d, 1.0, c), oracle_slope(d, c), 1e-12 * oracle_slope(d, c));
      EXPECT_NEAR(analytic_phase(d, -0.3, c), -0.3 * oracle_slope(d, c), 1e-12 * oracle_slope(d, c));
    }
  }
  // Hold enhancement ratio.
  SensorDesign a;
  SensorDesign h;
  h.kind = SensorKind::AccelerometerHold;
  h.hold = 16e-3;
  EXPECT_NEAR(analytic_phase(h, 1.0, c) / analytic_phase(a, 1.0, c), 19.0 / 3.0, 1e-12);
}

TEST(Sensor, PathActionEqualsAnalyticPhase) {
  const LatticeConfig c;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> signal(-1.0, 1.0);
  for (SensorKind k : all_sensor_kinds()) {
    for (int i = 0; i < 100; ++i) {
      const auto d = random_design(k, rng);
      const auto plan = circuit_plan(sensor_circuit(d, library(), c), library(), c);
      ASSERT_TRUE(plan.closed) << sensor_kind_name(k);
      const double beta = signal(rng);
      const double expected = analytic_phase(d, beta, c);
      const double got = path_action(plan, SignalSpec{sensor_signal(k), beta}, c);
      EXPECT_NEAR(got, expected, 1e-10 * std::abs(expected)) << sensor_kind_name(k) << " draw " << i;
    }
  }
}

TEST(Sensor, ZeroSignalGivesZeroPhase) {
  const LatticeConfig c;
  for (SensorKind k : all_sensor_kinds()) {
    SensorDesign d;
    d.kind = k;
    if (k == SensorKind::AccelerometerHold || k == SensorKind::GradiometerHold) d.hold = 4e-3;
    const auto plan = circuit_plan(sensor_circuit(d, library(), c), library(), c);
    EXPECT_NEAR(path_action(plan, SignalSpec{sensor_signal(k), 0.0}, c), 0.0, 1e-12);
  }
}

TEST(Sensor, CircuitsPlaceGateCenters) {
  const LatticeConfig c;
  SensorDesign d;  // accelerometer, T = 3 ms
  const auto circuit = sensor_circuit(d, library(), c);
  const auto s = stitch(circuit, library());
  const auto& segs = s.axes[0].segments;
  std::vector<double> centers;
  for (const auto& seg : segs) {
    if (seg.kind == CircuitElement::Kind::Gate) centers.push_back(0.5 * (seg.start() + seg.end()));
  }
  ASSERT_EQ(centers.size(), 3u);
  EXPECT_NEAR(centers[1] - centers[0], 3e-3, 1e-12);
  EXPECT_NEAR(centers[2] - centers[1], 3e-3, 1e-12);
  // 150 us splitter, 250 us mirror, 150 us recombiner around two flights.
  EXPECT_EQ(s.axes[0].waveform.samples.size(), 123000u);
  d.T1 = 100e-6;  // shorter than the gates around it
  EXPECT_THROW(sensor_circuit(d, library(), c), ValidationError);
}

TEST(Sensor, GyroscopeEnclosesArea) {
  const LatticeConfig c;
  SensorDesign d;
  d.kind = SensorKind::Gyroscope;
  const auto plan = circuit_plan(sensor_circuit(d, library(), c), library(), c);
  ASSERT_TRUE(plan.closed);
  // Two loops of 2 (v T1)(v T2) each.
  const double v = plan.speed;
  EXPECT_NEAR(plan.enclosed_area(), 4.0 * v * d.T1 * v * d.T2, 1e-15);
  double oriented = 0.0;
  for (const auto* leaf : plan.leaves()) oriented += std::abs(plan.loop_area(*leaf));
  EXPECT_NEAR(oriented, plan.enclosed_area(), 1e-18);
}

TEST(Fringe, FitRecoversKnownFrequency) {
  std::vector<double> beta = linspace(-0.01, 0.01, 41);
  std::vector<double> y;
  for (double b : beta) y.push_back(0.45 + 0.3 * std::cos(425.0 * b + 0.4));
  const auto f = fit_fringe(beta, y);
  EXPECT_NEAR(f.omega, 425.0, 1e-6 * 425.0);
  EXPECT_NEAR(f.amplitude, 0.3, 1e-9);
  EXPECT_NEAR(f.offset, 0.45, 1e-9);
  EXPECT_LT(f.rms, 1e-9);
}

TEST(Fisher, TwoOutcomeFringeHasUnitInformation) {
  // P = (1 +- cos(beta)) / 2 carries exactly 1 unit of Fisher information.
  const auto beta = linspace(0.1, 3.0, 2901);
  std::vector<std::vector<double>> probs;
  for (double b : beta) probs.push_back({0.5 * (1.0 + std::cos(b)), 0.5 * (1.0 - std::cos(b))});
  const auto info = cfi(beta, probs);
  for (std::size_t i = 1; i + 1 < info.size(); ++i) EXPECT_NEAR(info[i], 1.0, 1e-6) << beta[i];
}

TEST(Fisher, ConstantProbabilitiesCarryNoInformation) {
  const auto beta = linspace(-1.0, 1.0, 11);
  std::vector<std::vector<double>> probs(beta.size(), {0.2, 0.5, 0.3, 0.0});
  for (double i : cfi(beta, probs)) EXPECT_EQ(i, 0.0);
  const auto rep = sensitivity(cfi(beta, probs), 1000.0, {1.0, 100.0});
  EXPECT_TRUE(rep.unbounded);
  EXPECT_TRUE(std::isinf(rep.rows[0].dbeta_max));
}

TEST(Fisher, FlaggedPointsAreMissing) {
  ScanResult s;
  s.beta = linspace(0.0, 1.0, 5);
  s.orders = {0, 1};
  for (double b : s.beta) s.probabilities.push_back({std::cos(b) * std::cos(b), std::sin(b) * std::sin(b)});
  s.residual.assign(5, 0.0);
  s.flagged = {false, false, true, false, false};
  const auto info = cfi(s);
  EXPECT_TRUE(std::isnan(info[2]));
  EXPECT_FALSE(std::isnan(info[0]));
  EXPECT_FALSE(std::isnan(info[1]));  // falls back to a one-sided difference
}

TEST(Fisher, SensitivityScaling) {
  const std::vector<double> info = {4.0, 16.0, 9.0};
  const auto rep = sensitivity(info, 100.0, {1.0, 100.0, 10000.0});
  EXPECT_EQ(rep.info_min, 4.0);
  EXPECT_EQ(rep.info_max, 16.0);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_NEAR(rep.rows[0].dbeta_min, 1.0 / std::sqrt(100.0 * 16.0), 1e-15);
  EXPECT_NEAR(rep.rows[0].dbeta_max, 1.0 / std::sqrt(100.0 * 4.0), 1e-15);
  // 1 / sqrt(s): a hundred times the shots gives a tenth of the error.
  EXPECT_NEAR(rep.rows[1].dbeta_min * 10.0, rep.rows[0].dbeta_min, 1e-15);
  EXPECT_NEAR(rep.rows[2].dbeta_max * 100.0, rep.rows[0].dbeta_max, 1e-15);
  EXPECT_THROW(sensitivity(info, 0.0, {1.0}), ValidationError);
}

TEST(Fisher, ShotGridIsLogarithmic) {
  const auto g = shot_grid(1.0, 1e4, 10);
  ASSERT_EQ(g.size(), 41u);
  EXPECT_DOUBLE_EQ(g.front(), 1.0);
  EXPECT_NEAR(g.back(), 1e4, 1e-8);
  EXPECT_NEAR(g[10], 10.0, 1e-10);
}

TEST(Scan, JsonRoundTrip) {
  ScanResult s;
  s.parameter = "a";
  s.unit = "m/s^2";
  s.beta = {-0.1, 0.0, 0.1};
  for (int m = -kScanMaxOrder; m <= kScanMaxOrder; ++m) s.orders.push_back(m);
  s.probabilities.assign(3, std::vector<double>(7, 1.0 / 7.0));
  s.probabilities[1][3] = 0.1234567890123456789;
  s.residual = {0.0, 1.0 / 7.0 - s.probabilities[1][3], 0.0};
  s.flagged = {false, false, true};
  s.flags = {"point 2: wrap hazard"};
  s.circuit_hash = "abc";
  const auto back = ScanResult::from_json(s.to_json());
  EXPECT_EQ(back.beta, s.beta);
  EXPECT_EQ(back.flagged, s.flagged);
  EXPECT_EQ(back.probabilities[0], s.probabilities[0]);
  EXPECT_EQ(back.column(0)[1], s.probabilities[1][3]);
  EXPECT_EQ(back.residual[1], s.residual[1]);
  // Flagged rows are not stored and come back as missing.
  EXPECT_TRUE(std::isnan(back.probabilities[2][0]));
  EXPECT_TRUE(std::isnan(back.residual[2]));
}

TEST(Scan, SmallGridRunProducesDistribution) {
  const LatticeConfig c;
  const auto circuit = parse_circuit("axis x { gate BS1; wait 100us; gate BS1 rev; }");
  const auto sw = stitch(circuit, library());
  const auto plan = circuit_plan(circuit, library(), c);
  ScanOptions o;
  o.axis_x = {128, 8};
  const auto r = run_scan(sw, &plan, SignalSpec::Kind::Acceleration, {0.0, 1.0}, c, o);
  ASSERT_EQ(r.size(), 2u);
  for (std::size_t i = 0; i < r.size(); ++i) {
    double total = r.residual[i];
    for (double p : r.probabilities[i]) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_FALSE(r.flagged[i]);
  }
  // Same inputs, same numbers, whatever the worker count.
  o.workers = 2;
  const auto r2 = run_scan(sw, &plan, SignalSpec::Kind::Acceleration, {0.0, 1.0}, c, o);
  EXPECT_EQ(r.probabilities, r2.probabilities);
}

TEST(RunConfig, RejectsUnknownKeys) {
  EXPECT_THROW(RunConfig::from_json(R"({"sites": 512, "colour": "blue"})"), ValidationError);
  EXPECT_THROW(RunConfig::from_json(R"([1, 2])"), ValidationError);
  EXPECT_THROW(RunConfig::from_json(R"({"hold_step": "70ns"})"), ValidationError);
  EXPECT_THROW(RunConfig::from_json(R"({"sites": "many"})"), ValidationError);
}

TEST(RunConfig, JsonRoundTripAndHash) {
  RunConfig c;
  c.depth = 12.5;
  c.sites = 512;
  c.hold_step_ns = 1000;
  c.workers = 3;
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.lattice().depth, 12.5);
  RunConfig d = c;
  d.workers = 1;
  d.output_dir = "/elsewhere";
  EXPECT_EQ(c.hash(), d.hash());
  d.seed = 9;
  EXPECT_NE(c.hash(), d.hash());
}
