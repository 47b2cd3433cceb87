#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bbi/errors.hpp"
#include "bbi/fewmode.hpp"
#include "bbi/waveform.hpp"

using namespace bbi;

namespace {

// exp(-i H t) by scaling and squaring of a Taylor series.
Eigen::MatrixXcd taylor_expm(const Eigen::MatrixXcd& h, double t) {
  const Eigen::MatrixXcd a = cplx(0.0, -t) * h;
  int squarings = 0;
  double scale = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (scale > 0.25) {
    scale /= 2.0;
    ++squarings;
  }
  const Eigen::MatrixXcd b = a / std::pow(2.0, squarings);
  Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(h.rows(), h.cols());
  Eigen::MatrixXcd term = result;
  for (int k = 1; k <= 30; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

Waveform random_waveform(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-constants::pi, constants::pi);
  Waveform w;
  w.label = "random";
  w.samples.resize(n);
  for (double& s : w.samples) s = u(rng);
  return w;
}

}  // namespace

TEST(FewMode, PropagatorMatchesTaylorOracle) {
  LatticeConfig c;
  c.truncation = 8;
  const auto h = build_hamiltonian(c, 0.2, 1.1);
  for (double t : {0.01, 0.3, 2.0}) {
    EXPECT_LT((hermitian_propagator(h, t) - taylor_expm(h, t)).norm(), 1e-10) << "t=" << t;
  }
}

TEST(FewMode, StepIsUnitary) {
  const LatticeConfig c;
  FewModePropagator p(c, 0.0, c.to_recoil_time(kAwgSamplePeriod));
  const auto& u = p.step(0.4);
  EXPECT_LT((u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).norm(), 1e-12);
}

TEST(FewMode, NormConservedUnderShaking) {
  const LatticeConfig c;
  const auto w = random_waveform(400, 3);
  const auto r = propagate_fewmode(bloch_state(c, 0), w, c);
  EXPECT_NEAR(r.final_state.norm(), 1.0, 1e-12);
}

TEST(FewMode, StaticLatticeKeepsEigenstate) {
  const LatticeConfig c;
  const auto s = bloch_state(c, 2);
  const auto psi = hold_fewmode(s.coefficients, 1e-3, c);
  const auto pops = band_populations(psi, c, 6);
  EXPECT_NEAR(pops[2], 1.0, 1e-10);
  // Energy is conserved: <H> unchanged.
  const auto h = build_hamiltonian(c, 0.0, 0.0);
  const double e0 = (s.coefficients.adjoint() * h * s.coefficients)(0).real();
  const double e1 = (psi.adjoint() * h * psi)(0).real();
  EXPECT_NEAR(e0, e1, 1e-10);
}

TEST(FewMode, SnapshotsAreStamped) {
  const LatticeConfig c;
  Waveform w;
  w.samples.assign(100, 0.0);
  const auto r = propagate_fewmode(bloch_state(c, 0), w, c, 20);
  ASSERT_EQ(r.snapshots.size(), 6u);
  EXPECT_DOUBLE_EQ(r.times.front(), 0.0);
  EXPECT_NEAR(r.times.back(), 100 * kAwgSamplePeriod, 1e-15);
}

TEST(Waveform, ReverseAndNegateAreInvolutions) {
  auto w = random_waveform(257, 11);
  w.finalize();
  const auto rr = reverse(reverse(w));
  const auto nn = negate(negate(w));
  EXPECT_EQ(rr.samples, w.samples);
  EXPECT_EQ(nn.samples, w.samples);
  EXPECT_EQ(reverse(w).samples.front(), w.samples.back());
  EXPECT_EQ(negate(w).samples[5], -w.samples[5]);
  EXPECT_TRUE(reverse(w).meta.reversed);
  EXPECT_FALSE(rr.meta.reversed);
  EXPECT_TRUE(negate(w).meta.negated);
}

TEST(Waveform, JsonRoundTripIsBitExact) {
  auto w = random_waveform(1000, 5);
  w.meta.fidelity = 0.987654321012345;
  w.meta.gate = "beamsplitter";
  w.meta.variant = 2;
  w.finalize();
  const auto back = waveform_from_json(waveform_to_json(w));
  EXPECT_EQ(back.samples, w.samples);
  EXPECT_EQ(back.meta.fidelity, w.meta.fidelity);
  EXPECT_EQ(back.meta.provenance, w.meta.provenance);
  EXPECT_EQ(back.label, w.label);
  EXPECT_EQ(back.meta.variant, 2);
}

TEST(Waveform, ResampleHoldRepeatsSamples) {
  Waveform w;
  w.sample_period = 1e-6;
  w.samples = {0.1, -0.2};
  const auto r = resample_hold(w, kAwgSamplePeriod);
  ASSERT_EQ(r.samples.size(), 40u);
  EXPECT_EQ(r.samples[19], 0.1);
  EXPECT_EQ(r.samples[20], -0.2);
  EXPECT_THROW(resample_hold(w, 0.3e-6), ValidationError);
}

TEST(Waveform, ContentHashTracksSamples) {
  auto a = random_waveform(64, 1);
  auto b = a;
  EXPECT_EQ(content_hash(a.samples), content_hash(b.samples));
  b.samples[10] = std::nextafter(b.samples[10], 10.0);
  EXPECT_NE(content_hash(a.samples), content_hash(b.samples));
}
