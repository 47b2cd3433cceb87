#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "bbi/circuit.hpp"
#include "bbi/errors.hpp"
#include "bbi/fewmode.hpp"
#include "bbi/grid.hpp"

using namespace bbi;

namespace {

const GridAxis kSmall{128, 8};

Waveform flat(double seconds, double value = 0.0) {
  Waveform w;
  w.samples.assign(static_cast<std::size_t>(std::llround(seconds / kAwgSamplePeriod)), value);
  return w;
}

Waveform library_gate(const std::string& name) {
  return GateLibrary::load(BBI_GATE_DIR).resolve(name);
}

}  // namespace

TEST(GridAxis, Geometry) {
  const GridAxis a{16, 4};
  EXPECT_EQ(a.points(), 64);
  EXPECT_NEAR(a.spacing(), constants::pi / 4, 1e-15);
  EXPECT_NEAR(a.position(32), 0.0, 1e-15);
  EXPECT_NEAR(a.wavenumber(1), 2.0 * constants::pi / a.length(), 1e-15);
  EXPECT_LT(a.wavenumber(63), 0.0);
  EXPECT_THROW((GridAxis{16, 0}.validate()), ValidationError);
}

TEST(SignalSpec, ParseRoundTrip) {
  for (const auto& s : {SignalSpec::none(), SignalSpec::acceleration(0.01), SignalSpec::gradient(-2.5),
                        SignalSpec::rotation(1e-3)}) {
    const auto back = SignalSpec::parse(s.to_string());
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.magnitude, s.magnitude);
  }
  EXPECT_THROW(SignalSpec::parse("wobble:3"), ValidationError);
  EXPECT_THROW(SignalSpec::parse("accel:abc"), ValidationError);
}

TEST(Grid, PreparedPacketIsNormalizedGroundBand) {
  const LatticeConfig c;
  const auto psi = prepare_wavepacket(c, 20, 0, kSmall);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
  const auto orders = measure_momentum_orders(psi);
  const auto bloch = momentum_composition(bloch_state(c, 0));
  EXPECT_NEAR(orders.at(0), bloch.at(0), 2e-3);
  EXPECT_NEAR(orders.at(1), orders.at(-1), 1e-10);
  // RMS width is n_sites / 2 lattice sites.
  EXPECT_NEAR(rms_width(psi), 10 * c.site_spacing(), 0.05 * 10 * c.site_spacing());
  // Energy near the ground band at q = 0.
  EXPECT_NEAR(energy_expectation(psi), band_energies(c, 0.0, 1)[0], 0.01);
}

TEST(Grid, NormAndEnergyConservedInStaticLattice) {
  const LatticeConfig c;
  const auto psi = prepare_wavepacket(c, 20, 2, kSmall);
  const double e0 = energy_expectation(psi);
  const auto r = evolve_grid_1d(psi, flat(200e-6), SignalSpec::none());
  EXPECT_LT(r.norm_drift, 1e-12);
  // Split-step conserves a nearby Hamiltonian; the drift is O(dt^2) and bounded.
  EXPECT_NEAR(energy_expectation(r.final_state), e0, 1e-6 * std::abs(e0));
}

TEST(Grid, NormConservedUnderShakingAndSignal) {
  const LatticeConfig c;
  const auto psi = prepare_wavepacket(c, 20, 0, kSmall);
  const auto r = evolve_grid_1d(psi, library_gate("BS1"), SignalSpec::acceleration(0.05), 0.5e-3);
  EXPECT_LT(r.norm_drift, 1e-11);
}

TEST(Grid, MatchesFewModeOnBroadPacket) {
  // A wide envelope is close to a single quasimomentum, so the grid's order
  // populations after a gate match the plane-wave propagation.
  const LatticeConfig c;
  const auto w = library_gate("BS1");
  const auto psi = prepare_wavepacket(c, 60, 0, GridAxis{512, 8});
  const auto r = evolve_grid_1d(psi, w, SignalSpec::none());
  const auto grid_orders = measure_momentum_orders(r.final_state, 0, 3);
  const auto fm = propagate_fewmode(bloch_state(c, 0), w, c);
  for (int m = -3; m <= 3; ++m) {
    const double p = std::norm(fm.final_state(m + c.truncation));
    EXPECT_NEAR(grid_orders.at(m), p, 5e-3) << "order " << m;
  }
}

TEST(Grid, HoldStepHalvingIsStable) {
  const LatticeConfig c;
  const auto psi = prepare_wavepacket(c, 20, 0, GridAxis{256, 8});
  const auto w = library_gate("BS1");
  EvolveOptions coarse;
  coarse.hold_step = 1e-6;
  EvolveOptions fine = coarse;
  fine.hold_step = 0.5e-6;
  const auto a = measure_momentum_orders(evolve_grid_1d(psi, w, SignalSpec::acceleration(0.02), 1e-3, coarse).final_state);
  const auto b = measure_momentum_orders(evolve_grid_1d(psi, w, SignalSpec::acceleration(0.02), 1e-3, fine).final_state);
  for (int m = -3; m <= 3; ++m) EXPECT_NEAR(a.at(m), b.at(m), 1e-4) << "order " << m;
}

TEST(Grid, DeterministicAcrossRuns) {
  const LatticeConfig c;
  const auto psi = prepare_wavepacket(c, 20, 0, kSmall);
  const auto w = library_gate("BS1");
  const auto a = evolve_grid_1d(psi, w, SignalSpec::gradient(3.0), 0.2e-3);
  const auto b = evolve_grid_1d(psi, w, SignalSpec::gradient(3.0), 0.2e-3);
  EXPECT_EQ(a.final_state.psi, b.final_state.psi);
}

TEST(Grid, WrapHazardIsReported) {
  const LatticeConfig c;
  const auto psi = prepare_wavepacket(c, 20, 0, GridAxis{64, 8});
  // A split cloud travels 17 um per ms; 64 sites span 34 um.
  EXPECT_THROW(evolve_grid_1d(psi, library_gate("BS1"), SignalSpec::none(), 3e-3), NumericalError);
}

TEST(Grid2D, ZeroRotationIsSeparable) {
  const LatticeConfig c;
  const GridAxis ax{64, 8};
  const auto w = library_gate("BS1");
  const auto still = flat(w.duration());
  const auto psi = prepare_wavepacket_2d(c, 10, 0, 0, ax, ax);
  EvolveOptions o;
  o.max_excursion = 1e-6;
  // Shaking x alone and z alone give the same populations on the shaken axis.
  const auto rx = evolve_grid_2d(psi, w, still, SignalSpec::rotation(0.0), 0.0, o);
  const auto rz = evolve_grid_2d(psi, still, w, SignalSpec::rotation(0.0), 0.0, o);
  const auto ox = measure_momentum_orders(rx.final_state, 0, 3);
  const auto oz = measure_momentum_orders(rz.final_state, 1, 3);
  for (int m = -3; m <= 3; ++m) EXPECT_NEAR(ox.at(m), oz.at(m), 1e-10) << "order " << m;
  EXPECT_LT(rx.norm_drift, 1e-11);
  // The idle axis evolves exactly as in an undriven hold.
  const auto held = evolve_grid_2d(psi, still, still, SignalSpec::rotation(0.0), 0.0, o);
  const auto idle = measure_momentum_orders(rx.final_state, 1, 3);
  const auto ref = measure_momentum_orders(held.final_state, 1, 3);
  for (int m = -3; m <= 3; ++m) EXPECT_NEAR(idle.at(m), ref.at(m), 1e-10) << "order " << m;
}

TEST(Grid2D, AgreesWithLineSolver) {
  // The 2D solver propagates the lattice exactly on momentum chains, the 1D
  // solver by split steps; at 8 points per site they agree to the grid's
  // truncation of the outermost orders.
  const LatticeConfig c;
  const GridAxis ax{64, 8};
  const auto w = library_gate("BS1");
  EvolveOptions o;
  o.max_excursion = 1e-6;
  const auto r2 = evolve_grid_2d(prepare_wavepacket_2d(c, 10, 0, 0, ax, ax), w, flat(w.duration()),
                                 SignalSpec::rotation(0.0), 0.0, o);
  const auto r1 = evolve_grid_1d(prepare_wavepacket(c, 10, 0, ax), w, SignalSpec::none(), 0.0, o);
  const auto o2 = measure_momentum_orders(r2.final_state, 0, 3);
  const auto o1 = measure_momentum_orders(r1.final_state, 0, 3);
  for (int m = -3; m <= 3; ++m) EXPECT_NEAR(o2.at(m), o1.at(m), 5e-3) << "order " << m;
}

TEST(Spectrum, FindsToneFrequency) {
  std::vector<double> t(400);
  std::vector<double> y(400);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = i * 10e-6;
    y[i] = 0.3 + 0.1 * std::cos(2.0 * constants::pi * 7123.0 * t[i]);
  }
  EXPECT_NEAR(vibrational_spectrum(t, y), 7123.0, 30.0);
}
