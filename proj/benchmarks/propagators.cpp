#include <benchmark/benchmark.h>

#include <random>

#include "bbi/fewmode.hpp"
#include "bbi/gatesynth.hpp"
#include "bbi/grid.hpp"
#include "bbi/lattice.hpp"

using namespace bbi;

namespace {

Waveform random_waveform(std::size_t n) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-constants::pi, constants::pi);
  Waveform w;
  w.label = "bench";
  w.samples.resize(n);
  for (double& s : w.samples) s = u(rng);
  return w;
}

}  // namespace

// Plane-wave band structure at one quasimomentum.
static void BM_BandEnergies(benchmark::State& state) {
  const auto config = LatticeConfig{}.with_truncation(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(band_energies(config, 0.3, 6));
}
BENCHMARK(BM_BandEnergies)->Arg(8)->Arg(12)->Arg(20);

// Few-mode propagation through a 200 us waveform, one cached step per sample.
static void BM_FewModeGate(benchmark::State& state) {
  const auto config = LatticeConfig{}.with_truncation(static_cast<int>(state.range(0)));
  const auto w = random_waveform(4000);
  const auto start = bloch_state(config, 0);
  for (auto _ : state) benchmark::DoNotOptimize(propagate_fewmode(start, w, config).final_state);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.samples.size()));
}
BENCHMARK(BM_FewModeGate)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

// Fidelity and adjoint gradient of a 150-bin beamsplitter control.
static void BM_ControlGradient(benchmark::State& state) {
  const ControlProblem problem(gate_target(GateKind::Beamsplitter, 1), LatticeConfig{}, 1e-6);
  std::vector<double> phases = random_waveform(150).samples;
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(problem.fidelity(phases, &grad));
}
BENCHMARK(BM_ControlGradient)->Unit(benchmark::kMillisecond);

// Split-step grid propagation while shaking, one FFT pair per sample.
static void BM_GridShake(benchmark::State& state) {
  const LatticeConfig config;
  const auto psi = prepare_wavepacket(config, 20, 0, GridAxis{static_cast<int>(state.range(0)), 8});
  const auto w = random_waveform(400);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_grid_1d(psi, w, SignalSpec::none()).final_state.psi);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.samples.size()));
}
BENCHMARK(BM_GridShake)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

// A 1 ms static hold with the default hold step.
static void BM_GridHold(benchmark::State& state) {
  const LatticeConfig config;
  const auto psi = prepare_wavepacket(config, 20, 3, GridAxis{static_cast<int>(state.range(0)), 8});
  Waveform idle;
  idle.samples.assign(1, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_grid_1d(psi, idle, SignalSpec::none(), 1e-3).final_state.psi);
}
BENCHMARK(BM_GridHold)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
