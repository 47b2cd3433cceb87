#pragma once

#include <vector>

#include "bbi/grid.hpp"

namespace bbi::detail {

// Momentum orders from a |psi_k|^2 spectrum in FFT index order.
MomentumDistribution orders_from_spectrum(const std::vector<double>& spectrum, const GridAxis& axis, int max_order);

// Piecewise-constant lattice phase schedule: `count` steps of `dt` (s) at `phi`.
struct PhaseStep {
  double phi = 0.0;
  double dt = 0.0;
  long count = 0;
};

// Splits a waveform into steps: samples one by one, except constant stretches
// at least `hold_run_min` long which are cut into equal steps no longer than
// `hold_step`. `extra_hold` continues the last sample.
std::vector<PhaseStep> phase_schedule(const Waveform& w, double extra_hold, double hold_step, double hold_run_min);

double schedule_duration(const std::vector<PhaseStep>& steps);

}  // namespace bbi::detail
