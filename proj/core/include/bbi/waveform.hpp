#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace bbi {

inline constexpr double kAwgSamplePeriod = 50e-9;  // s
inline constexpr std::int64_t kAwgSamplePeriodNs = 50;

struct WaveformMetadata {
  double depth = 10.0;  // E_r the waveform was designed for
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::string provenance;  // content hash, filled by finalize()
  std::string gate;        // gate kind name, empty for stitched sequences
  int variant = 0;
  std::string role;  // circuit-planning role, see circuit.hpp
  bool reversed = false;
  bool negated = false;
  std::string generator;  // tool version and config hash, empty if unknown
};

/// Sampled lattice phase phi(t), zero-order hold between samples.
struct Waveform {
  std::vector<double> samples;  // rad
  double sample_period = kAwgSamplePeriod;  // s
  std::string label;
  WaveformMetadata meta;

  double duration() const { return sample_period * static_cast<double>(samples.size()); }
  std::int64_t sample_period_ns() const;
  void validate() const;
  // Recomputes meta.provenance from the samples and label.
  void finalize();
};

Waveform reverse(const Waveform& w);
Waveform negate(const Waveform& w);

// Zero-order-hold resampling to a finer period that divides the current one.
Waveform resample_hold(const Waveform& w, double new_period);

std::string content_hash(const std::vector<double>& samples, const std::string& salt = {});
std::string hash_text(const std::string& text);

// JSON waveform files: {label, sample_period_ns, samples_rad[], depth_Er,
// fidelity, seed, ...}. Doubles round-trip bit-exactly.
std::string waveform_to_json(const Waveform& w);
Waveform waveform_from_json(const std::string& text);
void save_waveform(const Waveform& w, const std::filesystem::path& path);
Waveform load_waveform(const std::filesystem::path& path);

}  // namespace bbi
