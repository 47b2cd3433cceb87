#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bbi/sensing.hpp"
#include "bbi/units.hpp"

namespace bbi {

/// Reproducible numerical settings shared by the command-line tools.
///
/// JSON form (every key optional, unknown keys rejected):
///   {"preset": "rb87-1064", "depth": 10, "truncation": 12,
///    "sites": 1024, "points_per_site": 8, "sites_z": 160, "points_per_site_z": 7,
///    "envelope_sites": 20, "hold_step": "500ns", "rotation_step": "5us",
///    "seed": 0, "workers": 0, "output_dir": "."}
struct RunConfig {
  std::string preset = "rb87-1064";
  std::optional<double> depth;  // E_r, overrides the preset
  int truncation = kSynthesisTruncation;
  int sites = 1024;
  int points_per_site = 8;
  int sites_z = 160;
  int points_per_site_z = 7;
  int envelope_sites = 20;
  std::int64_t hold_step_ns = 500;
  std::int64_t rotation_step_ns = 5000;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string output_dir = ".";

  void validate() const;
  LatticeConfig lattice() const;
  ScanOptions scan_options() const;

  std::string to_json() const;  // canonical, every key present
  std::string hash() const;     // hash of the canonical JSON
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace bbi
