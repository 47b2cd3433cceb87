#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bbi {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double planck = 6.62607015e-34;  // J s
inline constexpr double standard_gravity = 9.80665;  // m / s^2
inline constexpr double pi = 3.141592653589793238462643383279502884;
}  // namespace constants

/// Physical and numerical description of a 1D optical lattice.
///
/// Internally everything runs in recoil units: energies in E_r, times in
/// t_r = hbar / E_r, lengths in 1 / k_L. The accessors below are the only
/// place where SI quantities enter.
struct LatticeConfig {
  double depth = 10.0;             // V0 / E_r
  double wavelength = 1064e-9;     // m
  double atom_mass = 1.44316e-25;  // kg
  int truncation = 12;             // plane-wave orders l in [-N, N]

  double wavenumber() const;       // k_L = 2 pi / lambda, 1/m
  double recoil_energy() const;    // E_r = hbar^2 k_L^2 / 2m, J
  double recoil_time() const;      // t_r = hbar / E_r, s
  double recoil_velocity() const;  // v_r = hbar k_L / m, m/s
  double recoil_frequency() const; // E_r / h, Hz
  double site_spacing() const;     // lambda / 2, m

  int dimension() const { return 2 * truncation + 1; }

  double to_recoil_time(double seconds) const { return seconds / recoil_time(); }
  double to_seconds(double recoil_times) const { return recoil_times * recoil_time(); }
  double to_recoil_length(double meters) const { return meters * wavenumber(); }
  double to_meters(double recoil_lengths) const { return recoil_lengths / wavenumber(); }

  // Throws ValidationError if any field is out of range.
  void validate() const;

  LatticeConfig with_truncation(int n) const {
    LatticeConfig c = *this;
    c.truncation = n;
    return c;
  }

  static LatticeConfig preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

inline constexpr int kSynthesisTruncation = 12;
inline constexpr int kVerificationTruncation = 16;

}  // namespace bbi
