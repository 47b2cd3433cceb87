#include "bbi/units.hpp"

#include <cmath>

#include "bbi/errors.hpp"

namespace bbi {

double LatticeConfig::wavenumber() const { return 2.0 * constants::pi / wavelength; }

double LatticeConfig::recoil_energy() const {
  const double k = wavenumber();
  return constants::hbar * constants::hbar * k * k / (2.0 * atom_mass);
}

double LatticeConfig::recoil_time() const { return constants::hbar / recoil_energy(); }

double LatticeConfig::recoil_velocity() const { return constants::hbar * wavenumber() / atom_mass; }

double LatticeConfig::recoil_frequency() const { return recoil_energy() / constants::planck; }

double LatticeConfig::site_spacing() const { return 0.5 * wavelength; }

void LatticeConfig::validate() const {
  // depth == 0 is the free-particle limit and stays legal.
  if (!std::isfinite(depth) || depth < 0.0) {
    throw ValidationError("lattice depth must be finite and non-negative");
  }
  if (!std::isfinite(wavelength) || wavelength <= 0.0) {
    throw ValidationError("lattice wavelength must be positive");
  }
  if (!std::isfinite(atom_mass) || atom_mass <= 0.0) {
    throw ValidationError("atom mass must be positive");
  }
  if (truncation < 8) {
    throw ValidationError("plane-wave truncation must be at least 8");
  }
}

LatticeConfig LatticeConfig::preset(std::string_view name) {
  if (name == "rb87-1064") {
    return LatticeConfig{};
  }
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> LatticeConfig::preset_names() { return {"rb87-1064"}; }

}  // namespace bbi
