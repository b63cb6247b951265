#ifndef DARKRING_ATOMIC_HPP
#define DARKRING_ATOMIC_HPP

#include <algorithm>
#include <cmath>

#include "darkring/constants.hpp"
#include "darkring/error.hpp"

namespace darkring {

/// Rb-85 D-line parameters plus the trap laser detuning. Detuning is an
/// angular frequency, positive above the D2 resonance (blue).
struct AtomicParams {
  double linewidth = constants::linewidth;
  double saturation_intensity = constants::saturation_intensity;
  double fine_structure = constants::fine_structure;
  double mass = constants::rb85_mass;
  double resonance_wavelength = constants::d2_wavelength;
  double detuning = 0.0;
  double raman_branching = 2.0 / 3.0;

  /// Angular detuning for a wavelength offset (nm) below resonance:
  /// delta_omega = 2 pi c delta_lambda / lambda0^2, about 2 pi x 492 GHz per nm.
  [[nodiscard]] double nm_to_detuning(double nm) const {
    return constants::two_pi * constants::c * nm * 1e-9 / (resonance_wavelength * resonance_wavelength);
  }
  [[nodiscard]] double detuning_to_nm(double omega) const {
    return omega * resonance_wavelength * resonance_wavelength / (constants::two_pi * constants::c) * 1e9;
  }
  [[nodiscard]] double detuning_nm() const { return detuning_to_nm(detuning); }

  /// Trap laser wavelength; blue detuning shortens it.
  [[nodiscard]] double laser_wavelength() const { return resonance_wavelength - detuning_nm() * 1e-9; }

  [[nodiscard]] double hbar_gamma() const { return constants::hbar * linewidth; }

  static AtomicParams rb85(double detuning_nm) {
    AtomicParams p;
    p.detuning = p.nm_to_detuning(detuning_nm);
    return p;
  }
};

namespace detail {

inline void check_detuning(const AtomicParams& p) {
  if (p.detuning == 0.0) throw SingularityError("detuning is zero: the dipole potential diverges on resonance");
  if (p.detuning + p.fine_structure == 0.0) throw SingularityError("detuning sits on the D1 line");
}

}  // namespace detail

/// U per unit intensity (J per W/m^2), so U = kappa * I.
inline double dipole_coefficient(const AtomicParams& p) {
  detail::check_detuning(p);
  const double g = p.linewidth;
  return constants::hbar * g / (24.0 * p.saturation_intensity) * (g / (p.detuning + p.fine_structure) + 2.0 * g / p.detuning);
}

inline double dipole_potential(double intensity, const AtomicParams& p) {
  if (intensity < 0.0) throw ParameterError("intensity must be non-negative");
  return dipole_coefficient(p) * intensity;
}

struct ScatteringRates {
  double total = 0.0;  // photons per second
  double raman = 0.0;  // hyperfine-changing events per second
};

/// Per-unit-intensity rates (s^-1 per W/m^2).
inline ScatteringRates scattering_coefficients(const AtomicParams& p) {
  detail::check_detuning(p);
  const double g = p.linewidth;
  const double pref = g * g * g / (24.0 * p.saturation_intensity);
  const double d1 = p.detuning + p.fine_structure;
  const double diff = 1.0 / p.detuning - 1.0 / d1;
  return {pref * (2.0 / (p.detuning * p.detuning) + 1.0 / (d1 * d1)), p.raman_branching * pref * diff * diff};
}

inline ScatteringRates scattering_rates(double intensity, const AtomicParams& p) {
  if (intensity < 0.0) throw ParameterError("intensity must be non-negative");
  const auto c = scattering_coefficients(p);
  return {c.total * intensity, c.raman * intensity};
}

/// Photon recoil energy at the resonance wavelength.
inline double recoil_energy(const AtomicParams& p) {
  const double k = constants::two_pi / p.resonance_wavelength;
  return constants::hbar * constants::hbar * k * k / (2.0 * p.mass);
}

enum class RecoilBudget {
  per_event,     // each scattering event deposits 2 E_rec; reported as 2 E_rec / k_B per event
  kinetic_3d,    // same energy shared as (3/2) k_B T kinetic temperature: (2/3)(2 E_rec / k_B)
};

/// Heating (K/s) for a given scattering rate.
inline double recoil_heating_rate(double scatter_rate, const AtomicParams& p, RecoilBudget budget = RecoilBudget::per_event) {
  if (scatter_rate < 0.0) throw ParameterError("scattering rate must be non-negative");
  const double per_event = 2.0 * recoil_energy(p) / constants::k_boltzmann;
  return scatter_rate * per_event * (budget == RecoilBudget::kinetic_3d ? 2.0 / 3.0 : 1.0);
}

/// Mean photon scattering time of atoms in a red-detuned Gaussian trap whose
/// depth matches `depth` (J). Atoms of temperature T in the harmonic bottom
/// sit on average (3/2) k_B T above the minimum, where the intensity is
/// correspondingly lower.
inline double red_trap_scattering_time(double depth, double detuning_nm, double temperature, AtomicParams p = {}) {
  if (!(depth > 0.0)) throw ParameterError("trap depth must be positive");
  if (temperature < 0.0) throw ParameterError("temperature must be non-negative");
  p.detuning = -p.nm_to_detuning(std::abs(detuning_nm));
  const double kappa = dipole_coefficient(p);  // negative: attractive
  const double peak_intensity = depth / -kappa;
  const double mean_intensity = peak_intensity * std::max(0.0, 1.0 - 1.5 * constants::k_boltzmann * temperature / depth);
  const double rate = scattering_rates(mean_intensity, p).total;
  if (!(rate > 0.0)) throw DomainError("atoms are not bound at this temperature");
  return 1.0 / rate;
}

}  // namespace darkring

#endif  // DARKRING_ATOMIC_HPP
