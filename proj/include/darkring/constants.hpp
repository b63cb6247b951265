#ifndef DARKRING_CONSTANTS_HPP
#define DARKRING_CONSTANTS_HPP

#include <numbers>

namespace darkring::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double c = 299'792'458.0;           // m/s
inline constexpr double hbar = 1.054'571'817e-34;    // J s
inline constexpr double k_boltzmann = 1.380'649e-23;  // J/K
inline constexpr double g_earth = 9.806'65;          // m/s^2

// Rb-85 D2 line and the trap parameters used throughout.
inline constexpr double rb85_mass = 1.4100e-25;       // kg
inline constexpr double d2_wavelength = 780.24e-9;    // m
inline constexpr double linewidth = two_pi * 6.1e6;   // rad/s
inline constexpr double saturation_intensity = 16.0;  // W/m^2 (1.6 mW/cm^2)
inline constexpr double fine_structure = two_pi * 7.1e12;  // rad/s

}  // namespace darkring::constants

#endif  // DARKRING_CONSTANTS_HPP
