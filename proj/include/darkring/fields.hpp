#ifndef DARKRING_FIELDS_HPP
#define DARKRING_FIELDS_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "darkring/constants.hpp"
#include "darkring/error.hpp"
#include "darkring/grid.hpp"

namespace darkring {

/// Power fractions of a field in the LG_p^ell basis at fixed ell.
struct ModeSpectrum {
  double basis_waist = 0.0;
  int ell = 0;
  std::vector<double> fractions;  // indexed by p
  double residual = 1.0;

  [[nodiscard]] double fraction(int p) const {
    return p >= 0 && static_cast<std::size_t>(p) < fractions.size() ? fractions[static_cast<std::size_t>(p)] : 0.0;
  }
};

namespace detail {

template <class F>
void for_each_sample(const GridSpec& grid, F&& f) {
  const std::size_t n = grid.n();
  for (std::size_t row = 0; row < n; ++row) {
    const double y = grid.coord(row);
    for (std::size_t col = 0; col < n; ++col) f(row * n + col, grid.coord(col), y);
  }
}

/// Generalized Laguerre polynomial L_p^alpha(x) by the three-term recurrence.
inline double laguerre(int p, double alpha, double x) {
  if (p == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + alpha - x;
  for (int k = 1; k < p; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace detail

/// Collimated TEM00 beam E = E0 exp(-r^2/w0^2) with 2P/(pi w0^2) peak intensity.
inline ComplexField gaussian_beam(const GridSpec& grid, double w0, double power, double wavelength) {
  if (!(w0 > 0.0)) throw ParameterError("beam waist must be positive");
  if (power < 0.0) throw ParameterError("beam power must be non-negative");
  if (!(wavelength > 0.0)) throw ParameterError("wavelength must be positive");
  grid.require_extent(4.0 * w0, "gaussian_beam");
  ComplexField field(grid, wavelength);
  if (power == 0.0) return field;
  const double e0 = std::sqrt(2.0 * power / (constants::pi * w0 * w0));
  detail::for_each_sample(grid, [&](std::size_t i, double x, double y) {
    field.samples[i] = e0 * std::exp(-(x * x + y * y) / (w0 * w0));
  });
  return field;
}

/// Azimuthal ramp ell*phi with an extra pi on and outside the circle r = rc.
/// rc = +infinity gives the plain vortex mask.
inline PhaseMask ring_phase_mask(const GridSpec& grid, int ell, double rc) {
  if (ell < 0) throw ParameterError("azimuthal index must be non-negative");
  if (std::isnan(rc) || rc <= 0.0) throw ParameterError("step radius rc must be positive");
  PhaseMask mask(grid);
  const double rc2 = std::isinf(rc) ? std::numeric_limits<double>::infinity() : rc * rc;
  detail::for_each_sample(grid, [&](std::size_t i, double x, double y) {
    const double r2 = x * x + y * y;
    double phi = ell == 0 ? 0.0 : ell * std::atan2(y, x);
    if (r2 >= rc2) phi += constants::pi;
    mask.phase[i] = wrap_phase(phi);
  });
  return mask;
}

/// Thin-lens phase -pi r^2/(f lambda); f < 0 diverges, f = inf is flat.
inline PhaseMask lens_phase(const GridSpec& grid, double f, double wavelength) {
  if (f == 0.0 || std::isnan(f)) throw ParameterError("lens focal length must be nonzero");
  if (!(wavelength > 0.0)) throw ParameterError("wavelength must be positive");
  PhaseMask mask(grid);
  if (std::isinf(f)) return mask;
  detail::for_each_sample(grid, [&](std::size_t i, double x, double y) {
    mask.phase[i] = wrap_phase(-constants::pi * (x * x + y * y) / (f * wavelength));
  });
  return mask;
}

inline ComplexField apply_mask(const ComplexField& field, const PhaseMask& mask) {
  if (!(field.grid == mask.grid)) throw ShapeError("mask grid does not match field grid");
  ComplexField out = field;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= std::polar(1.0, mask.phase[i]);
  return out;
}

/// Unit-power Laguerre-Gauss mode LG_p^ell at its waist plane.
inline ComplexField lg_mode(const GridSpec& grid, int p, int ell, double waist, double wavelength = constants::d2_wavelength) {
  if (p < 0) throw ParameterError("radial index must be non-negative");
  if (!(waist > 0.0)) throw ParameterError("mode waist must be positive");
  const int l = std::abs(ell);
  grid.require_extent(4.0 * waist * std::sqrt(2.0 * p + l + 1.0), "lg_mode");
  // sqrt(2 p! / (pi (p+|l|)!)) / w, via lgamma to stay finite for large orders
  const double norm = std::sqrt(2.0 / constants::pi * std::exp(std::lgamma(p + 1.0) - std::lgamma(p + l + 1.0))) / waist;
  ComplexField field(grid, wavelength);
  detail::for_each_sample(grid, [&](std::size_t i, double x, double y) {
    const double r2 = (x * x + y * y) / (waist * waist);
    const double radial = norm * std::pow(std::sqrt(2.0 * r2), l) * detail::laguerre(p, l, 2.0 * r2) * std::exp(-r2);
    field.samples[i] = ell == 0 ? cplx(radial, 0.0) : std::polar(radial, ell * std::atan2(y, x));
  });
  return field;
}

inline ModeSpectrum decompose(const ComplexField& field, double basis_waist, int ell, int p_max) {
  if (p_max < 1) throw ParameterError("p_max must be at least 1");
  const double total = field.power();
  if (!(total > 0.0)) throw ParameterError("cannot decompose a zero field");
  ModeSpectrum spectrum;
  spectrum.basis_waist = basis_waist;
  spectrum.ell = ell;
  double captured = 0.0;
  for (int p = 0; p <= p_max; ++p) {
    const auto mode = lg_mode(field.grid, p, ell, basis_waist, field.wavelength);
    const double frac = std::norm(overlap(mode, field)) / total;
    spectrum.fractions.push_back(frac);
    captured += frac;
  }
  spectrum.residual = 1.0 - captured;
  return spectrum;
}

struct WaistScan {
  std::vector<ModeSpectrum> spectra;  // one per scanned waist, ascending
  std::size_t best = 0;               // index maximizing the target_p fraction
};

/// Decomposes at `steps` basis waists spread over [lo, hi] and records which
/// one puts the most power into LG_{target_p}.
inline WaistScan scan_basis_waist(const ComplexField& field, int ell, int p_max, double lo, double hi, int steps,
                                  int target_p = 1) {
  if (!(lo > 0.0) || !(hi > lo) || steps < 2) throw ParameterError("bad waist scan range");
  WaistScan scan;
  for (int k = 0; k < steps; ++k) {
    const double w = lo + (hi - lo) * k / (steps - 1);
    scan.spectra.push_back(decompose(field, w, ell, p_max));
    if (scan.spectra.back().fraction(target_p) > scan.spectra[scan.best].fraction(target_p)) scan.best = scan.spectra.size() - 1;
  }
  return scan;
}

}  // namespace darkring

#endif  // DARKRING_FIELDS_HPP
