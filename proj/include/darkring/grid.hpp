#ifndef DARKRING_GRID_HPP
#define DARKRING_GRID_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "darkring/constants.hpp"
#include "darkring/error.hpp"

namespace darkring {

using cplx = std::complex<double>;

/// Square transverse sampling grid. Sample (row, col) sits at
/// x = (col - n/2) * pitch, y = (row - n/2) * pitch, so the optical axis
/// falls exactly on sample (n/2, n/2).
class GridSpec {
 public:
  GridSpec(std::size_t n, double pitch) : n_(n), pitch_(pitch) {
    if (n < 64 || !std::has_single_bit(n)) {
      throw ParameterError("grid size must be a power of two >= 64, got " + std::to_string(n));
    }
    if (!(pitch > 0.0) || !std::isfinite(pitch)) {
      throw ParameterError("grid pitch must be positive");
    }
  }

  static GridSpec from_extent(std::size_t n, double extent) { return {n, extent / static_cast<double>(n)}; }

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] double pitch() const noexcept { return pitch_; }
  [[nodiscard]] double extent() const noexcept { return pitch_ * static_cast<double>(n_); }
  [[nodiscard]] std::size_t size() const noexcept { return n_ * n_; }
  [[nodiscard]] double coord(std::size_t i) const noexcept {
    return (static_cast<double>(i) - static_cast<double>(n_ / 2)) * pitch_;
  }
  [[nodiscard]] double area_element() const noexcept { return pitch_ * pitch_; }

  /// Throws SamplingError unless the extent spans at least `required`.
  void require_extent(double required, const char* what) const {
    if (extent() < required) {
      throw SamplingError(std::string(what) + ": grid extent " + std::to_string(extent()) +
                          " m is smaller than the required " + std::to_string(required) + " m");
    }
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  std::size_t n_;
  double pitch_;
};

/// Scalar field in sqrt(W/m^2) units: |E|^2 is intensity.
struct ComplexField {
  GridSpec grid;
  double wavelength;
  std::vector<cplx> samples;

  ComplexField(GridSpec g, double lambda) : grid(g), wavelength(lambda), samples(g.size()) {}

  [[nodiscard]] cplx& at(std::size_t row, std::size_t col) { return samples[row * grid.n() + col]; }
  [[nodiscard]] const cplx& at(std::size_t row, std::size_t col) const { return samples[row * grid.n() + col]; }

  [[nodiscard]] double power() const {
    double sum = 0.0;
    for (const auto& e : samples) sum += std::norm(e);
    return sum * grid.area_element();
  }

  [[nodiscard]] double peak_intensity() const {
    double peak = 0.0;
    for (const auto& e : samples) peak = std::max(peak, std::norm(e));
    return peak;
  }

  [[nodiscard]] std::vector<double> intensity() const {
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = std::norm(samples[i]);
    return out;
  }
};

/// Phase-only transmission, radians wrapped into [0, 2pi).
struct PhaseMask {
  GridSpec grid;
  std::vector<double> phase;

  explicit PhaseMask(GridSpec g) : grid(g), phase(g.size(), 0.0) {}

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return phase[row * grid.n() + col]; }
};

inline double wrap_phase(double phi) {
  double w = std::fmod(phi, constants::two_pi);
  if (w < 0.0) w += constants::two_pi;
  if (w >= constants::two_pi) w = 0.0;
  return w;
}

/// Inner product <a, b> = sum conj(a) b dA.
inline cplx overlap(const ComplexField& a, const ComplexField& b) {
  if (!(a.grid == b.grid)) throw ShapeError("overlap of fields on different grids");
  cplx sum{0.0, 0.0};
  for (std::size_t i = 0; i < a.samples.size(); ++i) sum += std::conj(a.samples[i]) * b.samples[i];
  return sum * a.grid.area_element();
}

}  // namespace darkring

#endif  // DARKRING_GRID_HPP
