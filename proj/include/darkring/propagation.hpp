#ifndef DARKRING_PROPAGATION_HPP
#define DARKRING_PROPAGATION_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "darkring/constants.hpp"
#include "darkring/error.hpp"
#include "darkring/fft.hpp"
#include "darkring/fields.hpp"
#include "darkring/grid.hpp"

namespace darkring {

/// Where an intensity volume came from. `azimuthally_pure` marks sources with
/// exact e^{i ell phi} symmetry, for which the azimuthal average is lossless.
struct SourceInfo {
  int ell = 0;
  double rc = 0.0;
  double w0 = 0.0;
  double focal_length = 0.0;
  double wavelength = 0.0;
  double power = 0.0;
  bool azimuthally_pure = false;
};

/// I(rho, z) on a uniform grid: rho from 0, z centred on the focal plane.
/// Stored row-major with z as the slow index.
struct IntensityVolume {
  std::vector<double> rho_axis;
  std::vector<double> z_axis;
  std::vector<double> intensity;
  SourceInfo source;
  double max_azimuthal_variance = 0.0;  // relative, over sampled circles
  double window_fraction = 1.0;         // share of source power landing in the focal window

  [[nodiscard]] std::size_t n_rho() const noexcept { return rho_axis.size(); }
  [[nodiscard]] std::size_t n_z() const noexcept { return z_axis.size(); }
  [[nodiscard]] double at(std::size_t iz, std::size_t irho) const { return intensity[iz * n_rho() + irho]; }
  [[nodiscard]] double& at(std::size_t iz, std::size_t irho) { return intensity[iz * n_rho() + irho]; }
  [[nodiscard]] double rho_step() const { return rho_axis[1] - rho_axis[0]; }
  [[nodiscard]] double z_step() const { return z_axis[1] - z_axis[0]; }

  /// Index of the plane closest to z = 0.
  [[nodiscard]] std::size_t focal_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < z_axis.size(); ++i)
      if (std::abs(z_axis[i]) < std::abs(z_axis[best])) best = i;
    return best;
  }
};

namespace detail {

/// Largest per-axis frequency at which the angular-spectrum transfer function
/// is still sampled finely enough for propagation by dz.
inline double band_limit(const GridSpec& grid, double wavelength, double dz) {
  const double df = 1.0 / grid.extent();
  return 1.0 / (wavelength * std::sqrt(std::pow(2.0 * df * std::abs(dz), 2) + 1.0));
}

struct SpectrumCheck {
  double outside_band = 0.0;  // fraction of energy beyond the transfer-function band limit
  double nyquist = 0.0;       // fraction in the outermost 1/16 of the band on either axis
};

inline SpectrumCheck check_spectrum(const std::vector<cplx>& spectrum, const GridSpec& grid, double limit) {
  const std::size_t n = grid.n();
  const double f_nyq = 0.5 / grid.pitch();
  double total = 0.0, outside = 0.0, edge = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double fy = std::abs(fft_frequency(r, n, grid.pitch()));
    for (std::size_t c = 0; c < n; ++c) {
      const double fx = std::abs(fft_frequency(c, n, grid.pitch()));
      const double e = std::norm(spectrum[r * n + c]);
      total += e;
      if (fx > limit || fy > limit) outside += e;
      if (std::max(fx, fy) >= f_nyq * (15.0 / 16.0)) edge += e;
    }
  }
  if (total <= 0.0) return {};
  return {outside / total, edge / total};
}

/// Multiplies an (unshifted) spectrum by the free-space transfer function
/// exp(i kz dz), zeroing components beyond the band limit.
inline void apply_transfer(std::vector<cplx>& spectrum, const GridSpec& grid, double wavelength, double dz) {
  const std::size_t n = grid.n();
  const double limit = band_limit(grid, wavelength, dz);
  const double inv_l2 = 1.0 / (wavelength * wavelength);
  for (std::size_t r = 0; r < n; ++r) {
    const double fy = fft_frequency(r, n, grid.pitch());
    for (std::size_t c = 0; c < n; ++c) {
      const double fx = fft_frequency(c, n, grid.pitch());
      auto& s = spectrum[r * n + c];
      if (std::abs(fx) > limit || std::abs(fy) > limit) {
        s = 0.0;
        continue;
      }
      const double arg = inv_l2 - fx * fx - fy * fy;
      if (arg >= 0.0) {
        s *= std::polar(1.0, constants::two_pi * std::sqrt(arg) * dz);
      } else {
        s *= std::exp(-constants::two_pi * std::sqrt(-arg) * dz);
      }
    }
  }
}

inline void checked_guard(const std::vector<cplx>& spectrum, const GridSpec& grid, double wavelength, double dz,
                          const std::string& where) {
  constexpr double tolerance = 1e-6;
  const auto check = check_spectrum(spectrum, grid, band_limit(grid, wavelength, dz));
  if (check.nyquist > tolerance) {
    throw SamplingError(where + ": " + std::to_string(check.nyquist) +
                        " of the field energy sits at the Nyquist edge; refine the grid pitch");
  }
  if (check.outside_band > tolerance) {
    throw SamplingError(where + ": " + std::to_string(check.outside_band) + " of the energy lies beyond the " +
                        "transfer-function band limit for dz = " + std::to_string(dz) + " m; enlarge the grid extent");
  }
}

}  // namespace detail

/// Exact scalar free-space propagation by dz (band-limited transfer function).
inline ComplexField angular_spectrum(const ComplexField& field, double dz) {
  if (dz == 0.0) return field;
  const auto& fft = Fft2d::of_size(field.grid.n());
  std::vector<cplx> spectrum = field.samples;
  fft.forward(spectrum);
  detail::checked_guard(spectrum, field.grid, field.wavelength, dz, "angular_spectrum");
  detail::apply_transfer(spectrum, field.grid, field.wavelength, dz);
  fft.backward(spectrum);
  const double scale = 1.0 / static_cast<double>(field.grid.size());
  ComplexField out(field.grid, field.wavelength);
  for (std::size_t i = 0; i < spectrum.size(); ++i) out.samples[i] = spectrum[i] * scale;
  return out;
}

/// Output pitch of the FFT lens jump: lambda f / (n pitch_in).
inline double focal_pitch(const ComplexField& field, double f) {
  return field.wavelength * f / field.grid.extent();
}

namespace detail {

inline void check_focusing(const ComplexField& field, double f) {
  if (!(f > 0.0)) throw ParameterError("focal length must be positive");
  if (field.grid.extent() / (2.0 * f) > 0.1) throw ParameterError("lens jump assumes a paraxial (low NA) geometry");
}

/// Fresnel prefactor exp(i k u^2 / 2f) / (i lambda f) at focal-plane radius^2 u2.
inline cplx focal_prefactor(double u2, double wavelength, double f) {
  const double k = constants::two_pi / wavelength;
  return std::polar(1.0, k * u2 / (2.0 * f)) / cplx(0.0, wavelength * f);
}

}  // namespace detail

/// Field in the back focal plane of a thin lens of focal length f placed at
/// the source plane. One centred FFT; the result lives on a grid of the same
/// size with pitch lambda f / (n pitch_in), so power is conserved exactly.
inline ComplexField to_focal_region(const ComplexField& field, double f) {
  detail::check_focusing(field, f);
  const std::size_t n = field.grid.n();
  const GridSpec out_grid(n, focal_pitch(field, f));
  std::vector<cplx> data = field.samples;
  // (-1)^(r+c) modulation centres both the input and the output on n/2.
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if ((r + c) & 1U) data[r * n + c] = -data[r * n + c];
  Fft2d::of_size(n).forward(data);
  ComplexField out(out_grid, field.wavelength);
  const double area = field.grid.area_element();
  for (std::size_t r = 0; r < n; ++r) {
    const double v = out_grid.coord(r);
    for (std::size_t c = 0; c < n; ++c) {
      const double u = out_grid.coord(c);
      const double sign = ((r + c) & 1U) ? -1.0 : 1.0;
      out.samples[r * n + c] = sign * area * data[r * n + c] * detail::focal_prefactor(u * u + v * v, field.wavelength, f);
    }
  }
  return out;
}

/// Lens jump onto an arbitrary focal grid by a separable matrix Fourier
/// transform. Power is conserved to the extent the output window holds it.
inline ComplexField to_focal_region(const ComplexField& field, double f, const GridSpec& out_grid) {
  detail::check_focusing(field, f);
  const std::size_t n_in = field.grid.n();
  const std::size_t n_out = out_grid.n();
  const double scale = -constants::two_pi / (field.wavelength * f);

  // kernel[m * n_in + j] = exp(-2 pi i x_j u_m / (lambda f))
  std::vector<double> kre(n_out * n_in), kim(n_out * n_in);
  for (std::size_t m = 0; m < n_out; ++m) {
    const double u = out_grid.coord(m);
    for (std::size_t j = 0; j < n_in; ++j) {
      const double arg = scale * u * field.grid.coord(j);
      kre[m * n_in + j] = std::cos(arg);
      kim[m * n_in + j] = std::sin(arg);
    }
  }

  // Rows first: tmp[i][m] = sum_j E[i][j] K[m][j]. Input rows that carry no
  // field are skipped.
  std::vector<double> tre(n_in * n_out, 0.0), tim(n_in * n_out, 0.0);
  std::vector<double> ere(n_in), eim(n_in);
#pragma omp parallel for schedule(static) firstprivate(ere, eim)
  for (std::size_t i = 0; i < n_in; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n_in; ++j) {
      const cplx e = field.samples[i * n_in + j];
      ere[j] = e.real();
      eim[j] = e.imag();
      any = any || e != 0.0;
    }
    if (!any) continue;
    for (std::size_t m = 0; m < n_out; ++m) {
      const double* kr = &kre[m * n_in];
      const double* ki = &kim[m * n_in];
      double sr = 0.0, si = 0.0;
      for (std::size_t j = 0; j < n_in; ++j) {
        sr += ere[j] * kr[j] - eim[j] * ki[j];
        si += ere[j] * ki[j] + eim[j] * kr[j];
      }
      tre[i * n_out + m] = sr;
      tim[i * n_out + m] = si;
    }
  }

  // Columns: out[p][m] = sum_i K[p][i] tmp[i][m].
  ComplexField out(out_grid, field.wavelength);
  const double area = field.grid.area_element();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < n_out; ++p) {
    std::vector<double> accr(n_out, 0.0), acci(n_out, 0.0);
    for (std::size_t i = 0; i < n_in; ++i) {
      const double kr = kre[p * n_in + i];
      const double ki = kim[p * n_in + i];
      const double* tr = &tre[i * n_out];
      const double* ti = &tim[i * n_out];
      for (std::size_t m = 0; m < n_out; ++m) {
        accr[m] += kr * tr[m] - ki * ti[m];
        acci[m] += kr * ti[m] + ki * tr[m];
      }
    }
    const double v = out_grid.coord(p);
    for (std::size_t m = 0; m < n_out; ++m) {
      const double u = out_grid.coord(m);
      out.samples[p * n_out + m] = area * cplx(accr[m], acci[m]) * detail::focal_prefactor(u * u + v * v, field.wavelength, f);
    }
  }
  return out;
}

/// Sampling of the focal region for focus scans.
struct FocalSampling {
  std::size_t n = 512;       // focal grid side
  double pitch = 2.0e-6;     // focal grid pitch (m)
  std::size_t n_rho = 512;   // radial samples of the azimuthal average
  std::size_t n_phi = 256;   // angles per circle
  double rho_max = 200e-6;   // outer radius of the azimuthal average
};

namespace detail {

/// Precomputed bilinear stencils for averaging |E|^2 around circles.
class AzimuthalAverager {
 public:
  AzimuthalAverager(const GridSpec& grid, const std::vector<double>& rho_axis, std::size_t n_phi)
      : n_rho_(rho_axis.size()), n_phi_(n_phi), n_(grid.n()) {
    const double half = static_cast<double>(grid.n() / 2);
    stencils_.reserve(n_rho_ * n_phi_);
    for (double rho : rho_axis) {
      for (std::size_t k = 0; k < n_phi_; ++k) {
        const double th = constants::two_pi * static_cast<double>(k) / static_cast<double>(n_phi_);
        const double fx = rho * std::cos(th) / grid.pitch() + half;
        const double fy = rho * std::sin(th) / grid.pitch() + half;
        const double x0 = std::floor(fx), y0 = std::floor(fy);
        if (x0 < 0 || y0 < 0 || x0 + 1 >= static_cast<double>(n_) || y0 + 1 >= static_cast<double>(n_)) {
          throw SamplingError("azimuthal average radius exceeds the focal grid");
        }
        Stencil s;
        s.index = static_cast<std::size_t>(y0) * n_ + static_cast<std::size_t>(x0);
        s.tx = fx - x0;
        s.ty = fy - y0;
        stencils_.push_back(s);
      }
    }
  }

  /// Mean of |E|^2 on each circle; also returns the largest relative
  /// variance around any circle with non-negligible mean.
  void average(const std::vector<cplx>& field, double* out, double& max_rel_variance) const {
    double peak = 0.0;
    std::vector<double> means(n_rho_), vars(n_rho_);
    for (std::size_t i = 0; i < n_rho_; ++i) {
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t k = 0; k < n_phi_; ++k) {
        const auto& s = stencils_[i * n_phi_ + k];
        const cplx a = field[s.index], b = field[s.index + 1];
        const cplx c = field[s.index + n_], d = field[s.index + n_ + 1];
        const cplx e = (1 - s.ty) * ((1 - s.tx) * a + s.tx * b) + s.ty * ((1 - s.tx) * c + s.tx * d);
        const double in = std::norm(e);
        sum += in;
        sum2 += in * in;
      }
      const double mean = sum / static_cast<double>(n_phi_);
      out[i] = mean;
      means[i] = mean;
      vars[i] = std::max(0.0, sum2 / static_cast<double>(n_phi_) - mean * mean);
      peak = std::max(peak, mean);
    }
    for (std::size_t i = 0; i < n_rho_; ++i) {
      if (means[i] > 1e-3 * peak) max_rel_variance = std::max(max_rel_variance, vars[i] / (means[i] * means[i]));
    }
  }

 private:
  struct Stencil {
    std::size_t index;
    double tx, ty;
  };
  std::size_t n_rho_, n_phi_, n_;
  std::vector<Stencil> stencils_;
};

}  // namespace detail

namespace detail {

// The focal window truncates the wide diffraction halo of a stepped source.
// A radial cos^2 taper over the rim absorbs it instead of letting the hard
// edge scatter energy across the spectrum.
inline constexpr double kTaperStart = 0.75;
inline constexpr double kTaperEnd = 0.95;

inline void apply_edge_taper(ComplexField& field) {
  const double half = 0.5 * field.grid.extent();
  const double a = kTaperStart * half, b = kTaperEnd * half;
  for_each_sample(field.grid, [&](std::size_t i, double x, double y) {
    const double r = std::sqrt(x * x + y * y);
    if (r <= a) return;
    if (r >= b) {
      field.samples[i] = 0.0;
      return;
    }
    const double c = std::cos(0.5 * constants::pi * (r - a) / (b - a));
    field.samples[i] *= c * c;
  });
}

}  // namespace detail

/// Relative intensity variance around a circle of radius rho, sampled
/// bilinearly at n_phi angles.
inline double azimuthal_variance(const ComplexField& field, double rho, std::size_t n_phi = 256) {
  detail::AzimuthalAverager avg(field.grid, {rho}, n_phi);
  double mean = 0.0, var = 0.0;
  avg.average(field.samples, &mean, var);
  return var;
}

/// Intensity volume around the focus of lens f: one lens jump onto the
/// focal grid, then angular-spectrum steps to n_planes planes spanning
/// [-z_span, z_span], each azimuthally averaged.
inline IntensityVolume focus_scan(const ComplexField& field, double f, double z_span, std::size_t n_planes,
                                  const FocalSampling& sampling = {}, SourceInfo source = {}) {
  if (n_planes < 11 || n_planes % 2 == 0) throw ParameterError("focus_scan needs an odd number of planes >= 11");
  if (!(z_span > 0.0)) throw ParameterError("z span must be positive");
  const GridSpec focal_grid(sampling.n, sampling.pitch);
  const double half = 0.5 * focal_grid.extent();
  if (sampling.rho_max > detail::kTaperStart * half) {
    throw SamplingError("rho_max reaches into the tapered rim of the focal grid; raise focal n or pitch");
  }
  ComplexField focal = to_focal_region(field, f, focal_grid);
  const double captured = focal.power();
  detail::apply_edge_taper(focal);

  IntensityVolume vol;
  vol.source = source;
  vol.source.focal_length = f;
  vol.source.wavelength = field.wavelength;
  vol.source.power = field.power();
  vol.window_fraction = captured / vol.source.power;
  vol.rho_axis.resize(sampling.n_rho);
  for (std::size_t i = 0; i < sampling.n_rho; ++i)
    vol.rho_axis[i] = sampling.rho_max * static_cast<double>(i) / static_cast<double>(sampling.n_rho - 1);
  vol.z_axis.resize(n_planes);
  for (std::size_t k = 0; k < n_planes; ++k)
    vol.z_axis[k] = -z_span + 2.0 * z_span * static_cast<double>(k) / static_cast<double>(n_planes - 1);
  vol.intensity.assign(n_planes * sampling.n_rho, 0.0);

  const auto& fft = Fft2d::of_size(focal_grid.n());
  std::vector<cplx> spectrum = focal.samples;
  fft.forward(spectrum);
  const detail::AzimuthalAverager averager(focal_grid, vol.rho_axis, sampling.n_phi);
  const double norm = 1.0 / static_cast<double>(focal_grid.size());

  for (std::size_t k = 0; k < n_planes; ++k) {
    const auto check =
        detail::check_spectrum(spectrum, focal_grid, detail::band_limit(focal_grid, field.wavelength, vol.z_axis[k]));
    if (check.outside_band > 1e-6 || check.nyquist > 1e-6) {
      throw SamplingError("focus_scan: plane " + std::to_string(k) + " (z = " + std::to_string(vol.z_axis[k]) +
                          " m) aliases; energy outside band " + std::to_string(check.outside_band) +
                          ", at Nyquist edge " + std::to_string(check.nyquist));
    }
  }

  std::vector<double> variances(n_planes, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < n_planes; ++k) {
    std::vector<cplx> plane = spectrum;
    detail::apply_transfer(plane, focal_grid, field.wavelength, vol.z_axis[k]);
    fft.backward(plane);
    for (auto& s : plane) s *= norm;
    averager.average(plane, &vol.intensity[k * sampling.n_rho], variances[k]);
  }
  vol.max_azimuthal_variance = *std::max_element(variances.begin(), variances.end());
  return vol;
}

/// Radial profile I(rho) at the plane closest to z.
inline std::vector<double> rho_profile(const IntensityVolume& vol, double z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < vol.n_z(); ++i)
    if (std::abs(vol.z_axis[i] - z) < std::abs(vol.z_axis[best] - z)) best = i;
  return {vol.intensity.begin() + static_cast<std::ptrdiff_t>(best * vol.n_rho()),
          vol.intensity.begin() + static_cast<std::ptrdiff_t>((best + 1) * vol.n_rho())};
}

}  // namespace darkring

#endif  // DARKRING_PROPAGATION_HPP
