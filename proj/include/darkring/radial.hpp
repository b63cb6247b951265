#ifndef DARKRING_RADIAL_HPP
#define DARKRING_RADIAL_HPP

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "darkring/constants.hpp"
#include "darkring/error.hpp"
#include "darkring/fields.hpp"
#include "darkring/propagation.hpp"

namespace darkring {

/// Source field A(r) e^{i ell phi} with a real, piecewise-smooth radial
/// amplitude. `breaks` lists radii where A may jump; quadrature panels are
/// split there.
struct RadialSource {
  int ell = 0;
  double wavelength = constants::d2_wavelength;
  double outer_radius = 0.0;  // A is negligible beyond this
  std::vector<double> breaks;
  std::function<double(double)> amplitude;
  SourceInfo info;
};

/// Gaussian of waist w0 and power P through a ring phase mask (ell, rc).
inline RadialSource stepped_gaussian_source(double w0, double power, double wavelength, int ell, double rc) {
  if (!(w0 > 0.0)) throw ParameterError("beam waist must be positive");
  if (ell < 0) throw ParameterError("azimuthal index must be non-negative");
  if (std::isnan(rc) || rc <= 0.0) throw ParameterError("step radius rc must be positive");
  RadialSource s;
  s.ell = ell;
  s.wavelength = wavelength;
  s.outer_radius = 6.5 * w0;
  if (rc < s.outer_radius) s.breaks.push_back(rc);
  const double e0 = std::sqrt(2.0 * power / (constants::pi * w0 * w0));
  s.amplitude = [=](double r) { return (r >= rc ? -e0 : e0) * std::exp(-r * r / (w0 * w0)); };
  s.info = {ell, rc, w0, 0.0, wavelength, power, true};
  return s;
}

/// Pure LG_p^ell mode of the given waist carrying power P.
inline RadialSource lg_source(int p, int ell, double waist, double power, double wavelength) {
  if (p < 0 || !(waist > 0.0)) throw ParameterError("bad LG mode parameters");
  RadialSource s;
  s.ell = std::abs(ell);
  s.wavelength = wavelength;
  s.outer_radius = waist * (std::sqrt(2.0 * p + s.ell + 1.0) + 4.5);
  const int l = s.ell;
  const double norm =
      std::sqrt(power * 2.0 / constants::pi * std::exp(std::lgamma(p + 1.0) - std::lgamma(p + l + 1.0))) / waist;
  s.amplitude = [=](double r) {
    const double x = 2.0 * r * r / (waist * waist);
    return norm * std::pow(std::sqrt(x), l) * detail::laguerre(p, l, x) * std::exp(-0.5 * x);
  };
  s.info = {s.ell, std::numeric_limits<double>::infinity(), waist, 0.0, wavelength, power, true};
  return s;
}

namespace detail {

struct RadialNodes {
  std::vector<double> r, weight;  // weight includes the r dr Jacobian
};

inline RadialNodes radial_nodes(const RadialSource& s, double max_panel) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  std::vector<double> edges{0.0};
  for (double b : s.breaks)
    if (b > 0.0 && b < s.outer_radius) edges.push_back(b);
  edges.push_back(s.outer_radius);
  std::sort(edges.begin(), edges.end());
  RadialNodes nodes;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double span = edges[e + 1] - edges[e];
    const int panels = std::max(1, static_cast<int>(std::ceil(span / max_panel)));
    for (int k = 0; k < panels; ++k) {
      const double a = edges[e] + span * k / panels;
      const double h = 0.5 * span / panels;
      const double mid = a + h;
      const auto& xs = Rule::abscissa();
      const auto& ws = Rule::weights();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
          const double r = mid + sign * h * xs[i];
          nodes.r.push_back(r);
          nodes.weight.push_back(h * ws[i] * r);
        }
      }
    }
  }
  return nodes;
}

/// Cubic interpolation (Catmull-Rom) of y on a uniform axis starting at 0.
inline double uniform_cubic(const std::vector<double>& y, double step, double x) {
  const double t = x / step;
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  auto i = static_cast<std::ptrdiff_t>(std::floor(t));
  i = std::clamp<std::ptrdiff_t>(i, 0, n - 2);
  const double u = t - static_cast<double>(i);
  // Even extension below zero: the radial intensity is symmetric in rho.
  auto at = [&](std::ptrdiff_t k) { return y[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k < 0 ? -k : k, 0, n - 1))]; };
  const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  return p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace detail

/// Focus scan for a cylindrically symmetric source by the paraxial Fresnel
/// integral in Hankel form: the lens sits at the source plane and each plane
/// at distance d = f + z gets
///   E(rho) = (k/d) int A(r) exp(i k r^2 (1/d - 1/f) / 2) J_ell(k rho r / d) r dr
/// up to a phase. Evaluating on rho = u d / f keeps the Bessel matrix fixed
/// across planes; results are resampled onto the common rho axis.
inline IntensityVolume focus_scan_radial(const RadialSource& source, double f, double z_span, std::size_t n_planes,
                                         const FocalSampling& sampling = {}) {
  if (!(f > 0.0)) throw ParameterError("focal length must be positive");
  if (n_planes < 11 || n_planes % 2 == 0) throw ParameterError("focus_scan needs an odd number of planes >= 11");
  if (!(z_span > 0.0) || z_span >= 0.5 * f) throw ParameterError("z span must be positive and well inside f");
  if (sampling.n_rho < 8) throw ParameterError("too few radial samples");
  const double k = constants::two_pi / source.wavelength;

  const auto nodes = detail::radial_nodes(source, 0.05 * source.outer_radius);
  std::vector<double> amp(nodes.r.size());
  for (std::size_t j = 0; j < amp.size(); ++j) amp[j] = source.amplitude(nodes.r[j]) * nodes.weight[j];

  // Scaled radius grid: covers rho_max at the nearest plane (d = f - z_span).
  const std::size_t n_u = 4 * sampling.n_rho;
  const double u_max = 1.02 * sampling.rho_max * f / (f - z_span);
  const double du = u_max / static_cast<double>(n_u - 1);
  std::vector<double> bessel(n_u * nodes.r.size());
  for (std::size_t i = 0; i < n_u; ++i) {
    const double u = du * static_cast<double>(i);
    for (std::size_t j = 0; j < nodes.r.size(); ++j)
      bessel[i * nodes.r.size() + j] = std::cyl_bessel_j(static_cast<double>(source.ell), k * u * nodes.r[j] / f);
  }

  IntensityVolume vol;
  vol.source = source.info;
  vol.source.focal_length = f;
  vol.source.wavelength = source.wavelength;
  vol.source.azimuthally_pure = true;
  vol.rho_axis.resize(sampling.n_rho);
  for (std::size_t i = 0; i < sampling.n_rho; ++i)
    vol.rho_axis[i] = sampling.rho_max * static_cast<double>(i) / static_cast<double>(sampling.n_rho - 1);
  vol.z_axis.resize(n_planes);
  for (std::size_t p = 0; p < n_planes; ++p)
    vol.z_axis[p] = -z_span + 2.0 * z_span * static_cast<double>(p) / static_cast<double>(n_planes - 1);
  vol.intensity.assign(n_planes * sampling.n_rho, 0.0);

#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < n_planes; ++p) {
    const double d = f + vol.z_axis[p];
    const double chirp = 0.5 * k * (1.0 / d - 1.0 / f);
    std::vector<double> wre(nodes.r.size()), wim(nodes.r.size());
    for (std::size_t j = 0; j < nodes.r.size(); ++j) {
      const double ph = chirp * nodes.r[j] * nodes.r[j];
      wre[j] = amp[j] * std::cos(ph);
      wim[j] = amp[j] * std::sin(ph);
    }
    std::vector<double> iu(n_u);
    const double scale = (k / d) * (k / d);
    for (std::size_t i = 0; i < n_u; ++i) {
      const double* row = &bessel[i * nodes.r.size()];
      double sr = 0.0, si = 0.0;
      for (std::size_t j = 0; j < nodes.r.size(); ++j) {
        sr += row[j] * wre[j];
        si += row[j] * wim[j];
      }
      iu[i] = scale * (sr * sr + si * si);
    }
    for (std::size_t i = 0; i < sampling.n_rho; ++i)
      vol.intensity[p * sampling.n_rho + i] = std::max(0.0, detail::uniform_cubic(iu, du, vol.rho_axis[i] * f / d));
  }
  return vol;
}

}  // namespace darkring

#endif  // DARKRING_RADIAL_HPP
