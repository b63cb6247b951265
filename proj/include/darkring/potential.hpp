#ifndef DARKRING_POTENTIAL_HPP
#define DARKRING_POTENTIAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "darkring/atomic.hpp"
#include "darkring/constants.hpp"
#include "darkring/error.hpp"
#include "darkring/propagation.hpp"

namespace darkring {

/// Dipole potential of an intensity volume in the lab frame: x horizontal,
/// y vertical (gravity along -y), z along the beam. The intensity is
/// interpolated on (rho, z) with a bicubic Hermite patch, so U and grad U are
/// continuous.
class PotentialField {
 public:
  struct Sample {
    double u = 0.0;                 // J, including gravity
    std::array<double, 3> grad{};   // J/m
    double intensity = 0.0;         // W/m^2 (after scaling)
  };

  PotentialField(IntensityVolume volume, AtomicParams params, bool gravity)
      : vol_(std::move(volume)), params_(params), gravity_(gravity) {
    if (vol_.n_rho() < 4 || vol_.n_z() < 4) throw ParameterError("intensity volume too small to interpolate");
    if (vol_.rho_axis.front() != 0.0) throw ParameterError("rho axis must start at 0");
    kappa_ = dipole_coefficient(params_);
    rates_ = scattering_coefficients(params_);
    h_rho_ = vol_.rho_step();
    h_z_ = vol_.z_step();
    build_slopes();
  }

  [[nodiscard]] const IntensityVolume& volume() const noexcept { return vol_; }
  [[nodiscard]] const AtomicParams& params() const noexcept { return params_; }
  [[nodiscard]] bool gravity() const noexcept { return gravity_; }
  [[nodiscard]] double kappa() const noexcept { return kappa_; }
  [[nodiscard]] double rho_max() const { return vol_.rho_axis.back(); }
  [[nodiscard]] double z_min() const { return vol_.z_axis.front(); }
  [[nodiscard]] double z_max() const { return vol_.z_axis.back(); }
  [[nodiscard]] const ScatteringRates& rate_coefficients() const noexcept { return rates_; }

  [[nodiscard]] bool inside(double x, double y, double z) const {
    return x * x + y * y <= rho_max() * rho_max() && z >= z_min() && z <= z_max();
  }

  /// Potential at a point with the optical part scaled by `scale` (ramp).
  /// Returns false outside the gridded volume.
  bool try_sample(double x, double y, double z, double scale, Sample& out) const {
    if (!inside(x, y, z)) return false;
    const double rho = std::sqrt(x * x + y * y);
    double in, d_rho, d_z;
    interpolate(rho, z, in, d_rho, d_z);
    const double k = kappa_ * scale;
    out.intensity = scale * std::max(0.0, in);
    out.u = k * in;
    const double radial = rho > 0.0 ? k * d_rho / rho : 0.0;
    out.grad = {radial * x, radial * y, k * d_z};
    if (gravity_) {
      out.u += params_.mass * constants::g_earth * y;
      out.grad[1] += params_.mass * constants::g_earth;
    }
    return true;
  }

  [[nodiscard]] Sample sample(double x, double y, double z, double scale = 1.0) const {
    Sample s;
    if (!try_sample(x, y, z, scale, s)) {
      throw DomainError(fmt::format("point ({:.4g}, {:.4g}, {:.4g}) m lies outside the potential volume", x, y, z));
    }
    return s;
  }

  [[nodiscard]] double energy(double x, double y, double z) const { return sample(x, y, z).u; }

  /// Interpolated intensity on the (rho, z) grid.
  [[nodiscard]] double intensity(double rho, double z) const {
    if (rho < 0.0 || rho > rho_max() || z < z_min() || z > z_max()) throw DomainError("(rho, z) outside the volume");
    double in, a, b;
    interpolate(rho, z, in, a, b);
    return in;
  }

  /// Upper bound for trap frequencies (rad/s): the largest positive curvature
  /// of the optical potential over the dark part of the volume (intensity
  /// below half the peak), where atoms can be held.
  [[nodiscard]] double max_trap_frequency() const {
    double peak = 0.0;
    for (double v : vol_.intensity) peak = std::max(peak, v);
    double curv = 0.0;
    for (std::size_t iz = 1; iz + 1 < vol_.n_z(); ++iz)
      for (std::size_t ir = 1; ir + 1 < vol_.n_rho(); ++ir) {
        if (vol_.at(iz, ir) > 0.5 * peak) continue;
        const double crho = (vol_.at(iz, ir + 1) - 2.0 * vol_.at(iz, ir) + vol_.at(iz, ir - 1)) / (h_rho_ * h_rho_);
        const double cz = (vol_.at(iz + 1, ir) - 2.0 * vol_.at(iz, ir) + vol_.at(iz - 1, ir)) / (h_z_ * h_z_);
        curv = std::max({curv, kappa_ * crho, kappa_ * cz});
      }
    return std::sqrt(curv / params_.mass);
  }

 private:
  void build_slopes() {
    const std::size_t nr = vol_.n_rho(), nz = vol_.n_z();
    d_rho_.assign(nr * nz, 0.0);
    d_z_.assign(nr * nz, 0.0);
    d_rz_.assign(nr * nz, 0.0);
    auto idx = [nr](std::size_t iz, std::size_t ir) { return iz * nr + ir; };
    for (std::size_t iz = 0; iz < nz; ++iz)
      for (std::size_t ir = 0; ir < nr; ++ir) {
        // I is even in rho, so the slope vanishes on the axis.
        if (ir == 0) d_rho_[idx(iz, ir)] = 0.0;
        else if (ir + 1 == nr) d_rho_[idx(iz, ir)] = (vol_.at(iz, ir) - vol_.at(iz, ir - 1)) / h_rho_;
        else d_rho_[idx(iz, ir)] = (vol_.at(iz, ir + 1) - vol_.at(iz, ir - 1)) / (2.0 * h_rho_);

        if (iz == 0) d_z_[idx(iz, ir)] = (vol_.at(1, ir) - vol_.at(0, ir)) / h_z_;
        else if (iz + 1 == nz) d_z_[idx(iz, ir)] = (vol_.at(iz, ir) - vol_.at(iz - 1, ir)) / h_z_;
        else d_z_[idx(iz, ir)] = (vol_.at(iz + 1, ir) - vol_.at(iz - 1, ir)) / (2.0 * h_z_);
      }
    for (std::size_t iz = 0; iz < nz; ++iz)
      for (std::size_t ir = 0; ir < nr; ++ir) {
        if (iz == 0) d_rz_[idx(iz, ir)] = (d_rho_[idx(1, ir)] - d_rho_[idx(0, ir)]) / h_z_;
        else if (iz + 1 == nz) d_rz_[idx(iz, ir)] = (d_rho_[idx(iz, ir)] - d_rho_[idx(iz - 1, ir)]) / h_z_;
        else d_rz_[idx(iz, ir)] = (d_rho_[idx(iz + 1, ir)] - d_rho_[idx(iz - 1, ir)]) / (2.0 * h_z_);
      }
  }

  void interpolate(double rho, double z, double& f, double& f_rho, double& f_z) const {
    const std::size_t nr = vol_.n_rho(), nz = vol_.n_z();
    const double tr = rho / h_rho_;
    const double tz = (z - vol_.z_axis.front()) / h_z_;
    const std::size_t ir = std::min(static_cast<std::size_t>(tr), nr - 2);
    const std::size_t iz = std::min(static_cast<std::size_t>(std::max(tz, 0.0)), nz - 2);
    const double t = tr - static_cast<double>(ir);
    const double u = tz - static_cast<double>(iz);

    // Cubic Hermite basis and derivatives.
    const double t2 = t * t, t3 = t2 * t, u2 = u * u, u3 = u2 * u;
    const double a0[4] = {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2};
    const double da[4] = {6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t};
    const double b0[4] = {2 * u3 - 3 * u2 + 1, u3 - 2 * u2 + u, -2 * u3 + 3 * u2, u3 - u2};
    const double db[4] = {6 * u2 - 6 * u, 3 * u2 - 4 * u + 1, -6 * u2 + 6 * u, 3 * u2 - 2 * u};

    f = f_rho = f_z = 0.0;
    for (int cz = 0; cz < 2; ++cz)
      for (int cr = 0; cr < 2; ++cr) {
        const std::size_t k = (iz + static_cast<std::size_t>(cz)) * nr + ir + static_cast<std::size_t>(cr);
        const double v = vol_.intensity[k];
        const double vr = d_rho_[k] * h_rho_;
        const double vz = d_z_[k] * h_z_;
        const double vrz = d_rz_[k] * h_rho_ * h_z_;
        const int pr = 2 * cr, pz = 2 * cz;  // value basis index; +1 gives the slope basis
        f += v * a0[pr] * b0[pz] + vr * a0[pr + 1] * b0[pz] + vz * a0[pr] * b0[pz + 1] + vrz * a0[pr + 1] * b0[pz + 1];
        f_rho += v * da[pr] * b0[pz] + vr * da[pr + 1] * b0[pz] + vz * da[pr] * b0[pz + 1] + vrz * da[pr + 1] * b0[pz + 1];
        f_z += v * a0[pr] * db[pz] + vr * a0[pr + 1] * db[pz] + vz * a0[pr] * db[pz + 1] + vrz * a0[pr + 1] * db[pz + 1];
      }
    f_rho /= h_rho_;
    f_z /= h_z_;
  }

  IntensityVolume vol_;
  AtomicParams params_;
  bool gravity_;
  double kappa_ = 0.0;
  ScatteringRates rates_;
  double h_rho_ = 0.0, h_z_ = 0.0;
  std::vector<double> d_rho_, d_z_, d_rz_;
};

inline PotentialField build_potential(IntensityVolume volume, const AtomicParams& params, bool gravity) {
  return {std::move(volume), params, gravity};
}

/// Least-squares polynomial y ~ sum c_k x^k of the given degree (normal
/// equations on scaled abscissae; degrees here are <= 4).
inline std::vector<double> poly_fit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  const std::size_t m = static_cast<std::size_t>(degree) + 1;
  if (x.size() < m) throw ParameterError("too few samples for polynomial fit");
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  std::vector<double> a(m * m, 0.0), b(m, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> pw(2 * m, 1.0);
    for (std::size_t k = 1; k < 2 * m; ++k) pw[k] = pw[k - 1] * x[i] / scale;
    for (std::size_t r = 0; r < m; ++r) {
      b[r] += pw[r] * y[i];
      for (std::size_t c = 0; c < m; ++c) a[r * m + c] += pw[r + c];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
    if (a[piv * m + col] == 0.0) throw OptimizationError("singular polynomial fit");
    for (std::size_t c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < m; ++r) {
      const double factor = a[r * m + col] / a[col * m + col];
      for (std::size_t c = col; c < m; ++c) a[r * m + c] -= factor * a[col * m + c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> coef(m, 0.0);
  for (std::size_t r = m; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < m; ++c) s -= a[r * m + c] * coef[c];
    coef[r] = s / a[r * m + r];
  }
  double p = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    coef[k] /= p;
    p *= scale;
  }
  return coef;
}

/// Quadratic fit of U around the minimum, kept for plotting overlays.
struct QuadraticFit {
  double centre = 0.0;  // coordinate of the minimum the offsets refer to
  double lo = 0.0, hi = 0.0;
  std::array<double, 3> coef{};  // U ~ c0 + c1 s + c2 s^2 with s = x - centre
  double quartic_ratio = 0.0;    // |quartic term / quadratic term| at the window edge
  [[nodiscard]] double operator()(double x) const {
    const double s = x - centre;
    return coef[0] + s * (coef[1] + s * coef[2]);
  }
};

struct BarrierOptions {
  // Fits extend over this fraction of the distance from the minimum to each
  // bounding barrier (1 = the full well between the barriers).
  double window_fraction = 1.0;
  // Window for the local-curvature frequencies reported alongside.
  double local_window_fraction = 0.25;
  bool require_longitudinal = true;
  // Largest jump (in rho samples) the tracked ring minimum may make per plane.
  std::size_t track_window = 0;  // 0 picks n_rho / 16
  // Extrema below this fraction of the profile maximum are ignored.
  double significance = 1e-3;
};

struct BarrierReport {
  double ring_radius = 0.0;   // dark-ring radius at the focal plane
  double trap_rho = 0.0, trap_z = 0.0;
  double u_min = 0.0;          // J
  double u_inner = 0.0;        // J, absolute potential at the inner radial barrier
  double u_outer = 0.0;
  double u_longitudinal = std::numeric_limits<double>::infinity();
  bool longitudinal_found = false;
  double inner_radius = 0.0, outer_radius = 0.0;  // barrier positions at the focal plane
  double saddle_z_minus = 0.0, saddle_z_plus = 0.0;
  double omega_perp = 0.0, omega_par = std::numeric_limits<double>::quiet_NaN();  // rad/s, well-wide fits
  double omega_perp_local = 0.0, omega_par_local = std::numeric_limits<double>::quiet_NaN();  // near-minimum fits
  double depth = 0.0;          // J, smallest barrier above the minimum
  double hbar_gamma = 0.0;
  QuadraticFit radial_fit, axial_fit;
  std::vector<double> path_z, path_rho, path_u;  // tracked ring minimum

  [[nodiscard]] double inner_height() const { return u_inner - u_min; }
  [[nodiscard]] double outer_height() const { return u_outer - u_min; }
  [[nodiscard]] double longitudinal_height() const { return u_longitudinal - u_min; }
  [[nodiscard]] double barrier_ratio() const { return inner_height() / outer_height(); }
  [[nodiscard]] double in_hbar_gamma(double energy) const { return energy / hbar_gamma; }
};

namespace detail {

struct RingProfile {
  std::size_t inner = 0, minimum = 0, outer = 0;
};

/// Inner bright ring, dark ring, outer bright ring on one radial profile.
inline RingProfile find_ring(const std::vector<double>& prof, double significance) {
  const double top = *std::max_element(prof.begin(), prof.end());
  const double floor = significance * top;
  std::vector<std::size_t> maxima;
  const std::size_t n = prof.size();
  // The axis counts as a maximum when the profile falls away from it.
  if (prof[0] > prof[1] && prof[0] > floor) maxima.push_back(0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (prof[i] > prof[i - 1] && prof[i] >= prof[i + 1] && prof[i] > floor) {
      // Keep only maxima separated from the previous one by a real dip.
      if (!maxima.empty()) {
        const auto lo = std::min_element(prof.begin() + static_cast<std::ptrdiff_t>(maxima.back()),
                                         prof.begin() + static_cast<std::ptrdiff_t>(i));
        if (std::min(prof[maxima.back()], prof[i]) - *lo < floor) {
          if (prof[i] > prof[maxima.back()]) maxima.back() = i;
          continue;
        }
      }
      maxima.push_back(i);
    }
  }
  if (maxima.empty()) throw TopologyError("no bright ring in the focal plane: both radial barriers missing");
  if (maxima.size() < 2) {
    throw TopologyError("only one bright ring in the focal plane: no dark ring, outer radial barrier missing");
  }
  RingProfile r;
  r.inner = maxima[0];
  r.outer = maxima[1];
  r.minimum = static_cast<std::size_t>(
      std::min_element(prof.begin() + static_cast<std::ptrdiff_t>(r.inner), prof.begin() + static_cast<std::ptrdiff_t>(r.outer)) -
      prof.begin());
  return r;
}

/// Vertex of the parabola through three equally spaced samples.
inline double parabolic_offset(double a, double b, double c) {
  const double den = a - 2.0 * b + c;
  return den > 0.0 ? 0.5 * (a - c) / den : 0.0;
}

struct PathSide {
  std::vector<std::size_t> planes;
  std::vector<std::size_t> rho_index;
  bool vanished = false;  // the minimum merged with a barrier inside the volume
};

inline PathSide track_minimum(const IntensityVolume& vol, std::size_t iz0, std::size_t ir0, int direction,
                              std::size_t window) {
  PathSide side;
  std::size_t ir = ir0;
  const std::size_t nr = vol.n_rho();
  for (std::ptrdiff_t iz = static_cast<std::ptrdiff_t>(iz0) + direction;
       iz >= 0 && iz < static_cast<std::ptrdiff_t>(vol.n_z()); iz += direction) {
    const auto z = static_cast<std::size_t>(iz);
    const std::size_t lo = ir > window ? ir - window : 1;
    const std::size_t hi = std::min(nr - 2, ir + window);
    std::optional<std::size_t> best;
    for (std::size_t i = std::max<std::size_t>(lo, 1); i <= hi; ++i) {
      if (vol.at(z, i) < vol.at(z, i - 1) && vol.at(z, i) <= vol.at(z, i + 1)) {
        const auto dist = [&](std::size_t k) { return k > ir ? k - ir : ir - k; };
        if (!best || dist(i) < dist(*best)) best = i;
      }
    }
    if (!best) {
      side.vanished = true;
      break;
    }
    ir = *best;
    side.planes.push_back(z);
    side.rho_index.push_back(ir);
  }
  return side;
}

inline QuadraticFit fit_well(const std::vector<double>& x, const std::vector<double>& u, double centre, double lo,
                             double hi) {
  std::vector<double> xs, us;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= lo && x[i] <= hi) {
      xs.push_back(x[i] - centre);
      us.push_back(u[i]);
    }
  if (xs.size() < 5) throw TopologyError("too few samples inside the well to fit a harmonic frequency");
  QuadraticFit fit;
  fit.centre = centre;
  fit.lo = lo;
  fit.hi = hi;
  const auto c = poly_fit(xs, us, 2);
  fit.coef = {c[0], c[1], c[2]};
  if (xs.size() >= 7) {
    const auto q = poly_fit(xs, us, 4);
    const double edge = std::max(hi - centre, centre - lo);
    fit.quartic_ratio = q[2] != 0.0 ? std::abs(q[4] * edge * edge / q[2]) : 0.0;
  }
  return fit;
}

}  // namespace detail

/// Ring minimum, radial and longitudinal barriers, and harmonic frequencies
/// of a blue-detuned ring trap. The longitudinal barrier is the saddle where
/// the tracked dark-ring minimum meets the inner barrier.
inline BarrierReport barrier_report(const IntensityVolume& vol, const AtomicParams& params, const BarrierOptions& opt = {}) {
  const double kappa = dipole_coefficient(params);
  if (!(kappa > 0.0)) throw ParameterError("barrier analysis needs a blue (repulsive) detuning");
  if (vol.n_z() < 3 || vol.n_rho() < 8) throw ParameterError("intensity volume too small");
  const std::size_t iz0 = vol.focal_index();
  const std::vector<double> prof = rho_profile(vol, vol.z_axis[iz0]);
  const auto ring = detail::find_ring(prof, opt.significance);
  const double hr = vol.rho_step();

  BarrierReport rep;
  rep.hbar_gamma = params.hbar_gamma();
  rep.inner_radius = vol.rho_axis[ring.inner];
  rep.outer_radius = vol.rho_axis[ring.outer];
  rep.u_inner = kappa * prof[ring.inner];
  rep.u_outer = kappa * prof[ring.outer];
  {
    const std::size_t m = ring.minimum;
    const double off = m > 0 && m + 1 < prof.size() ? detail::parabolic_offset(prof[m - 1], prof[m], prof[m + 1]) : 0.0;
    rep.ring_radius = vol.rho_axis[m] + off * hr;
  }

  // Track the dark-ring minimum away from the focus in both directions.
  const std::size_t window = opt.track_window ? opt.track_window : std::max<std::size_t>(4, vol.n_rho() / 16);
  const auto minus = detail::track_minimum(vol, iz0, ring.minimum, -1, window);
  const auto plus = detail::track_minimum(vol, iz0, ring.minimum, +1, window);
  for (std::size_t k = minus.planes.size(); k-- > 0;) {
    rep.path_z.push_back(vol.z_axis[minus.planes[k]]);
    rep.path_rho.push_back(vol.rho_axis[minus.rho_index[k]]);
    rep.path_u.push_back(kappa * vol.at(minus.planes[k], minus.rho_index[k]));
  }
  rep.path_z.push_back(vol.z_axis[iz0]);
  rep.path_rho.push_back(vol.rho_axis[ring.minimum]);
  rep.path_u.push_back(kappa * prof[ring.minimum]);
  for (std::size_t k = 0; k < plus.planes.size(); ++k) {
    rep.path_z.push_back(vol.z_axis[plus.planes[k]]);
    rep.path_rho.push_back(vol.rho_axis[plus.rho_index[k]]);
    rep.path_u.push_back(kappa * vol.at(plus.planes[k], plus.rho_index[k]));
  }

  // Trap minimum: lowest point of the path.
  const auto imin = static_cast<std::size_t>(std::min_element(rep.path_u.begin(), rep.path_u.end()) - rep.path_u.begin());
  rep.u_min = rep.path_u[imin];
  rep.trap_z = rep.path_z[imin];
  rep.trap_rho = rep.path_rho[imin];

  // Saddle on each side: highest path point between the minimum and the end
  // of the track. A maximum on the volume edge is not a bounded barrier.
  auto side_barrier = [&](bool upward, double& where) -> std::optional<double> {
    std::size_t best = imin;
    if (upward) {
      for (std::size_t k = imin; k < rep.path_u.size(); ++k)
        if (rep.path_u[k] > rep.path_u[best]) best = k;
    } else {
      for (std::size_t k = imin + 1; k-- > 0;)
        if (rep.path_u[k] > rep.path_u[best]) best = k;
    }
    const bool at_edge = upward ? (best + 1 == rep.path_u.size()) : (best == 0);
    const bool vanished = upward ? plus.vanished : minus.vanished;
    where = rep.path_z[best];
    if (best == imin || (at_edge && !vanished)) return std::nullopt;
    return rep.path_u[best];
  };
  double zm = 0.0, zp = 0.0;
  const auto lower = side_barrier(false, zm);
  const auto upper = side_barrier(true, zp);
  rep.saddle_z_minus = zm;
  rep.saddle_z_plus = zp;
  if (lower && upper) {
    rep.longitudinal_found = true;
    rep.u_longitudinal = std::min(*lower, *upper);
  } else if (opt.require_longitudinal) {
    throw TopologyError(fmt::format("longitudinal barrier missing: the dark-ring minimum keeps falling towards z = {:.3g} m",
                                    !lower ? vol.z_axis.front() : vol.z_axis.back()));
  }

  if (rep.u_inner <= rep.u_min || rep.u_outer <= rep.u_min) throw TopologyError("radial barriers do not exceed the minimum");
  rep.depth = std::min({rep.u_inner, rep.u_outer, rep.u_longitudinal}) - rep.u_min;

  // Harmonic frequencies from quadratic fits across the well.
  std::vector<double> u_focal(prof.size());
  for (std::size_t i = 0; i < prof.size(); ++i) u_focal[i] = kappa * prof[i];
  auto radial = [&](double w) {
    const double c = rep.ring_radius;
    return detail::fit_well(vol.rho_axis, u_focal, c, c - w * (c - rep.inner_radius), c + w * (rep.outer_radius - c));
  };
  auto axial = [&](double w) -> std::optional<QuadraticFit> {
    const double c = rep.trap_z;
    const double lo = rep.longitudinal_found ? c - w * (c - rep.saddle_z_minus) : rep.path_z.front();
    const double hi = rep.longitudinal_found ? c + w * (rep.saddle_z_plus - c) : rep.path_z.back();
    try {
      return detail::fit_well(rep.path_z, rep.path_u, c, lo, hi);
    } catch (const TopologyError&) {
      if (opt.require_longitudinal) throw;
      return std::nullopt;
    }
  };
  auto omega = [&](const QuadraticFit& f) { return std::sqrt(std::max(0.0, 2.0 * f.coef[2] / params.mass)); };
  for (double w : {opt.window_fraction, opt.local_window_fraction})
    if (!(w > 0.0 && w <= 1.0)) throw ParameterError("fit window fraction must lie in (0, 1]");

  rep.radial_fit = radial(opt.window_fraction);
  rep.omega_perp = omega(rep.radial_fit);
  rep.omega_perp_local = omega(radial(opt.local_window_fraction));
  if (const auto fit = axial(opt.window_fraction)) {
    rep.axial_fit = *fit;
    rep.omega_par = omega(*fit);
  }
  if (const auto fit = axial(opt.local_window_fraction)) rep.omega_par_local = omega(*fit);
  return rep;
}

/// Potential difference between the top and bottom intensity nulls of the
/// ring (x = 0, z = trap plane) with gravity on.
inline double gravity_null_difference(const PotentialField& pot, double ring_radius, double z) {
  if (!pot.gravity()) throw ParameterError("gravity_null_difference needs a potential with gravity on");
  const double step = pot.volume().rho_step() / 8.0;
  auto lowest = [&](double sign) {
    double best = std::numeric_limits<double>::infinity();
    for (double r = 0.5 * ring_radius; r <= std::min(1.5 * ring_radius, pot.rho_max()); r += step)
      best = std::min(best, pot.energy(0.0, sign * r, z));
    return best;
  };
  return lowest(+1.0) - lowest(-1.0);
}

}  // namespace darkring

#endif  // DARKRING_POTENTIAL_HPP
