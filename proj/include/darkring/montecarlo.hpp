#ifndef DARKRING_MONTECARLO_HPP
#define DARKRING_MONTECARLO_HPP

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "darkring/atomic.hpp"
#include "darkring/constants.hpp"
#include "darkring/error.hpp"
#include "darkring/potential.hpp"
#include "darkring/rng.hpp"

namespace darkring {

enum class Hyperfine : std::uint8_t { F2 = 2, F3 = 3 };

struct AtomEnsemble {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;  // stream counter shared by all atoms; (seed, atom, step) addresses a cell
  std::vector<std::array<double, 3>> position;
  std::vector<std::array<double, 3>> velocity;
  std::vector<Hyperfine> hyperfine;

  [[nodiscard]] std::size_t size() const noexcept { return position.size(); }
};

/// Gaussian cloud: isotropic normal positions of std sigma, Maxwell-Boltzmann
/// velocities, every atom in F=2.
inline AtomEnsemble sample_ensemble(std::size_t n, double sigma, double temperature, const AtomicParams& params,
                                    std::uint64_t seed) {
  if (n < 1) throw ParameterError("ensemble needs at least one atom");
  if (!(sigma > 0.0)) throw ParameterError("cloud size sigma must be positive");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  const double v_std = std::sqrt(constants::k_boltzmann * temperature / params.mass);
  AtomEnsemble e;
  e.seed = seed;
  e.position.resize(n);
  e.velocity.resize(n);
  e.hyperfine.assign(n, Hyperfine::F2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p0 = RandomCell(seed, i, 0, StreamTag::position).normals();
    const auto p1 = RandomCell(seed, i, 1, StreamTag::position).normals();
    const auto v0 = RandomCell(seed, i, 0, StreamTag::velocity).normals();
    const auto v1 = RandomCell(seed, i, 1, StreamTag::velocity).normals();
    e.position[i] = {sigma * p0[0], sigma * p0[1], sigma * p1[0]};
    e.velocity[i] = {v_std * v0[0], v_std * v0[1], v_std * v1[0]};
  }
  return e;
}

inline double measure_f3_fraction(const AtomEnsemble& e) {
  if (e.size() == 0) throw DomainError("F=3 fraction of an empty ensemble is undefined");
  std::size_t n3 = 0;
  for (auto h : e.hyperfine) n3 += h == Hyperfine::F3;
  return static_cast<double>(n3) / static_cast<double>(e.size());
}

struct SimulationSchedule {
  double ramp = 5e-3;        // s, linear in intensity
  double duration = 1.5;     // s
  double dt = 10e-6;         // s
  double displacement = 0.0; // m, trap shift along z
  double record_interval = 10e-3;
  double detuning_nm = std::numeric_limits<double>::quiet_NaN();  // must match the potential when set
  double power = std::numeric_limits<double>::quiet_NaN();        // W, must match the volume when set
  bool recoil_kicks = false;
  std::vector<double> snapshot_times;  // s
};

/// Harmonic trap that stands in for the optical volume in tests.
class HarmonicPotential {
 public:
  HarmonicPotential(std::array<double, 3> omega, AtomicParams params) : omega_(omega), params_(params) {}

  bool try_sample(double x, double y, double z, double scale, PotentialField::Sample& out) const {
    const double m = params_.mass;
    const double r[3] = {x, y, z};
    out.u = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double k = scale * m * omega_[a] * omega_[a];
      out.u += 0.5 * k * r[a] * r[a];
      out.grad[a] = k * r[a];
    }
    out.intensity = 0.0;
    return true;
  }
  [[nodiscard]] const AtomicParams& params() const noexcept { return params_; }
  [[nodiscard]] ScatteringRates rate_coefficients() const noexcept { return {}; }
  [[nodiscard]] double max_trap_frequency() const { return std::max({omega_[0], omega_[1], omega_[2]}); }
  [[nodiscard]] double rho_max() const { return std::numeric_limits<double>::infinity(); }
  [[nodiscard]] double z_min() const { return -std::numeric_limits<double>::infinity(); }
  [[nodiscard]] double z_max() const { return std::numeric_limits<double>::infinity(); }
  [[nodiscard]] bool gravity() const noexcept { return false; }

 private:
  std::array<double, 3> omega_;
  AtomicParams params_;
};

/// A potential shifted by `offset` along z.
template <class Potential>
class TranslatedPotential {
 public:
  TranslatedPotential(const Potential& base, double offset) : base_(base), offset_(offset) {}

  bool try_sample(double x, double y, double z, double scale, PotentialField::Sample& out) const {
    return base_.try_sample(x, y, z - offset_, scale, out);
  }
  [[nodiscard]] const AtomicParams& params() const noexcept { return base_.params(); }
  [[nodiscard]] ScatteringRates rate_coefficients() const { return base_.rate_coefficients(); }
  [[nodiscard]] double max_trap_frequency() const { return base_.max_trap_frequency(); }
  [[nodiscard]] double rho_max() const { return base_.rho_max(); }
  [[nodiscard]] double z_min() const { return base_.z_min() + offset_; }
  [[nodiscard]] double z_max() const { return base_.z_max() + offset_; }
  [[nodiscard]] bool gravity() const noexcept { return base_.gravity(); }

 private:
  const Potential& base_;
  double offset_;
};

struct Snapshot {
  double time = 0.0;
  std::vector<std::array<double, 3>> position;  // counted atoms only
  std::vector<Hyperfine> hyperfine;
};

struct TrajectoryRecord {
  std::vector<double> time;
  std::vector<double> f3_fraction;
  std::vector<std::size_t> n_counted;   // atoms inside the statistics region
  std::vector<std::size_t> n_escaped;   // atoms beyond twice the volume
  std::vector<std::array<double, 3>> centroid;
  std::vector<double> mean_flip_rate;   // F=2 -> F=3 rate averaged over counted atoms, s^-1
  std::vector<Snapshot> snapshots;
  std::uint64_t flips = 0;
  std::uint64_t recoil_events = 0;
  double expected_scatter_events = 0.0;  // integral of the total scattering rate
};

namespace detail {

/// F=2 -> F=3 at the Raman rate R and F=3 -> F=2 at (5/7) R, so the
/// stationary F=3 share is 7/12.
inline constexpr double kDownRatio = 5.0 / 7.0;

inline void check_schedule(const SimulationSchedule& s) {
  if (!(s.dt > 0.0)) throw ParameterError("time step dt must be positive");
  if (!(s.duration > 0.0)) throw ParameterError("duration must be positive");
  if (s.ramp < 0.0) throw ParameterError("ramp duration must be non-negative");
  if (!(s.record_interval > 0.0)) throw ParameterError("record interval must be positive");
}

inline std::array<double, 3> random_direction(const RandomCell& cell) {
  const double cz = 2.0 * cell.uniform(0) - 1.0;
  const double s = std::sqrt(std::max(0.0, 1.0 - cz * cz));
  const double ph = constants::two_pi * cell.uniform(1);
  return {s * std::cos(ph), s * std::sin(ph), cz};
}

}  // namespace detail

/// Velocity-Verlet dynamics under the ramped optical potential plus gravity,
/// with stochastic hyperfine flips at the local Raman rate. Atoms that leave
/// the gridded volume coast under gravity alone; they drop out of the
/// statistics once beyond twice the volume's radius or half-length.
template <class Potential>
TrajectoryRecord evolve(AtomEnsemble& ens, const Potential& pot, const SimulationSchedule& sched, std::uint64_t seed) {
  detail::check_schedule(sched);
  const AtomicParams& params = pot.params();
  if constexpr (std::is_same_v<Potential, PotentialField>) {
    if (!std::isnan(sched.detuning_nm) && std::abs(sched.detuning_nm - params.detuning_nm()) > 1e-9 * std::abs(sched.detuning_nm))
      throw ParameterError("schedule detuning does not match the potential");
    if (!std::isnan(sched.power) && std::abs(sched.power - pot.volume().source.power) > 1e-9 * sched.power)
      throw ParameterError("schedule power does not match the intensity volume");
  }
  const double omega_max = pot.max_trap_frequency();
  if (omega_max > 0.0 && sched.dt > constants::two_pi / omega_max / 20.0) {
    throw StabilityError(fmt::format("dt = {:.3g} s exceeds 1/20 of the shortest trap period ({:.3g} s)", sched.dt,
                                     constants::two_pi / omega_max));
  }
  const std::size_t n = ens.size();
  if (n == 0) throw ParameterError("empty ensemble");

  const double m = params.mass;
  const double g = pot.gravity() ? constants::g_earth : 0.0;
  const auto rates = pot.rate_coefficients();
  const double k_photon = constants::two_pi / params.resonance_wavelength;
  const double kick = constants::hbar * k_photon / m;
  const bool z_bounded = std::isfinite(pot.z_min()) && std::isfinite(pot.z_max());
  const double zc = z_bounded ? 0.5 * (pot.z_min() + pot.z_max()) : 0.0;
  const double stat_rho = 2.0 * pot.rho_max();
  const double stat_half_z = z_bounded ? 2.0 * (pot.z_max() - zc) : std::numeric_limits<double>::infinity();

  const auto n_steps = static_cast<std::uint64_t>(std::llround(sched.duration / sched.dt));
  const auto record_every = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(sched.record_interval / sched.dt)));
  std::vector<std::uint64_t> snapshot_steps;
  for (double t : sched.snapshot_times) snapshot_steps.push_back(static_cast<std::uint64_t>(std::llround(t / sched.dt)));

  auto ramp = [&](std::uint64_t step) {
    const double t = static_cast<double>(step) * sched.dt;
    return sched.ramp > 0.0 ? std::min(1.0, t / sched.ramp) : 1.0;
  };

  std::vector<std::array<double, 3>> accel(n);
  std::vector<double> intensity(n, 0.0);
  std::vector<std::uint8_t> in_volume(n, 0);
  std::vector<std::uint64_t> flips(n, 0), recoils(n, 0);
  std::vector<double> scatter(n, 0.0);

  auto force = [&](std::size_t i, double scale) {
    PotentialField::Sample s;
    const auto& p = ens.position[i];
    if (pot.try_sample(p[0], p[1], p[2], scale, s)) {
      accel[i] = {-s.grad[0] / m, -s.grad[1] / m, -s.grad[2] / m};
      intensity[i] = s.intensity;
      in_volume[i] = 1;
    } else {
      accel[i] = {0.0, -g, 0.0};
      intensity[i] = 0.0;
      in_volume[i] = 0;
    }
  };

  TrajectoryRecord rec;
  auto counted = [&](std::size_t i) {
    const auto& p = ens.position[i];
    return std::hypot(p[0], p[1]) <= stat_rho && std::abs(p[2] - zc) <= stat_half_z;
  };
  auto record = [&](std::uint64_t step) {
    std::size_t nc = 0, n3 = 0;
    std::array<double, 3> c{};
    double rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!counted(i)) continue;
      ++nc;
      n3 += ens.hyperfine[i] == Hyperfine::F3;
      for (int a = 0; a < 3; ++a) c[a] += ens.position[i][a];
      rate += rates.raman * intensity[i];
    }
    const double inv = nc ? 1.0 / static_cast<double>(nc) : std::numeric_limits<double>::quiet_NaN();
    rec.time.push_back(static_cast<double>(step) * sched.dt);
    rec.f3_fraction.push_back(nc ? static_cast<double>(n3) * inv : 0.0);
    rec.n_counted.push_back(nc);
    rec.n_escaped.push_back(n - nc);
    rec.centroid.push_back({c[0] * inv, c[1] * inv, c[2] * inv});
    rec.mean_flip_rate.push_back(nc ? rate * inv : 0.0);
    for (std::size_t k = 0; k < snapshot_steps.size(); ++k) {
      if (snapshot_steps[k] != step) continue;
      Snapshot snap;
      snap.time = static_cast<double>(step) * sched.dt;
      for (std::size_t i = 0; i < n; ++i)
        if (counted(i)) {
          snap.position.push_back(ens.position[i]);
          snap.hyperfine.push_back(ens.hyperfine[i]);
        }
      rec.snapshots.push_back(std::move(snap));
    }
  };

  const std::uint64_t step0 = ens.step;
  for (std::size_t i = 0; i < n; ++i) force(i, ramp(0));
  record(0);

  const double dt = sched.dt;
  for (std::uint64_t step = 1; step <= n_steps; ++step) {
    const double scale = ramp(step);
    std::size_t bad_atom = n, fast_atom = n;
    double worst_p = 0.0;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      auto& x = ens.position[i];
      auto& v = ens.velocity[i];
      const auto a0 = accel[i];
      for (int a = 0; a < 3; ++a) x[a] += v[a] * dt + 0.5 * a0[a] * dt * dt;
      force(i, scale);
      for (int a = 0; a < 3; ++a) v[a] += 0.5 * (a0[a] + accel[i][a]) * dt;
      if (!std::isfinite(accel[i][0] + accel[i][1] + accel[i][2] + x[0] + x[1] + x[2])) {
#pragma omp critical
        bad_atom = std::min(bad_atom, i);
        continue;
      }
      if (!in_volume[i] || intensity[i] <= 0.0) continue;

      const double up = rates.raman * intensity[i] * dt;
      if (up >= 0.1) {
#pragma omp critical
        {
          if (i < fast_atom) fast_atom = i;
          worst_p = std::max(worst_p, up);
        }
        continue;
      }
      const RandomCell cell(seed, i, step0 + step, StreamTag::flip);
      const double p = ens.hyperfine[i] == Hyperfine::F2 ? up : up * detail::kDownRatio;
      if (cell.uniform(0) < p) {
        ens.hyperfine[i] = ens.hyperfine[i] == Hyperfine::F2 ? Hyperfine::F3 : Hyperfine::F2;
        ++flips[i];
      }
      const double ps = rates.total * intensity[i] * dt;
      scatter[i] += ps;
      if (sched.recoil_kicks && cell.uniform(1) < ps) {
        const RandomCell k1(seed, i, step0 + step, StreamTag::recoil);
        const RandomCell k2(seed ^ 0x5bd1e995ULL, i, step0 + step, StreamTag::recoil);
        const auto d1 = detail::random_direction(k1), d2 = detail::random_direction(k2);
        for (int a = 0; a < 3; ++a) v[a] += kick * (d1[a] + d2[a]);
        ++recoils[i];
      }
    }
    if (bad_atom < n) {
      throw StabilityError(fmt::format("non-finite force or position for atom {} at t = {:.6g} s", bad_atom,
                                       static_cast<double>(step) * dt));
    }
    if (fast_atom < n) {
      throw StabilityError(fmt::format("flip probability {:.3g} per step for atom {} exceeds 0.1; reduce dt", worst_p,
                                       fast_atom));
    }
    if (step % record_every == 0) record(step);
  }
  ens.step = step0 + n_steps + 1;
  for (std::size_t i = 0; i < n; ++i) {
    rec.flips += flips[i];
    rec.recoil_events += recoils[i];
    rec.expected_scatter_events += scatter[i];
  }
  return rec;
}

/// Run with the trap translated by `offset` along z relative to the cloud.
template <class Potential>
TrajectoryRecord displaced_run(AtomEnsemble& ens, const Potential& pot, double offset, const SimulationSchedule& sched,
                               std::uint64_t seed) {
  if (!std::isfinite(offset) || offset < pot.z_min() || offset > pot.z_max())
    throw ParameterError(fmt::format("displacement {:.4g} m lies outside the potential's z range", offset));
  const TranslatedPotential<Potential> shifted(pot, offset);
  return evolve(ens, shifted, sched, seed);
}

struct Image {
  std::size_t width = 0, height = 0;
  double pixel = 0.0;
  std::vector<std::uint32_t> counts;  // row-major, row 0 at the top
  [[nodiscard]] std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
  [[nodiscard]] std::uint32_t at(std::size_t row, std::size_t col) const { return counts[row * width + col]; }
};

enum class ViewAxis { x, z };

/// Column-density image of atom positions seen along `axis`, centred on
/// `centre`. Along z the image plane is (x, y); along x it is (z, y). The
/// vertical image axis is y, pointing up.
inline Image synthetic_image(const std::vector<std::array<double, 3>>& positions, ViewAxis axis, double pixel,
                             std::size_t width, std::size_t height, std::array<double, 3> centre = {}) {
  if (!(pixel > 0.0)) throw ParameterError("pixel size must be positive");
  if (width == 0 || height == 0) throw ParameterError("image must have at least one pixel");
  Image img{width, height, pixel, std::vector<std::uint32_t>(width * height, 0)};
  const int h_axis = axis == ViewAxis::z ? 0 : 2;
  for (const auto& p : positions) {
    const double u = (p[h_axis] - centre[h_axis]) / pixel + 0.5 * static_cast<double>(width);
    const double v = 0.5 * static_cast<double>(height) - (p[1] - centre[1]) / pixel;
    if (!(u >= 0.0 && v >= 0.0 && u < static_cast<double>(width) && v < static_cast<double>(height))) continue;
    ++img.counts[static_cast<std::size_t>(v) * width + static_cast<std::size_t>(u)];
  }
  return img;
}

}  // namespace darkring

#endif  // DARKRING_MONTECARLO_HPP
