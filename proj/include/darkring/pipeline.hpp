#ifndef DARKRING_PIPELINE_HPP
#define DARKRING_PIPELINE_HPP

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "darkring/analysis.hpp"
#include "darkring/atomic.hpp"
#include "darkring/config.hpp"
#include "darkring/fields.hpp"
#include "darkring/io.hpp"
#include "darkring/montecarlo.hpp"
#include "darkring/potential.hpp"
#include "darkring/propagation.hpp"
#include "darkring/radial.hpp"
#include "darkring/rc_search.hpp"

namespace darkring {

namespace fs = std::filesystem;

/// Detuning in nm from either beam.detuning_nm or beam.wavelength.
inline double config_detuning_nm(const Config& c) {
  if (c.has("beam.detuning_nm")) return c.number("beam.detuning_nm") * 1e9;
  return (constants::d2_wavelength - c.number("beam.wavelength")) * 1e9;
}

inline AtomicParams config_params(const Config& c) { return AtomicParams::rb85(config_detuning_nm(c)); }

inline double config_wavelength(const Config& c) { return config_params(c).laser_wavelength(); }

inline FocalSampling config_sampling(const Config& c) {
  FocalSampling s;
  s.n = static_cast<std::size_t>(c.integer("optics.focal_n"));
  s.pitch = c.number("optics.focal_pitch");
  s.n_rho = static_cast<std::size_t>(c.integer("optics.n_rho"));
  s.rho_max = c.number("optics.rho_max");
  return s;
}

inline BarrierOptions config_barrier_options(const Config& c) {
  BarrierOptions o;
  o.window_fraction = c.number("analysis.window_fraction");
  o.local_window_fraction = c.number("analysis.local_window_fraction");
  return o;
}

inline ChirpForm config_chirp_form(const Config& c) {
  const auto f = c.text("analysis.chirp_form");
  if (f == "direct") return ChirpForm::direct;
  if (f == "integrated") return ChirpForm::integrated;
  throw ConfigError(fmt::format("{}: analysis.chirp_form must be 'direct' or 'integrated', got '{}'",
                                c.where("analysis.chirp_form"), f));
}

inline int config_ell(const Config& c) {
  const auto ell = c.integer("beam.ell");
  if (ell < 0 || ell > 8) throw ConfigError(fmt::format("{}: beam.ell must lie in [0, 8]", c.where("beam.ell")));
  return static_cast<int>(ell);
}

/// Source field after the SLM: Gaussian through the ring phase mask.
struct BeamSetup {
  ComplexField source;
  PhaseMask mask;
};

inline BeamSetup build_beam(const Config& c, int ell, double rc_over_w0) {
  const double w0 = c.number("beam.w0");
  const auto n = static_cast<std::size_t>(c.integer("optics.grid_n"));
  const GridSpec grid = GridSpec::from_extent(n, c.number("optics.grid_extent"));
  const auto gauss = gaussian_beam(grid, w0, c.number("beam.power"), config_wavelength(c));
  auto mask = ring_phase_mask(grid, ell, rc_over_w0 * w0);
  auto field = apply_mask(gauss, mask);
  return {std::move(field), std::move(mask)};
}

/// Focal intensity volume with the configured propagator.
inline IntensityVolume build_volume(const Config& c, int ell, double rc_over_w0) {
  const double f = c.number("optics.f");
  const double z_span = c.number("optics.z_span");
  const auto n_planes = static_cast<std::size_t>(c.integer("optics.n_planes"));
  const auto sampling = config_sampling(c);
  const auto prop = c.text("optics.propagator");
  if (prop == "radial") {
    const auto src = stepped_gaussian_source(c.number("beam.w0"), c.number("beam.power"), config_wavelength(c), ell,
                                             rc_over_w0 * c.number("beam.w0"));
    return focus_scan_radial(src, f, z_span, n_planes, sampling);
  }
  if (prop != "angular-spectrum")
    throw ConfigError(fmt::format("{}: optics.propagator must be 'angular-spectrum' or 'radial', got '{}'",
                                  c.where("optics.propagator"), prop));
  const auto beam = build_beam(c, ell, rc_over_w0);
  SourceInfo info{ell, rc_over_w0 * c.number("beam.w0"), c.number("beam.w0"), f, config_wavelength(c), c.number("beam.power"),
                  true};
  return focus_scan(beam.source, f, z_span, n_planes, sampling, info);
}

inline SimulationSchedule config_schedule(const Config& c) {
  SimulationSchedule s;
  s.ramp = c.number("schedule.ramp_ms");
  s.duration = c.number("schedule.duration_ms");
  s.dt = c.number("schedule.dt_us");
  s.displacement = c.number("schedule.displacement_mm");
  s.record_interval = c.number("schedule.record_ms");
  s.detuning_nm = config_detuning_nm(c);
  s.power = c.number("beam.power");
  s.recoil_kicks = c.integer("schedule.recoil_kicks") != 0;
  if (c.has("schedule.snapshot_ms"))
    for (double ms : c.number_list("schedule.snapshot_ms")) s.snapshot_times.push_back(ms * 1e-3);
  return s;
}

inline bool wants(const Config& c, const std::string& format) {
  const auto f = c.list("output.formats");
  return std::find(f.begin(), f.end(), format) != f.end();
}

// --- beam ---------------------------------------------------------------------

struct BeamResult {
  ModeSpectrum spectrum;   // at the configured beam waist
  WaistScan waist_scan;    // basis waist 0.8-1.2 w0
  std::vector<fs::path> files;
};

inline BeamResult cmd_beam(const Config& c, const fs::path& out) {
  const int ell = config_ell(c);
  const double ratio = c.number("beam.rc_over_w0");
  const double w0 = c.number("beam.w0");
  const auto beam = build_beam(c, ell, ratio);
  const auto p_max = static_cast<int>(c.integer("analysis.p_max"));
  BeamResult r;
  r.spectrum = decompose(beam.source, w0, ell, p_max);
  r.waist_scan = scan_basis_waist(beam.source, ell, p_max, 0.8 * w0, 1.2 * w0, 9);

  const auto sampling = config_sampling(c);
  const auto focal = to_focal_region(beam.source, c.number("optics.f"), GridSpec(sampling.n, sampling.pitch));
  auto add = [&](const std::string& name, bool binary, auto&& body) {
    write_file(out / name, binary, body);
    r.files.push_back(out / name);
  };
  if (wants(c, "pgm")) {
    add("mask_phase.pgm", true, [&](std::ostream& os) { write_pgm16_phase(os, beam.mask); });
    add("focal_intensity.pgm", true, [&](std::ostream& os) { write_pgm16_intensity(os, focal); });
  }
  if (wants(c, "raw")) {
    add("mask_phase.drf", true, [&](std::ostream& os) { write_drf(os, beam.mask, beam.source.wavelength); });
    add("focal_field.drf", true, [&](std::ostream& os) { write_drf(os, focal); });
  }
  if (wants(c, "csv")) {
    add("mode_spectrum.csv", true, [&](std::ostream& os) { write_spectrum_csv(os, r.spectrum); });
    add("mode_spectrum_waist_scan.csv", true, [&](std::ostream& os) {
      CsvWriter w(os);
      w.row({"basis_waist_m", "p", "fraction"});
      for (const auto& s : r.waist_scan.spectra)
        for (std::size_t p = 0; p < s.fractions.size(); ++p)
          w.row({detail::num(s.basis_waist), std::to_string(p), detail::num(s.fractions[p])});
    });
  }
  return r;
}

// --- scan ---------------------------------------------------------------------

struct ScanEntry {
  int ell = 0;
  double rc_over_w0 = 0.0;
  BarrierReport report;
};

struct ScanResult {
  std::vector<ScanEntry> entries;
  IntensityVolume volume;  // of the first entry
  std::vector<fs::path> files;
};

inline ScanResult cmd_scan(const Config& c, const fs::path& out) {
  std::vector<int> ells;
  if (c.has("scan.ells")) {
    for (double e : c.number_list("scan.ells")) ells.push_back(static_cast<int>(e));
  } else {
    ells.push_back(config_ell(c));
  }
  const double ratio = c.number("beam.rc_over_w0");
  const auto params = config_params(c);
  const auto opt = config_barrier_options(c);
  ScanResult r;
  for (std::size_t k = 0; k < ells.size(); ++k) {
    const int ell = ells[k];
    auto vol = build_volume(c, ell, ratio);
    auto rep = barrier_report(vol, params, opt);
    const std::string tag = ells.size() > 1 ? fmt::format("_l{}", ell) : "";
    auto add = [&](const std::string& name, auto&& body) {
      write_file(out / name, true, body);
      r.files.push_back(out / name);
    };
    if (wants(c, "raw")) add("volume" + tag + ".drv", [&](std::ostream& os) { write_drv(os, vol); });
    if (wants(c, "csv")) {
      add("rho_profile" + tag + ".csv",
          [&](std::ostream& os) { write_rho_profile_csv(os, vol, rep.trap_z, dipole_coefficient(params), &rep.radial_fit); });
      add("z_profile" + tag + ".csv", [&](std::ostream& os) { write_z_profile_csv(os, rep); });
    }
    add("barrier_report" + tag + ".txt", [&](std::ostream& os) { os << format_barrier_report(rep); });
    if (k == 0) r.volume = std::move(vol);
    r.entries.push_back({ell, ratio, std::move(rep)});
  }
  if (wants(c, "csv")) {
    write_file(out / "ring_radius.csv", true, [&](std::ostream& os) {
      CsvWriter w(os);
      w.row({"ell", "rc_over_w0", "ring_radius_m", "depth_hbar_gamma", "inner_over_outer", "omega_perp_hz", "omega_par_hz"});
      for (const auto& e : r.entries)
        w.row({std::to_string(e.ell), detail::num(e.rc_over_w0), detail::num(e.report.ring_radius),
               detail::num(e.report.in_hbar_gamma(e.report.depth)), detail::num(e.report.barrier_ratio()),
               detail::num(e.report.omega_perp / constants::two_pi), detail::num(e.report.omega_par / constants::two_pi)});
    });
    r.files.push_back(out / "ring_radius.csv");
  }
  return r;
}

// --- optimize-rc ----------------------------------------------------------------

struct OptimizeResult {
  std::vector<std::pair<int, RcSearchResult>> rows;
  std::vector<fs::path> files;
};

inline OptimizeResult cmd_optimize_rc(const Config& c, const fs::path& out) {
  RcSearchOptions opt;
  opt.lo = c.number("rc_search.lo");
  opt.hi = c.number("rc_search.hi");
  opt.coarse_steps = static_cast<int>(c.integer("rc_search.coarse_steps"));
  opt.tolerance = c.number("rc_search.tolerance");
  opt.z_span = c.number("rc_search.z_span");
  opt.n_planes = static_cast<std::size_t>(c.integer("rc_search.n_planes"));
  opt.sampling = config_sampling(c);
  opt.power = c.number("beam.power");
  OptimizeResult r;
  for (double e : c.number_list("rc_search.ells")) {
    const int ell = static_cast<int>(e);
    r.rows.emplace_back(ell, equal_barrier_rc(ell, c.number("beam.w0"), c.number("optics.f"), config_wavelength(c), opt));
  }
  write_file(out / "rc_table.csv", true, [&](std::ostream& os) {
    CsvWriter w(os);
    w.row({"ell", "rc_over_w0", "inner_over_outer", "ring_radius_m", "saddle_z_minus_m", "saddle_z_plus_m", "evaluations"});
    for (const auto& [ell, res] : r.rows)
      w.row({std::to_string(ell), detail::num(res.rc_over_w0), detail::num(res.report.barrier_ratio()),
             detail::num(res.report.ring_radius), detail::num(res.report.saddle_z_minus), detail::num(res.report.saddle_z_plus),
             std::to_string(res.evaluations)});
  });
  r.files.push_back(out / "rc_table.csv");
  write_file(out / "rc_scan.csv", true, [&](std::ostream& os) {
    CsvWriter w(os);
    w.row({"ell", "rc_over_w0", "mismatch", "note"});
    for (const auto& [ell, res] : r.rows)
      for (const auto& p : res.scan)
        w.row({std::to_string(ell), detail::num(p.rc_over_w0), p.difference ? detail::num(*p.difference) : "", p.note});
  });
  r.files.push_back(out / "rc_scan.csv");
  return r;
}

// --- mc -------------------------------------------------------------------------

struct McResult {
  TrajectoryRecord record;
  BarrierReport report;
  std::vector<fs::path> files;
};

inline McResult cmd_mc(const Config& c, const fs::path& out) {
  const int ell = config_ell(c);
  const auto params = config_params(c);
  auto vol = build_volume(c, ell, c.number("beam.rc_over_w0"));
  McResult r;
  BarrierOptions bo = config_barrier_options(c);
  bo.require_longitudinal = false;
  r.report = barrier_report(vol, params, bo);
  const PotentialField pot(std::move(vol), params, c.integer("schedule.gravity") != 0);
  const auto seed = static_cast<std::uint64_t>(c.integer("atoms.seed"));
  auto ens = sample_ensemble(static_cast<std::size_t>(c.integer("atoms.n")), c.number("atoms.sigma"),
                             c.number("atoms.temperature_uK"), params, seed);
  const auto sched = config_schedule(c);
  r.record = sched.displacement != 0.0 ? displaced_run(ens, pot, sched.displacement, sched, seed) : evolve(ens, pot, sched, seed);

  auto add = [&](const std::string& name, auto&& body) {
    write_file(out / name, true, body);
    r.files.push_back(out / name);
  };
  if (wants(c, "csv")) {
    add("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, r.record); });
    add("relaxation_curve.csv", [&](std::ostream& os) { write_curve_csv(os, relaxation_curve(r.record)); });
  }
  for (const auto& snap : r.record.snapshots) {
    const auto ms = static_cast<long long>(std::llround(snap.time * 1e3));
    if (wants(c, "raw")) add(fmt::format("snapshot_{}ms.drs", ms), [&](std::ostream& os) { write_snapshot(os, snap); });
    if (wants(c, "pgm")) {
      const std::array<double, 3> centre{0.0, 0.0, sched.displacement};
      const auto head_on = synthetic_image(snap.position, ViewAxis::z, 2e-6, 128, 128, centre);
      const auto side = synthetic_image(snap.position, ViewAxis::x, 25e-6, 512, 32, centre);
      add(fmt::format("image_z_{}ms.pgm", ms), [&](std::ostream& os) { write_pgm16_counts(os, head_on); });
      add(fmt::format("image_x_{}ms.pgm", ms), [&](std::ostream& os) { write_pgm16_counts(os, side); });
    }
  }
  return r;
}

// --- fit ------------------------------------------------------------------------

struct FitCommandResult {
  ModelComparison comparison;
  std::vector<fs::path> files;
};

inline FitCommandResult cmd_fit(const fs::path& input, const std::string& model, ChirpForm form, double detuning_nm,
                                const fs::path& out) {
  std::ifstream is(input, std::ios::binary);
  if (!is) throw ParameterError(fmt::format("cannot open curve file '{}'", input.string()));
  const auto curve = read_curve_csv(is);
  if (model != "single" && model != "chirped" && model != "both")
    throw ParameterError(fmt::format("model must be single, chirped or both, got '{}'", model));
  FitCommandResult r;
  std::vector<FitResult> fits;
  if (model == "single") {
    fits.push_back(fit_single_exp(curve));
  } else if (model == "chirped") {
    fits.push_back(fit_chirped(curve, form));
  } else {
    r.comparison = model_comparison(curve, form);
    fits = {r.comparison.single, r.comparison.chirped};
  }
  write_file(out / "fit.txt", true, [&](std::ostream& os) {
    for (const auto& f : fits) os << format_fit(f) << '\n';
    if (model == "both") {
      os << fmt::format("f_statistic = {}\np_value = {}\nchirped_preferred = {}\ncomparison_valid = {}\n",
                        detail::num(r.comparison.f_statistic), detail::num(r.comparison.p_value),
                        r.comparison.chirped_preferred, r.comparison.valid);
      if (!r.comparison.note.empty()) os << "comparison_note = " << r.comparison.note << '\n';
    }
  });
  r.files.push_back(out / "fit.txt");
  write_file(out / "fit.csv", true, [&](std::ostream& os) { write_fit_csv(os, fits); });
  r.files.push_back(out / "fit.csv");
  std::vector<std::pair<double, FitResult>> chirped;
  for (const auto& f : fits)
    if (f.model == RelaxationModel::chirped && f.converged) chirped.emplace_back(detuning_nm, f);
  if (!chirped.empty()) {
    write_file(out / "lifetime_table.csv", true, [&](std::ostream& os) { write_lifetime_csv(os, lifetime_table(chirped)); });
    r.files.push_back(out / "lifetime_table.csv");
  }
  return r;
}

}  // namespace darkring

#endif  // DARKRING_PIPELINE_HPP
