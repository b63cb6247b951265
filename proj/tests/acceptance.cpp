// Acceptance checks. `acceptance N` runs criterion N and prints one PASS/FAIL
// line with the measured values; `acceptance` alone runs all of them.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "darkring/pipeline.hpp"

using namespace darkring;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Config preset(const std::string& name) { return Config::load(std::string(DARKRING_CONFIG_DIR) + "/" + name + ".ini"); }

fs::path out_dir(int criterion, const std::string& sub = "") {
  auto p = fs::current_path() / "acceptance_out" / fmt::format("criterion_{}", criterion);
  if (!sub.empty()) p /= sub;
  fs::create_directories(p);
  return p;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

double hz(double omega) { return omega / constants::two_pi; }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// --- 1 ---------------------------------------------------------------------------

Verdict equal_barrier_rc() {
  const auto r = cmd_optimize_rc(preset("fig1c_l1"), out_dir(1));
  const double target[] = {0.71, 0.79, 0.85};
  Verdict v{true, ""};
  for (const auto& [ell, res] : r.rows) {
    const bool ok = ell >= 0 && ell <= 2 && std::abs(res.rc_over_w0 - target[ell]) <= 0.02;
    v.pass = v.pass && ok;
    v.detail += fmt::format("l={} Rc/w0={:.3f} (target {:.2f}) ", ell, res.rc_over_w0, ell <= 2 ? target[ell] : 0.0);
  }
  v.pass = v.pass && r.rows.size() == 3;
  return v;
}

// --- 2 ---------------------------------------------------------------------------

Verdict mode_fractions() {
  const auto r = cmd_beam(preset("fig1c_l0"), out_dir(2));
  auto hits = [](const ModeSpectrum& s) { return std::abs(s.fraction(0) - 0.13) <= 0.03 && std::abs(s.fraction(1) - 0.78) <= 0.03; };
  const auto& best = r.waist_scan.spectra[r.waist_scan.best];
  Verdict v;
  v.pass = hits(r.spectrum) || hits(best);
  v.detail = fmt::format("basis w0: p0={:.3f} p1={:.3f}; best scanned waist {:.3f} mm: p0={:.3f} p1={:.3f} (target 0.13/0.78 +-0.03)",
                         r.spectrum.fraction(0), r.spectrum.fraction(1), best.basis_waist * 1e3, best.fraction(0),
                         best.fraction(1));
  return v;
}

// --- 3 ---------------------------------------------------------------------------

Verdict trap_depths() {
  const std::vector<std::pair<std::string, double>> cases = {
      {"fig3_delta0.5nm", 0.26}, {"fig3_delta1nm", 0.13}, {"fig3_delta2nm", 0.065}, {"fig3_delta4nm", 0.033}};
  Verdict v{true, ""};
  for (const auto& [name, target] : cases) {
    const auto c = preset(name);
    const auto r = cmd_scan(c, out_dir(3, name));
    const double depth = r.entries.front().report.in_hbar_gamma(r.entries.front().report.depth);
    v.pass = v.pass && within(depth, target, 0.10);
    v.detail += fmt::format("{}nm: {:.4f} (target {}) ", config_detuning_nm(c), depth, target);
  }
  return v;
}

// --- 4 ---------------------------------------------------------------------------

Verdict frequencies() {
  const auto r = cmd_scan(preset("fig3_delta1nm"), out_dir(4)).entries.front().report;
  const double ratio = r.omega_par / r.omega_perp;
  Verdict v;
  v.pass = within(hz(r.omega_perp), 800.0, 0.15) && within(hz(r.omega_par), 3.0, 0.30) && within(ratio, 1.0 / 300.0, 0.25);
  v.detail = fmt::format("w_perp=2pi x {:.1f} Hz, w_par=2pi x {:.2f} Hz, ratio=1/{:.0f}; local fits: 2pi x {:.1f} Hz, 2pi x {:.2f} Hz",
                         hz(r.omega_perp), hz(r.omega_par), 1.0 / ratio, hz(r.omega_perp_local), hz(r.omega_par_local));
  return v;
}

// --- 5 ---------------------------------------------------------------------------

Verdict barrier_structure() {
  Verdict v{true, ""};
  for (const char* name : {"fig1c_l0", "fig1c_l1", "fig1c_l2"}) {
    const auto ratio = cmd_scan(preset(name), out_dir(5, name)).entries.front().report.barrier_ratio();
    v.pass = v.pass && ratio >= 0.25 && ratio <= 0.35;
    v.detail += fmt::format("{}: U_in/U_out={:.3f} ", name, ratio);
  }
  const auto c = preset("fig1c_l1");
  const auto vol = focus_scan_radial(lg_source(1, 1, c.number("beam.w0"), c.number("beam.power"), config_wavelength(c)),
                                     c.number("optics.f"), c.number("optics.z_span"),
                                     static_cast<std::size_t>(c.integer("optics.n_planes")), config_sampling(c));
  BarrierOptions bo = config_barrier_options(c);
  bo.require_longitudinal = false;
  const double lg = barrier_report(vol, config_params(c), bo).barrier_ratio();
  v.pass = v.pass && within(lg, 3.0, 0.30);
  v.detail += fmt::format("pure LG_1^1: {:.3f} (target 3 +-30%)", lg);
  return v;
}

// --- 6 ---------------------------------------------------------------------------

Verdict gravity_identity() {
  const auto c = preset("fig1c_l2");
  const auto params = config_params(c);
  auto scan = cmd_scan(c, out_dir(6));
  const auto& rep = scan.entries.front().report;
  const PotentialField pot(std::move(scan.volume), params, true);
  const double du = gravity_null_difference(pot, rep.ring_radius, rep.trap_z) / params.hbar_gamma();
  const double diameter = 2.0 * rep.ring_radius;
  const double derived = params.hbar_gamma() / 30.0 / (params.mass * constants::g_earth);
  Verdict v;
  v.pass = within(du, 1.0 / 30.0, 0.15) && within(diameter, derived, 0.15);
  v.detail = fmt::format("dU={:.4f} hbar Gamma (target {:.4f}), ring diameter {:.1f} um (derived {:.1f} um)", du, 1.0 / 30.0,
                         diameter * 1e6, derived * 1e6);
  return v;
}

// --- 7 ---------------------------------------------------------------------------

ModelComparison relax(const std::string& name, int criterion) {
  const auto c = preset(name);
  const auto r = cmd_mc(c, out_dir(criterion, name));
  return model_comparison(relaxation_curve(r.record), config_chirp_form(c));
}

Verdict time_dependent_relaxation() {
  const auto near = relax("fig3_delta0.5nm", 7);
  const auto far = relax("fig3_delta4nm", 7);
  const double near_ratio = near.chirped.tau_at(0.5) / near.chirped.tau;
  const double far_ratio = far.chirped.tau_at(0.5) / far.chirped.tau;
  Verdict v;
  v.pass = near.chirped_preferred && near_ratio >= 2.0 && far.chirped.tau >= 1.44 / 3.0 && far.chirped.tau <= 1.44 * 3.0 &&
           far_ratio < 1.3;
  v.detail = fmt::format(
      "0.5nm: tau0={:.1f} ms tau(500ms)={:.1f} ms ratio={:.2f} F={:.2f} p={:.3g} preferred={}; 4nm: tau0={:.0f} ms ratio={:.2f}",
      near.chirped.tau * 1e3, near.chirped.tau_at(0.5) * 1e3, near_ratio, near.f_statistic, near.p_value, near.chirped_preferred,
      far.chirped.tau * 1e3, far_ratio);
  return v;
}

// --- 8 ---------------------------------------------------------------------------

Verdict displacement_study() {
  std::vector<double> tau;
  std::string detail;
  Oscillation osc;
  double omega_par = 0.0;
  for (const char* name : {"fig4_displace3mm", "fig4_displace1.5mm", "fig4_displace0mm"}) {
    const auto c = preset(name);
    const auto r = cmd_mc(c, out_dir(8, name));
    tau.push_back(fit_single_exp(relaxation_curve(r.record)).tau);
    detail += fmt::format("{}: tau={:.1f} ms ", name, tau.back() * 1e3);
    if (tau.size() == 1) {
      // Skip the loading transient before reading the axial swing.
      std::vector<double> t, z;
      for (std::size_t k = 0; k < r.record.time.size(); ++k) {
        if (r.record.time[k] < 0.05) continue;
        t.push_back(r.record.time[k]);
        z.push_back(r.record.centroid[k][2]);
      }
      osc = oscillation_frequency(t, z);
      omega_par = r.report.omega_par;
    }
  }
  Verdict v;
  const bool ordered = tau[0] < tau[1] && tau[1] < tau[2];
  v.pass = ordered && within(osc.frequency, hz(omega_par), 0.20);
  v.detail = detail + fmt::format("; 3mm oscillation {:.2f} Hz vs w_par 2pi x {:.2f} Hz", osc.frequency, hz(omega_par));
  return v;
}

// --- 9 ---------------------------------------------------------------------------

ComplexField analytic_lg(const GridSpec& grid, int p, int ell, double w, double z, double lambda) {
  const double k = constants::two_pi / lambda;
  const double zr = constants::pi * w * w / lambda;
  const double wz = w * std::sqrt(1.0 + (z / zr) * (z / zr));
  const double gouy = (2.0 * p + std::abs(ell) + 1.0) * std::atan(z / zr);
  const auto at_waist = lg_mode(grid, p, ell, wz, lambda);
  ComplexField out(grid, lambda);
  for (std::size_t r = 0; r < grid.n(); ++r)
    for (std::size_t c = 0; c < grid.n(); ++c) {
      const double x = grid.coord(c), y = grid.coord(r);
      out.at(r, c) = at_waist.at(r, c) * std::polar(1.0, k * z + k * (x * x + y * y) * z / (z * z + zr * zr) / 2.0 - gouy);
    }
  return out;
}

double relative_l2(const ComplexField& a, const ComplexField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    num += std::norm(a.samples[i] - b.samples[i]);
    den += std::norm(b.samples[i]);
  }
  return std::sqrt(num / den);
}

double max_rel_diff(const ComplexField& a, const ComplexField& b) {
  double d = 0.0, m = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    d = std::max(d, std::abs(a.samples[i] - b.samples[i]));
    m = std::max(m, std::abs(b.samples[i]));
  }
  return d / m;
}

Verdict propagation_oracles() {
  const double lambda = constants::d2_wavelength, w = 0.2e-3;
  const GridSpec grid(512, 10e-6);
  const double zr = constants::pi * w * w / lambda;
  double worst_l2 = 0.0, worst_power = 0.0;
  for (auto [p, ell] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
    const auto mode = lg_mode(grid, p, ell, w, lambda);
    for (double z : {0.25 * zr, zr, 2.0 * zr, -0.5 * zr}) {
      const auto out = angular_spectrum(mode, z);
      worst_l2 = std::max(worst_l2, relative_l2(out, analytic_lg(grid, p, ell, w, z, lambda)));
      worst_power = std::max(worst_power, std::abs(out.power() / mode.power() - 1.0));
    }
  }
  const auto beam = gaussian_beam(grid, w, 1e-3, lambda);
  const double composition = max_rel_diff(angular_spectrum(angular_spectrum(beam, 0.03), 0.05), angular_spectrum(beam, 0.08));
  const double reciprocity = max_rel_diff(angular_spectrum(angular_spectrum(beam, 0.06), -0.06), beam);
  Verdict v;
  v.pass = worst_l2 < 1e-3 && worst_power < 1e-6 && composition < 1e-9 && reciprocity < 1e-9;
  v.detail = fmt::format("worst LG L2={:.2e}, power drift={:.2e}, composition={:.2e}, reciprocity={:.2e}", worst_l2, worst_power,
                         composition, reciprocity);
  return v;
}

// --- 10 --------------------------------------------------------------------------

Verdict scattering_laws() {
  std::vector<double> scaled;
  for (double d = 30.0; d <= 100.0 + 1e-9; d += 5.0) scaled.push_back(scattering_coefficients(AtomicParams::rb85(d)).raman * std::pow(d, 4));
  double mean = 0.0;
  for (double s : scaled) mean += s / static_cast<double>(scaled.size());
  double spread = 0.0;
  for (double s : scaled) spread = std::max(spread, std::abs(s / mean - 1.0));

  const auto c = preset("fig3_delta0.5nm");
  const auto rep = cmd_scan(c, out_dir(10)).entries.front().report;
  const double red = red_trap_scattering_time(rep.depth, config_detuning_nm(c), c.number("atoms.temperature_uK"));
  const double heating = recoil_heating_rate(1.0, AtomicParams::rb85(1.0));

  Verdict v;
  v.pass = spread <= 0.05 && within(red, 2.5e-3, 0.25) && heating >= 400e-9 / 1.5 && heating <= 400e-9 * 1.5;
  v.detail = fmt::format("Raman x Delta^4 spread {:.1f}% over 30-100 nm; red trap {:.2f} ms (target 2.5); heating {:.0f} nK/s at 1/s",
                         spread * 100.0, red * 1e3, heating * 1e9);
  return v;
}

// --- 11 --------------------------------------------------------------------------

Verdict determinism() {
  const auto c = preset("fig1c_l1");
  omp_set_num_threads(1);
  cmd_mc(c, out_dir(11, "threads_1"));
  omp_set_num_threads(4);
  cmd_mc(c, out_dir(11, "threads_4"));
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(out_dir(11, "threads_1"))) {
    if (e.path().extension() != ".csv") continue;
    ++compared;
    if (slurp(e.path()) != slurp(out_dir(11, "threads_4") / e.path().filename())) ++differing;
  }
  Verdict v;
  v.pass = compared >= 2 && differing == 0;
  v.detail = fmt::format("fig1c_l1 at 1 and 4 threads: {} CSV files compared, {} differ", compared, differing);
  return v;
}

struct Criterion {
  Verdict (*run)();
  double budget_s;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {equal_barrier_rc, 300},    {mode_fractions, 60},          {trap_depths, 120},        {frequencies, 120},
      {barrier_structure, 600},   {gravity_identity, 600},       {time_dependent_relaxation, 1800},
      {displacement_study, 1200}, {propagation_oracles, 60},     {scattering_laws, 600},    {determinism, 1800},
  };
  std::vector<int> which;
  if (argc > 1) {
    which.push_back(std::atoi(argv[1]));
  } else {
    for (int k = 1; k <= static_cast<int>(all.size()); ++k) which.push_back(k);
  }
  bool ok = true;
  for (int k : which) {
    if (k < 1 || k > static_cast<int>(all.size())) {
      std::fprintf(stderr, "no criterion %d\n", k);
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = all[static_cast<std::size_t>(k - 1)].run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = dt <= all[static_cast<std::size_t>(k - 1)].budget_s;
    const bool pass = v.pass && in_time;
    std::printf("criterion %d: %s  %s  [%.1f s%s]\n", k, pass ? "PASS" : "FAIL", v.detail.c_str(), dt,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
    ok = ok && pass;
  }
  return ok ? 0 : 1;
}
