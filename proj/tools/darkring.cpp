// darkring: configuration-driven runs of the ring-trap pipeline.
//
//   darkring <beam|scan|optimize-rc|mc|fit> --config PATH [--out DIR] [--seed N] [--manifest]
//
// Exit codes: 0 success, 2 config/input error, 3 physics/topology error,
// 4 numerical non-convergence.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "darkring/pipeline.hpp"

namespace {

using namespace darkring;

struct Options {
  std::string config;
  std::string out;
  std::optional<long long> seed;
  bool manifest = false;
  int threads = 0;
  // fit only
  std::string input;
  std::string model = "both";
  std::optional<double> detuning_nm;
};

Config load_config(const Options& o) {
  auto c = Config::load(o.config);
  if (o.seed) c.set("atoms.seed", std::to_string(*o.seed));
  return c;
}

std::filesystem::path out_dir(const Options& o, const Config* c) {
  if (!o.out.empty()) return o.out;
  if (c) return c->text("output.directory");
  return "out";
}

void report_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) fmt::print("wrote {}\n", f.string());
}

void emit_manifest(const Options& o, const Config& c, const std::filesystem::path& out) {
  if (!o.manifest) return;
  const std::string text = c.manifest();
  write_file(out / "manifest.ini", true, [&](std::ostream& os) { os << text; });
  fmt::print("{}", text);
}

int run(const std::string& cmd, const Options& o) {
  if (o.threads > 0) omp_set_num_threads(o.threads);
  if (cmd == "fit") {
    std::optional<Config> c;
    if (!o.config.empty()) c = load_config(o);
    const auto out = out_dir(o, c ? &*c : nullptr);
    const double dnm = o.detuning_nm ? *o.detuning_nm : c ? config_detuning_nm(*c) : std::numeric_limits<double>::quiet_NaN();
    const ChirpForm form = c ? config_chirp_form(*c) : ChirpForm::direct;
    if (c) emit_manifest(o, *c, out);
    const auto r = cmd_fit(o.input, o.model, form, dnm, out);
    if (o.model == "both") {
      for (const auto& f : {r.comparison.single, r.comparison.chirped})
        fmt::print("{}: C = {:.4f}, tau0 = {:.4g} s, beta = {:.4g}, converged = {}\n", f.model_name(), f.c, f.tau, f.beta,
                   f.converged);
      fmt::print("F = {:.4g}, p = {:.3g}, chirped preferred: {}\n", r.comparison.f_statistic, r.comparison.p_value,
                 r.comparison.chirped_preferred);
    }
    report_files(r.files);
    return 0;
  }

  const auto c = load_config(o);
  const auto out = out_dir(o, &c);
  emit_manifest(o, c, out);
  if (cmd == "beam") {
    const auto r = cmd_beam(c, out);
    std::string fr;
    for (std::size_t p = 0; p < r.spectrum.fractions.size(); ++p) fr += fmt::format(" p{}={:.4f}", p, r.spectrum.fractions[p]);
    fmt::print("mode fractions (basis waist {:.4g} m):{}\n", r.spectrum.basis_waist, fr);
    report_files(r.files);
  } else if (cmd == "scan") {
    const auto r = cmd_scan(c, out);
    for (const auto& e : r.entries) {
      const auto& b = e.report;
      fmt::print("ell = {}: ring radius {:.2f} um, depth {:.4f} hbar Gamma, U_in/U_out = {:.3f}, omega_perp = 2pi x {:.1f} Hz, "
                 "omega_par = 2pi x {:.2f} Hz\n",
                 e.ell, b.ring_radius * 1e6, b.in_hbar_gamma(b.depth), b.barrier_ratio(), b.omega_perp / constants::two_pi,
                 b.omega_par / constants::two_pi);
    }
    report_files(r.files);
  } else if (cmd == "optimize-rc") {
    const auto r = cmd_optimize_rc(c, out);
    for (const auto& [ell, res] : r.rows)
      fmt::print("ell = {}: Rc/w0 = {:.4f} (U_in/U_out = {:.3f}, {} evaluations)\n", ell, res.rc_over_w0,
                 res.report.barrier_ratio(), res.evaluations);
    report_files(r.files);
  } else if (cmd == "mc") {
    const auto r = cmd_mc(c, out);
    const auto& rec = r.record;
    fmt::print("final F=3 fraction {:.4f} over {} counted atoms, {} flips\n", rec.f3_fraction.back(), rec.n_counted.back(),
               rec.flips);
    report_files(r.files);
  } else {
    throw ParameterError(fmt::format("unknown command '{}'", cmd));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"darkring: dark ring optical trap workbench"};
  app.require_subcommand(1, 1);
  Options o;
  auto common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", o.config, "INI configuration file");
    if (config_required) opt->required();
    sub->add_option("--out", o.out, "output directory (overrides output.directory)");
    sub->add_option("--seed", o.seed, "random seed (overrides atoms.seed)");
    sub->add_flag("--manifest", o.manifest, "print and save the resolved configuration");
    sub->add_option("--threads", o.threads, "worker threads (0: OpenMP default)");
  };
  common(app.add_subcommand("beam", "mask, focal image and LG mode spectrum"), true);
  common(app.add_subcommand("scan", "focal volume and barrier report"), true);
  common(app.add_subcommand("optimize-rc", "equal-barrier Rc/w0 per ell"), true);
  common(app.add_subcommand("mc", "Monte Carlo loading and spin relaxation"), true);
  auto* fit = app.add_subcommand("fit", "fit relaxation curves");
  common(fit, false);
  fit->add_option("--input", o.input, "curve CSV (time_s,f3[,sigma])")->required();
  fit->add_option("--model", o.model, "single, chirped or both")->check(CLI::IsMember({"single", "chirped", "both"}));
  fit->add_option("--detuning-nm", o.detuning_nm, "detuning recorded in the lifetime table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const Error& e) {
    std::fprintf(stderr, "darkring: %s\n", e.what());
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "darkring: %s\n", e.what());
    return 4;
  }
}
