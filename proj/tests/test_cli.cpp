#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "darkring/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("darkring_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Run run(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(DARKRING_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string preset(const std::string& name) { return std::string(DARKRING_CONFIG_DIR) + "/" + name + ".ini"; }

/// Preset text with `key = ...` lines replaced or appended under their section.
std::string edited(const std::string& name, const std::vector<std::pair<std::string, std::string>>& changes) {
  std::istringstream is(slurp(preset(name)));
  std::string text, section, line;
  std::vector<bool> done(changes.size(), false);
  auto flush_section = [&] {
    for (std::size_t k = 0; k < changes.size(); ++k) {
      const auto& key = changes[k].first;
      if (!done[k] && key.substr(0, key.find('.')) == section) {
        text += key.substr(key.find('.') + 1) + " = " + changes[k].second + "\n";
        done[k] = true;
      }
    }
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '[') {
      flush_section();
      section = line.substr(1, line.find(']') - 1);
      text += line + "\n";
      continue;
    }
    bool replaced = false;
    for (std::size_t k = 0; k < changes.size(); ++k) {
      const auto& key = changes[k].first;
      const std::string sec = key.substr(0, key.find('.')), name_only = key.substr(key.find('.') + 1);
      if (sec == section && line.rfind(name_only + " ", 0) == 0) {
        if (!changes[k].second.empty()) text += name_only + " = " + changes[k].second + "\n";
        done[k] = replaced = true;
      }
    }
    if (!replaced) text += line + "\n";
  }
  flush_section();
  for (std::size_t k = 0; k < changes.size(); ++k) {
    if (done[k] || changes[k].second.empty()) continue;
    const auto& key = changes[k].first;
    text += "[" + key.substr(0, key.find('.')) + "]\n" + key.substr(key.find('.') + 1) + " = " + changes[k].second + "\n";
  }
  return text;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

std::string short_mc(const std::string& name) {
  return edited(name, {{"atoms.n", "300"}, {"schedule.duration_ms", "60"}, {"optics.propagator", "radial"},
                       {"optics.n_planes", "101"}, {"schedule.snapshot_ms", "50"}});
}

}  // namespace

TEST(Cli, NoArgumentsIsUsageError) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run("", dir).code, 2);
  EXPECT_EQ(run("bogus --config x", dir).code, 2);
  EXPECT_EQ(run("scan", dir).code, 2);
}

TEST(Cli, BeamWritesMaskFocalImageAndSpectrum) {
  const auto dir = scratch("beam");
  const auto r = run("beam --config " + preset("fig1c_l1") + " --out " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"mask_phase.pgm", "mask_phase.drf", "focal_intensity.pgm", "focal_field.drf", "mode_spectrum.csv",
                        "mode_spectrum_waist_scan.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  std::ifstream is(dir / "out" / "focal_intensity.pgm", std::ios::binary);
  const auto pgm = darkring::read_pgm16(is);
  EXPECT_EQ(pgm.width, 512u);
  EXPECT_EQ(pgm.maxval, 65535u);
}

TEST(Cli, MissingRequiredKeyExitsTwoNamingIt) {
  const auto dir = scratch("missing");
  const auto cfg = write_config(dir, edited("fig1c_l1", {{"beam.w0", ""}}));
  const auto r = run("scan --config " + cfg.string() + " --out " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("beam.w0"), std::string::npos) << r.err;
}

TEST(Cli, UnknownKeyExitsTwoWithLine) {
  const auto dir = scratch("unknown");
  const auto cfg = write_config(dir, "[beam]\nw0 = 1.7 mm\nwaist = 3 mm\n");
  const auto r = run("beam --config " + cfg.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("run.ini:3"), std::string::npos) << r.err;
}

TEST(Cli, SmallCoreRadiusExitsThree) {
  const auto dir = scratch("topology");
  const auto cfg = write_config(dir, edited("fig1c_l1", {{"beam.rc_over_w0", "0.3"}, {"optics.propagator", "radial"}}));
  const auto r = run("scan --config " + cfg.string() + " --out " + dir.string(), dir);
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, ScanReportAndBatchRingRadii) {
  const auto dir = scratch("scan");
  const auto cfg = write_config(dir, edited("fig1c_l1", {{"optics.propagator", "radial"}, {"scan.ells", "1, 2"}}));
  const auto r = run("scan --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = slurp(dir / "out" / "barrier_report_l1.txt");
  for (const char* k : {"omega_perp_hz = ", "omega_par_hz = ", "depth_hbar_gamma = "})
    EXPECT_NE(report.find(k), std::string::npos) << k;
  std::ifstream is(dir / "out" / "ring_radius.csv", std::ios::binary);
  const auto rows = darkring::parse_csv(is);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][2], "ring_radius_m");
  EXPECT_LT(std::stod(rows[1][2]), std::stod(rows[2][2]));
  EXPECT_TRUE(fs::exists(dir / "out" / "volume_l2.drv"));
}

TEST(Cli, ManifestPrintsResolvedDefaults) {
  const auto dir = scratch("manifest");
  const auto cfg = write_config(dir, edited("fig1c_l1", {{"optics.propagator", "radial"}}));
  const auto r = run("scan --manifest --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("[atoms]"), std::string::npos);
  EXPECT_NE(r.out.find("n = 4000"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(dir / "out" / "manifest.ini").substr(0, 6), "[beam]");
}

TEST(Cli, McRerunIsByteIdenticalAcrossThreadCounts) {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, short_mc("fig3_delta1nm"));
  const auto a = run("mc --threads 1 --config " + cfg.string() + " --out " + (dir / "a").string(), dir);
  const auto b = run("mc --threads 3 --config " + cfg.string() + " --out " + (dir / "b").string(), dir);
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 5u);
  const auto c = run("mc --seed 2 --config " + cfg.string() + " --out " + (dir / "c").string(), dir);
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "c" / "trajectory.csv"));
}

TEST(Cli, FitOnSimulatedCurve) {
  const auto dir = scratch("fit");
  const auto cfg = write_config(dir, short_mc("fig3_delta0.5nm"));
  ASSERT_EQ(run("mc --config " + cfg.string() + " --out " + (dir / "mc").string(), dir).code, 0);
  const auto r = run("fit --input " + (dir / "mc" / "relaxation_curve.csv").string() + " --detuning-nm 0.5 --out " +
                         (dir / "fit").string(),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir / "fit" / "fit.txt");
  EXPECT_NE(text.find("model = single"), std::string::npos) << text;
  EXPECT_NE(text.find("chirped_preferred = "), std::string::npos) << text;
  EXPECT_TRUE(fs::exists(dir / "fit" / "fit.csv"));
}

TEST(Cli, FitReducesToSingleOnUnchirpedCurve) {
  const auto dir = scratch("fit_single");
  {
    std::ofstream os(dir / "curve.csv", std::ios::binary);
    darkring::CsvWriter w(os);
    w.row({"time_s", "f3"});
    for (int i = 1; i <= 60; ++i) {
      const double t = 0.025 * i;
      w.row({darkring::detail::num(t), darkring::detail::num(0.58 * (1.0 - std::exp(-t / 0.23)))});
    }
  }
  const auto r = run("fit --model chirped --input " + (dir / "curve.csv").string() + " --out " + (dir / "fit").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream is(dir / "fit" / "fit.csv", std::ios::binary);
  const auto rows = darkring::parse_csv(is);
  ASSERT_EQ(rows.size(), 2u);
  std::size_t beta_col = 0, tau_col = 0;
  for (std::size_t k = 0; k < rows[0].size(); ++k) {
    if (rows[0][k] == "beta_s_per_sqrt_s") beta_col = k;
    if (rows[0][k] == "tau0_s") tau_col = k;
  }
  ASSERT_GT(beta_col, 0u);
  ASSERT_GT(tau_col, 0u);
  EXPECT_NEAR(std::stod(rows[1][beta_col]), 0.0, 1e-4);
  EXPECT_NEAR(std::stod(rows[1][tau_col]), 0.23, 0.01 * 0.23);
}

TEST(Cli, MalformedCurveExitsTwo) {
  const auto dir = scratch("malformed");
  std::ofstream(dir / "bad.csv") << "time_s,f3\r\n0.1,0.2\r\n0.2,\"oops\r\n";
  EXPECT_EQ(run("fit --input " + (dir / "bad.csv").string() + " --out " + dir.string(), dir).code, 2);
  std::ofstream(dir / "bad2.csv") << "time_s,f3\r\n0.1,0.2\r\n0.2,x\r\n";
  const auto r = run("fit --input " + (dir / "bad2.csv").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_EQ(run("fit --input " + (dir / "absent.csv").string() + " --out " + dir.string(), dir).code, 2);
}

TEST(Cli, ConstantCurveExitsTwo) {
  const auto dir = scratch("constant");
  std::ofstream(dir / "flat.csv") << "time_s,f3\r\n0.1,0.3\r\n0.2,0.3\r\n0.3,0.3\r\n0.4,0.3\r\n0.5,0.3\r\n0.6,0.3\r\n";
  EXPECT_EQ(run("fit --input " + (dir / "flat.csv").string() + " --out " + dir.string(), dir).code, 2);
}
