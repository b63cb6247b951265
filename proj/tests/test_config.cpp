#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "darkring/config.hpp"

using namespace darkring;

namespace {

const std::string kMinimal =
    "[beam]\n"
    "w0 = 1.7 mm\n"
    "power = 150 mW\n"
    "detuning_nm = 1\n"
    "ell = 1\n"
    "rc_over_w0 = 0.79\n"
    "[optics]\n"
    "f = 215 mm\n";

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.ini");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, UnitsConvertToSi) {
  const auto c = parse(kMinimal + "[atoms]\ntemperature_uK = 5\nsigma = 250 um\n[schedule]\ndt_us = 10\nduration_ms = 1.5 s\n");
  EXPECT_DOUBLE_EQ(c.number("beam.w0"), 1.7e-3);
  EXPECT_DOUBLE_EQ(c.number("beam.power"), 0.15);
  EXPECT_DOUBLE_EQ(c.number("beam.detuning_nm"), 1e-9);
  EXPECT_DOUBLE_EQ(c.number("optics.f"), 0.215);
  EXPECT_DOUBLE_EQ(c.number("atoms.temperature_uK"), 5e-6);
  EXPECT_DOUBLE_EQ(c.number("atoms.sigma"), 250e-6);
  EXPECT_DOUBLE_EQ(c.number("schedule.dt_us"), 10e-6);
  EXPECT_DOUBLE_EQ(c.number("schedule.duration_ms"), 1.5);
  EXPECT_EQ(c.integer("beam.ell"), 1);
}

TEST(Config, BareNumbersUseCanonicalUnit) {
  const auto c = parse(kMinimal + "[schedule]\nramp_ms = 5\n[optics]\nrho_max = 0.0002\n");
  EXPECT_DOUBLE_EQ(c.number("schedule.ramp_ms"), 5e-3);
  EXPECT_DOUBLE_EQ(c.number("optics.rho_max"), 2e-4);
}

TEST(Config, DefaultsFilled) {
  const auto c = parse(kMinimal);
  EXPECT_EQ(c.integer("atoms.n"), 4000);
  EXPECT_DOUBLE_EQ(c.number("schedule.ramp_ms"), 5e-3);
  EXPECT_EQ(c.text("optics.propagator"), "angular-spectrum");
  EXPECT_EQ(c.list("output.formats"), (std::vector<std::string>{"csv", "pgm", "raw"}));
  EXPECT_FALSE(c.has("beam.wavelength"));
}

TEST(Config, UnknownKeyNamedWithLine) {
  const auto unknown = error_of("[beam]\nw0 = 1.7 mm\nwaist = 2 mm\n");
  EXPECT_NE(unknown.find("test.ini:3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("beam.waist"), std::string::npos) << unknown;
}

TEST(Config, MissingRequiredKeyNamed) {
  std::string text = kMinimal;
  text.erase(text.find("w0 = 1.7 mm\n"), 12);
  const auto msg = error_of(text);
  EXPECT_NE(msg.find("beam.w0"), std::string::npos) << msg;
}

TEST(Config, BadValuesAnchoredToLine) {
  EXPECT_NE(error_of(kMinimal + "[atoms]\nn = lots\n").find("test.ini:10"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "[atoms]\nsigma = 250 mW\n").find("unit 'mW'"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "[atoms]\nn = 4000.5\n").find("integer"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "[atoms\n").find("test.ini:9"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "just text\n").find("key = value"), std::string::npos);
  EXPECT_NE(error_of("w0 = 1\n").find("before any [section]"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "[beam]\nw0 = 2 mm\n").find("given twice"), std::string::npos);
}

TEST(Config, ExactlyOneColourKey) {
  EXPECT_NE(error_of(kMinimal + "[beam]\nwavelength = 779 nm\n").find("exactly one"), std::string::npos);
  std::string text = kMinimal;
  text.replace(text.find("detuning_nm = 1"), 15, "wavelength = 779.24 nm");
  EXPECT_DOUBLE_EQ(parse(text).number("beam.wavelength"), 779.24e-9);
}

TEST(Config, CommentsAndWhitespace) {
  const auto c = parse("# header\n" + kMinimal + "  [atoms]  \n  n   =  12   ; trailing\n");
  EXPECT_EQ(c.integer("atoms.n"), 12);
  EXPECT_EQ(c.where("atoms.n"), "test.ini:11");
}

TEST(Config, ManifestListsEveryKeyAndReparses) {
  const auto c = parse(kMinimal + "[atoms]\nseed = 7\n");
  const auto m = c.manifest();
  for (const auto& spec : detail::config_schema()) {
    const std::string name = spec.name;
    EXPECT_NE(m.find("\n" + name.substr(name.find('.') + 1) + " = "), std::string::npos) << name;
  }
  EXPECT_NE(m.find("w0 = 0.0017 m"), std::string::npos) << m;
  EXPECT_NE(m.find("seed = 7"), std::string::npos) << m;
  // Empty optional keys are dropped on re-parse; everything else is identical.
  std::string clean;
  std::istringstream is(m);
  for (std::string line; std::getline(is, line);)
    if (line.empty() || line.back() != ' ') clean += line + "\n";
  const auto again = parse(clean);
  EXPECT_EQ(again.manifest(), m);
}

TEST(Config, OverrideValidated) {
  auto c = parse(kMinimal);
  c.set("atoms.seed", "99");
  EXPECT_EQ(c.integer("atoms.seed"), 99);
  EXPECT_THROW(c.set("atoms.colour", "red"), ConfigError);
  EXPECT_THROW(c.set("atoms.seed", "x"), ConfigError);
}

TEST(Config, NumberListRejectsJunk) {
  const auto c = parse(kMinimal + "[schedule]\nsnapshot_ms = 100, abc\n");
  EXPECT_THROW(c.number_list("schedule.snapshot_ms"), ConfigError);
  const auto d = parse(kMinimal + "[schedule]\nsnapshot_ms = 100, 600\n");
  EXPECT_EQ(d.number_list("schedule.snapshot_ms"), (std::vector<double>{100.0, 600.0}));
}
