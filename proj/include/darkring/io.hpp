#ifndef DARKRING_IO_HPP
#define DARKRING_IO_HPP

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "darkring/analysis.hpp"
#include "darkring/error.hpp"
#include "darkring/grid.hpp"
#include "darkring/montecarlo.hpp"
#include "darkring/potential.hpp"
#include "darkring/propagation.hpp"

namespace darkring {

static_assert(std::endian::native == std::endian::little, "raw formats are written in native little-endian order");

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParameterError("raw file truncated");
  return v;
}

inline void expect_magic(std::istream& is, const char* magic) {
  char m[4];
  if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw ParameterError(fmt::format("not a {} file", magic));
}

/// Shortest round-trip representation, always with '.' as the decimal mark.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

}  // namespace detail

// --- Raw binary: 32-byte header, little-endian ---------------------------------

enum class FieldKind : std::uint32_t { complex = 0, phase = 1 };

/// "DRF1", kind (u32), n (u64), pitch (f64), wavelength (f64), then row-major
/// (re, im) pairs or phases as f64.
inline void write_drf(std::ostream& os, const ComplexField& f) {
  os.write("DRF1", 4);
  detail::put(os, static_cast<std::uint32_t>(FieldKind::complex));
  detail::put(os, static_cast<std::uint64_t>(f.grid.n()));
  detail::put(os, f.grid.pitch());
  detail::put(os, f.wavelength);
  for (const auto& s : f.samples) {
    detail::put(os, s.real());
    detail::put(os, s.imag());
  }
}

inline void write_drf(std::ostream& os, const PhaseMask& m, double wavelength) {
  os.write("DRF1", 4);
  detail::put(os, static_cast<std::uint32_t>(FieldKind::phase));
  detail::put(os, static_cast<std::uint64_t>(m.grid.n()));
  detail::put(os, m.grid.pitch());
  detail::put(os, wavelength);
  for (double p : m.phase) detail::put(os, p);
}

inline ComplexField read_drf_field(std::istream& is) {
  detail::expect_magic(is, "DRF1");
  if (detail::get<std::uint32_t>(is) != static_cast<std::uint32_t>(FieldKind::complex))
    throw ParameterError("DRF1 file holds a phase mask, not a field");
  const auto n = detail::get<std::uint64_t>(is);
  const auto pitch = detail::get<double>(is);
  ComplexField f(GridSpec(n, pitch), detail::get<double>(is));
  for (auto& s : f.samples) {
    const double re = detail::get<double>(is);
    s = {re, detail::get<double>(is)};
  }
  return f;
}

inline PhaseMask read_drf_mask(std::istream& is) {
  detail::expect_magic(is, "DRF1");
  if (detail::get<std::uint32_t>(is) != static_cast<std::uint32_t>(FieldKind::phase))
    throw ParameterError("DRF1 file holds a complex field, not a phase mask");
  const auto n = detail::get<std::uint64_t>(is);
  const auto pitch = detail::get<double>(is);
  (void)detail::get<double>(is);
  PhaseMask m(GridSpec(n, pitch));
  for (auto& p : m.phase) p = detail::get<double>(is);
  return m;
}

/// "DRV1", reserved (u32), n_rho (u64), n_z (u64), wavelength (f64), then the
/// rho axis, the z axis and the row-major (z-major) intensity as f64.
inline void write_drv(std::ostream& os, const IntensityVolume& v) {
  os.write("DRV1", 4);
  detail::put(os, std::uint32_t{0});
  detail::put(os, static_cast<std::uint64_t>(v.n_rho()));
  detail::put(os, static_cast<std::uint64_t>(v.n_z()));
  detail::put(os, v.source.wavelength);
  for (double r : v.rho_axis) detail::put(os, r);
  for (double z : v.z_axis) detail::put(os, z);
  for (double i : v.intensity) detail::put(os, i);
}

inline IntensityVolume read_drv(std::istream& is) {
  detail::expect_magic(is, "DRV1");
  (void)detail::get<std::uint32_t>(is);
  const auto nr = detail::get<std::uint64_t>(is);
  const auto nz = detail::get<std::uint64_t>(is);
  if (nr > (1u << 24) || nz > (1u << 24)) throw ParameterError("DRV1 header sizes are implausible");
  IntensityVolume v;
  v.source.wavelength = detail::get<double>(is);
  v.rho_axis.resize(nr);
  v.z_axis.resize(nz);
  v.intensity.resize(nr * nz);
  for (auto& r : v.rho_axis) r = detail::get<double>(is);
  for (auto& z : v.z_axis) z = detail::get<double>(is);
  for (auto& i : v.intensity) i = detail::get<double>(is);
  return v;
}

/// "DRS1", reserved (u32), atoms (u64), time (f64), reserved (f64), then per
/// atom x, y, z (f64) and the hyperfine level as f64 (2 or 3).
inline void write_snapshot(std::ostream& os, const Snapshot& s) {
  os.write("DRS1", 4);
  detail::put(os, std::uint32_t{0});
  detail::put(os, static_cast<std::uint64_t>(s.position.size()));
  detail::put(os, s.time);
  detail::put(os, 0.0);
  for (std::size_t i = 0; i < s.position.size(); ++i) {
    for (double c : s.position[i]) detail::put(os, c);
    detail::put(os, static_cast<double>(s.hyperfine[i]));
  }
}

// --- 16-bit binary PGM ------------------------------------------------------

/// P5 with maxval 65535, big-endian samples as the format requires. Values
/// are scaled linearly from [lo, hi] onto [0, 65535].
inline void write_pgm16(std::ostream& os, std::size_t width, std::size_t height, const std::vector<double>& values, double lo,
                        double hi) {
  if (values.size() != width * height) throw ShapeError("PGM data size does not match width x height");
  os << "P5\n" << width << ' ' << height << "\n65535\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : values) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    os.write(bytes, 2);
  }
}

inline void write_pgm16_intensity(std::ostream& os, const ComplexField& f) {
  const auto in = f.intensity();
  write_pgm16(os, f.grid.n(), f.grid.n(), in, 0.0, *std::max_element(in.begin(), in.end()));
}

inline void write_pgm16_phase(std::ostream& os, const PhaseMask& m) {
  write_pgm16(os, m.grid.n(), m.grid.n(), m.phase, 0.0, constants::two_pi);
}

/// Counts written as-is (saturating at 65535).
inline void write_pgm16_counts(std::ostream& os, const Image& img) {
  std::vector<double> v(img.counts.begin(), img.counts.end());
  write_pgm16(os, img.width, img.height, v, 0.0, 65535.0);
}

struct Pgm {
  std::size_t width = 0, height = 0;
  unsigned maxval = 0;
  std::vector<std::uint16_t> data;
};

inline Pgm read_pgm16(std::istream& is) {
  std::string magic;
  Pgm p;
  if (!(is >> magic) || magic != "P5") throw ParameterError("not a binary PGM (P5) file");
  if (!(is >> p.width >> p.height >> p.maxval)) throw ParameterError("bad PGM header");
  is.get();
  p.data.resize(p.width * p.height);
  for (auto& d : p.data) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), p.maxval > 255 ? 2 : 1)) throw ParameterError("PGM data truncated");
    d = p.maxval > 255 ? static_cast<std::uint16_t>((b[0] << 8) | b[1]) : b[0];
  }
  return p;
}

// --- CSV (RFC 4180: CRLF records, quoted fields when needed) ----------------

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << quote(fields[i]);
    }
    os_ << "\r\n";
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

 private:
  std::ostream& os_;
};

/// Parses RFC 4180 text. Accepts LF or CRLF record ends. Returns rows of fields.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false, was_quoted = false;
  std::size_t line = 1;
  char c;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
    row.clear();
    any = false;
  };
  while (is.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || was_quoted) throw ParameterError(fmt::format("CSV line {}: stray quote inside a field", line));
      quoted = was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (is.peek() == '\n') is.get(c);
      end_row();
      ++line;
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      if (was_quoted) throw ParameterError(fmt::format("CSV line {}: text after a closing quote", line));
      field += c;
    }
  }
  if (quoted) throw ParameterError("CSV ends inside a quoted field");
  if (any) end_row();
  return rows;
}

inline double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ParameterError(fmt::format("CSV line {}: column '{}' is not a number: '{}'", line, column, s));
  return v;
}

/// Relaxation curve from CSV with header time_s,f3[,sigma].
inline RelaxationCurve read_curve_csv(std::istream& is) {
  const auto rows = parse_csv(is);
  if (rows.empty()) throw ParameterError("CSV is empty");
  const auto& h = rows[0];
  if (h.size() < 2 || h[0] != "time_s" || h[1] != "f3" || (h.size() == 3 && h[2] != "sigma") || h.size() > 3)
    throw ParameterError("CSV line 1: header must be time_s,f3[,sigma]");
  RelaxationCurve c;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != h.size())
      throw ParameterError(fmt::format("CSV line {}: expected {} fields, found {}", r + 1, h.size(), rows[r].size()));
    c.time.push_back(parse_number(rows[r][0], r + 1, "time_s"));
    c.f3.push_back(parse_number(rows[r][1], r + 1, "f3"));
    if (h.size() == 3) c.sigma.push_back(parse_number(rows[r][2], r + 1, "sigma"));
  }
  c.validate();
  return c;
}

inline void write_curve_csv(std::ostream& os, const RelaxationCurve& c) {
  CsvWriter w(os);
  w.row(c.sigma.empty() ? std::vector<std::string>{"time_s", "f3"} : std::vector<std::string>{"time_s", "f3", "sigma"});
  for (std::size_t i = 0; i < c.time.size(); ++i) {
    std::vector<std::string> r{detail::num(c.time[i]), detail::num(c.f3[i])};
    if (!c.sigma.empty()) r.push_back(detail::num(c.sigma[i]));
    w.row(r);
  }
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  CsvWriter w(os);
  w.row({"time_s", "f3_fraction", "centroid_x_m", "centroid_y_m", "centroid_z_m", "n_counted", "n_escaped", "mean_flip_rate_per_s"});
  for (std::size_t k = 0; k < rec.time.size(); ++k) {
    w.row({detail::num(rec.time[k]), detail::num(rec.f3_fraction[k]), detail::num(rec.centroid[k][0]),
           detail::num(rec.centroid[k][1]), detail::num(rec.centroid[k][2]), std::to_string(rec.n_counted[k]),
           std::to_string(rec.n_escaped[k]), detail::num(rec.mean_flip_rate[k])});
  }
}

inline void write_spectrum_csv(std::ostream& os, const ModeSpectrum& s) {
  CsvWriter w(os);
  w.row({"p", "ell", "basis_waist_m", "fraction"});
  for (std::size_t p = 0; p < s.fractions.size(); ++p)
    w.row({std::to_string(p), std::to_string(s.ell), detail::num(s.basis_waist), detail::num(s.fractions[p])});
}

/// I(rho) at one plane, with the quadratic well fit when given.
inline void write_rho_profile_csv(std::ostream& os, const IntensityVolume& v, double z, double kappa,
                                  const QuadraticFit* fit = nullptr) {
  CsvWriter w(os);
  w.row({"rho_m", "intensity_w_m2", "potential_j", "quadratic_fit_j"});
  const auto prof = rho_profile(v, z);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    const double rho = v.rho_axis[i];
    const bool in = fit && rho >= fit->lo && rho <= fit->hi;
    w.row({detail::num(rho), detail::num(prof[i]), detail::num(kappa * prof[i]), in ? detail::num((*fit)(rho)) : ""});
  }
}

/// Potential along the tracked ring-minimum path, with the axial fit.
inline void write_z_profile_csv(std::ostream& os, const BarrierReport& r) {
  CsvWriter w(os);
  w.row({"z_m", "rho_m", "potential_j", "quadratic_fit_j"});
  for (std::size_t k = 0; k < r.path_z.size(); ++k) {
    const double z = r.path_z[k];
    const bool in = r.axial_fit.hi > r.axial_fit.lo && z >= r.axial_fit.lo && z <= r.axial_fit.hi;
    w.row({detail::num(z), detail::num(r.path_rho[k]), detail::num(r.path_u[k]), in ? detail::num(r.axial_fit(z)) : ""});
  }
}

/// Flat key = value block.
inline std::string format_barrier_report(const BarrierReport& r) {
  std::string s;
  auto kv = [&](const char* k, double v) { s += fmt::format("{} = {}\n", k, detail::num(v)); };
  kv("ring_radius_m", r.ring_radius);
  kv("trap_rho_m", r.trap_rho);
  kv("trap_z_m", r.trap_z);
  kv("depth_hbar_gamma", r.in_hbar_gamma(r.depth));
  kv("inner_barrier_hbar_gamma", r.in_hbar_gamma(r.inner_height()));
  kv("outer_barrier_hbar_gamma", r.in_hbar_gamma(r.outer_height()));
  kv("longitudinal_barrier_hbar_gamma", r.longitudinal_found ? r.in_hbar_gamma(r.longitudinal_height()) : NAN);
  kv("inner_over_outer", r.barrier_ratio());
  kv("saddle_z_minus_m", r.saddle_z_minus);
  kv("saddle_z_plus_m", r.saddle_z_plus);
  kv("omega_perp_hz", r.omega_perp / constants::two_pi);
  kv("omega_par_hz", r.omega_par / constants::two_pi);
  kv("omega_perp_local_hz", r.omega_perp_local / constants::two_pi);
  kv("omega_par_local_hz", r.omega_par_local / constants::two_pi);
  kv("aspect_ratio", r.omega_par / r.omega_perp);
  kv("radial_fit_quartic_ratio", r.radial_fit.quartic_ratio);
  kv("axial_fit_quartic_ratio", r.axial_fit.quartic_ratio);
  return s;
}

inline std::string format_fit(const FitResult& f) {
  std::string s;
  s += fmt::format("model = {}\n", f.model_name());
  auto kv = [&](const char* k, double v) { s += fmt::format("{} = {}\n", k, detail::num(v)); };
  kv("C", f.c);
  kv("C_err", f.c_err);
  kv(f.model == RelaxationModel::single ? "tau_s" : "tau0_s", f.tau);
  kv(f.model == RelaxationModel::single ? "tau_err_s" : "tau0_err_s", f.tau_err);
  if (f.model == RelaxationModel::chirped) {
    kv("beta_s_per_sqrt_s", f.beta);
    kv("beta_err", f.beta_err);
    kv("tau_500ms_s", f.tau_at(0.5));
  }
  kv("ssr", f.ssr);
  s += fmt::format("points = {}\nweighted = {}\nconverged = {}\ndegenerate = {}\nbeta_at_bound = {}\n", f.n_points, f.weighted,
                   f.converged, f.degenerate, f.beta_at_bound);
  if (!f.note.empty()) s += fmt::format("note = {}\n", f.note);
  return s;
}

inline void write_fit_csv(std::ostream& os, const std::vector<FitResult>& fits) {
  CsvWriter w(os);
  w.row({"model", "C", "tau0_s", "beta_s_per_sqrt_s", "tau_500ms_s", "ssr", "points", "converged", "degenerate"});
  for (const auto& f : fits)
    w.row({f.model_name(), detail::num(f.c), detail::num(f.tau), detail::num(f.beta), detail::num(f.tau_at(0.5)),
           detail::num(f.ssr), std::to_string(f.n_points), f.converged ? "1" : "0", f.degenerate ? "1" : "0"});
}

inline void write_lifetime_csv(std::ostream& os, const std::vector<LifetimeRow>& rows) {
  CsvWriter w(os);
  w.row({"detuning_nm", "tau_0_s", "tau_500ms_s", "C", "beta_s_per_sqrt_s"});
  for (const auto& r : rows)
    w.row({detail::num(r.detuning_nm), detail::num(r.tau_0), detail::num(r.tau_500ms), detail::num(r.c), detail::num(r.beta)});
}

// --- File helpers ------------------------------------------------------------

template <class F>
void write_file(const std::filesystem::path& path, bool binary, F&& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out | std::ios::binary);
  if (!os) throw ParameterError(fmt::format("cannot open {} for writing", path.string()));
  body(os);
  if (!os) throw ParameterError(fmt::format("write to {} failed", path.string()));
}

}  // namespace darkring

#endif  // DARKRING_IO_HPP
