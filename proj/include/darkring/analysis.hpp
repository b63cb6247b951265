#ifndef DARKRING_ANALYSIS_HPP
#define DARKRING_ANALYSIS_HPP

#include <boost/math/distributions/fisher_f.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "darkring/constants.hpp"
#include "darkring/error.hpp"
#include "darkring/lsq.hpp"
#include "darkring/montecarlo.hpp"

namespace darkring {

struct RelaxationCurve {
  std::vector<double> time;   // s
  std::vector<double> f3;
  std::vector<double> sigma;  // optional per-point error; empty means unweighted

  void validate() const {
    if (time.size() != f3.size()) throw ShapeError("curve time and f3 columns differ in length");
    if (!sigma.empty() && sigma.size() != time.size()) throw ShapeError("curve sigma column has the wrong length");
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (!std::isfinite(time[i]) || !std::isfinite(f3[i])) throw ParameterError(fmt::format("non-finite value at row {}", i));
      if (i > 0 && !(time[i] > time[i - 1])) throw ParameterError(fmt::format("times must increase strictly (row {})", i));
      if (f3[i] < 0.0 || f3[i] > 1.0) throw ParameterError(fmt::format("f3 = {} at row {} lies outside [0, 1]", f3[i], i));
      if (!sigma.empty() && !(sigma[i] > 0.0)) throw ParameterError(fmt::format("sigma must be positive (row {})", i));
    }
  }
};

/// Curve from a simulation with binomial error bars. The error uses the
/// add-one estimate so that points at f = 0 still carry finite weight.
inline RelaxationCurve relaxation_curve(const TrajectoryRecord& rec, double t_min = 0.0) {
  RelaxationCurve c;
  for (std::size_t k = 0; k < rec.time.size(); ++k) {
    if (rec.time[k] < t_min || rec.n_counted[k] == 0) continue;
    const auto n = static_cast<double>(rec.n_counted[k]);
    const double p = (rec.f3_fraction[k] * n + 1.0) / (n + 2.0);
    c.time.push_back(rec.time[k]);
    c.f3.push_back(rec.f3_fraction[k]);
    c.sigma.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return c;
}

enum class RelaxationModel { single, chirped };
enum class ChirpForm { direct, integrated };

struct FitResult {
  RelaxationModel model = RelaxationModel::single;
  ChirpForm form = ChirpForm::direct;
  double c = 0.0;
  double tau = 0.0;    // single: tau; chirped: tau0
  double beta = 0.0;   // s^-1/2 units: tau(t) = tau0 + beta sqrt(t)
  double c_err = 0.0, tau_err = 0.0, beta_err = 0.0;
  double ssr = 0.0;    // weighted when the curve has sigma
  std::size_t n_points = 0;
  bool weighted = false;
  bool converged = false;
  bool degenerate = false;     // tau pinned at an edge of the data's time scales
  bool beta_at_bound = false;  // chirp collapsed onto the single-exponential limit
  std::string note;

  [[nodiscard]] std::size_t n_params() const { return model == RelaxationModel::single ? 2 : 3; }
  [[nodiscard]] double tau_at(double t) const { return model == RelaxationModel::single ? tau : tau + beta * std::sqrt(t); }
  [[nodiscard]] std::string model_name() const {
    if (model == RelaxationModel::single) return "single";
    return form == ChirpForm::direct ? "chirped-direct" : "chirped-integrated";
  }
};

namespace detail {

/// g(x) = x - ln(1 + x), with a series near zero where the difference cancels.
inline double log_gap(double x) {
  if (std::abs(x) > 0.05) return x - std::log1p(x);
  double s = 0.0, term = x;
  for (int k = 2; k <= 14; ++k) {
    term *= -x;
    s -= term / k;
  }
  return s;
}

/// Elapsed "optical depth" E(t) and its derivatives for the relaxation
/// models in dimensionless time. N3 = C (1 - exp(-E)).
struct Exposure {
  double e = 0.0, d_tau = 0.0, d_beta = 0.0;
};

inline Exposure exposure(double t, double tau, double beta, RelaxationModel m, ChirpForm form) {
  if (m == RelaxationModel::single) return {t / tau, -t / (tau * tau), 0.0};
  const double s = std::sqrt(t);
  if (form == ChirpForm::direct) {
    const double tt = tau + beta * s;
    return {t / tt, -t / (tt * tt), -t * s / (tt * tt)};
  }
  // Integral of dt'/(tau + beta sqrt(t')) from 0 to t.
  const double x = beta * s / tau;
  if (x < 1e-3) {
    const double e = (t / tau) * (1.0 - 2.0 * x / 3.0 + x * x / 2.0 - 2.0 * x * x * x / 5.0);
    const double d_tau = -(t / (tau * tau)) * (1.0 - 4.0 * x / 3.0 + 1.5 * x * x);
    const double d_beta = (2.0 * t * s / (tau * tau)) * (-1.0 / 3.0 + x / 2.0 - 0.6 * x * x);
    return {e, d_tau, d_beta};
  }
  const double g = log_gap(x), gp = x / (1.0 + x);
  const double b2 = beta * beta;
  return {2.0 * tau / b2 * g, 2.0 / b2 * (g - x * gp), 2.0 * tau / (b2 * beta) * (x * gp - 2.0 * g)};
}

inline void check_curve(const RelaxationCurve& c, std::size_t min_points) {
  c.validate();
  if (c.time.size() < min_points) throw ParameterError(fmt::format("fit needs at least {} points", min_points));
  const auto [lo, hi] = std::minmax_element(c.f3.begin(), c.f3.end());
  if (*hi - *lo <= 1e-12) throw DegenerateFitError("curve is constant: no relaxation information");
}

struct Scaled {
  std::vector<double> t, y, w;
  double t_scale = 1.0;
};

inline Scaled scale_curve(const RelaxationCurve& c) {
  Scaled s;
  s.t_scale = c.time.back() > 0.0 ? c.time.back() : 1.0;
  for (std::size_t i = 0; i < c.time.size(); ++i) {
    s.t.push_back(c.time[i] / s.t_scale);
    s.y.push_back(c.f3[i]);
    s.w.push_back(c.sigma.empty() ? 1.0 : 1.0 / c.sigma[i]);
  }
  return s;
}

inline double smallest_spacing(const std::vector<double>& t) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < t.size(); ++i) d = std::min(d, t[i] - t[i - 1]);
  return d;
}

inline FitResult fit_relaxation(const RelaxationCurve& curve, RelaxationModel model, ChirpForm form,
                                const std::vector<std::vector<double>>& starts) {
  const Scaled s = scale_curve(curve);
  const std::size_t n = s.t.size();
  const bool single = model == RelaxationModel::single;
  const double tiny = 1e-6 * smallest_spacing(s.t);

  LsqProblem prob;
  prob.n_residuals = n;
  prob.lower = single ? std::vector<double>{1e-9, tiny} : std::vector<double>{1e-9, tiny, 0.0};
  prob.upper = single ? std::vector<double>{1.0, 1e6} : std::vector<double>{1.0, 1e6, 1e6};
  prob.residuals = [&](const std::vector<double>& p, std::vector<double>& r, std::vector<double>* jac) {
    const std::size_t np = p.size();
    const double beta = single ? 0.0 : p[2];
    for (std::size_t i = 0; i < n; ++i) {
      const auto ex = exposure(s.t[i], p[1], beta, model, form);
      const double decay = std::exp(-ex.e);
      r[i] = s.w[i] * (p[0] * (1.0 - decay) - s.y[i]);
      if (jac) {
        (*jac)[i * np + 0] = s.w[i] * (1.0 - decay);
        (*jac)[i * np + 1] = s.w[i] * p[0] * decay * ex.d_tau;
        if (!single) (*jac)[i * np + 2] = s.w[i] * p[0] * decay * ex.d_beta;
      }
    }
  };

  LsqResult best;
  for (const auto& start : starts) {
    auto res = levenberg_marquardt(prob, start);
    if (!res.converged) {
      // Derivative-free restart, then polish.
      std::vector<double> scale(start.size());
      for (std::size_t i = 0; i < start.size(); ++i) scale[i] = 0.2 * std::max(std::abs(start[i]), 0.05);
      std::vector<double> r(n);
      const auto x = nelder_mead(
          [&](const std::vector<double>& p) {
            prob.residuals(p, r, nullptr);
            return detail::sum_squares(r);
          },
          res.p, scale, prob.lower, prob.upper);
      auto polished = levenberg_marquardt(prob, x);
      if (polished.ssr <= res.ssr) res = polished;
    }
    const bool better = res.ssr < best.ssr * (1.0 - 1e-12) || (res.converged && !best.converged && res.ssr <= best.ssr * (1.0 + 1e-9));
    if (best.p.empty() || better) best = res;
  }

  FitResult f;
  f.model = model;
  f.form = form;
  f.n_points = n;
  f.weighted = !curve.sigma.empty();
  f.c = best.p[0];
  f.tau = best.p[1] * s.t_scale;
  f.beta = single ? 0.0 : best.p[2] * std::sqrt(s.t_scale);
  f.ssr = best.ssr;
  f.converged = best.converged;
  const std::size_t np = best.p.size();
  const double dof = n > np ? static_cast<double>(n - np) : 1.0;
  const double var = f.weighted ? std::max(1.0, best.ssr / dof) : best.ssr / dof;
  auto err = [&](std::size_t i) {
    const double v = best.jtj_inverse[i * np + i] * var;
    return v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
  };
  f.c_err = err(0);
  f.tau_err = err(1) * s.t_scale;
  if (!single) {
    f.beta_err = err(2) * std::sqrt(s.t_scale);
    f.beta_at_bound = best.p[2] <= 1e-9;
  }
  // Degenerate: the rise is over before the first nonzero sample, or too slow
  // to separate C from tau, or tau is not determined by the data.
  const double t_first = s.t.front() > 0.0 ? s.t.front() : s.t[1];
  const double early = exposure(t_first, best.p[1], single ? 0.0 : best.p[2], model, form).e;
  f.degenerate = early > 7.0 || best.p[1] > 100.0 || f.c < 1e-6 || !(f.tau_err < f.tau);
  if (f.degenerate) f.note = "lifetime pinned outside the sampled time scales";
  else if (f.beta_at_bound) f.note = "chirp at the beta = 0 bound; compare with the single exponential";
  else if (!f.converged) f.note = "optimizer stopped before the gradient test passed";
  return f;
}

}  // namespace detail

/// Least-squares fit of N3(t) = C (1 - exp(-t / tau)).
inline FitResult fit_single_exp(const RelaxationCurve& curve) {
  detail::check_curve(curve, 4);
  const double c0 = std::clamp(*std::max_element(curve.f3.begin(), curve.f3.end()), 0.05, 1.0);
  std::vector<std::vector<double>> starts;
  for (double t : {0.1, 1.0 / 3.0, 1.0}) starts.push_back({c0, t});
  return detail::fit_relaxation(curve, RelaxationModel::single, ChirpForm::direct, starts);
}

/// Least-squares fit of N3(t) = C (1 - exp(-t / tau(t))), tau(t) = tau0 + beta sqrt(t),
/// or of the integrated-rate form C (1 - exp(-int dt / tau(t))).
inline FitResult fit_chirped(const RelaxationCurve& curve, ChirpForm form = ChirpForm::direct) {
  detail::check_curve(curve, 6);
  const auto single = fit_single_exp(curve);
  const double ts = curve.time.back() > 0.0 ? curve.time.back() : 1.0;
  const double c0 = std::clamp(*std::max_element(curve.f3.begin(), curve.f3.end()), 0.05, 1.0);
  std::vector<std::vector<double>> starts{{single.c, single.tau / ts, 0.0}};
  for (double t : {0.1, 1.0 / 3.0, 1.0}) {
    starts.push_back({c0, t, 0.0});
    starts.push_back({c0, t, t});
  }
  starts.push_back({single.c, 0.5 * single.tau / ts, single.tau / ts});
  return detail::fit_relaxation(curve, RelaxationModel::chirped, form, starts);
}

/// Model value at t.
inline double relaxation_model(const FitResult& f, double t) {
  const auto ex = detail::exposure(t, f.tau, f.beta, f.model, f.form);
  return f.c * (1.0 - std::exp(-ex.e));
}

struct ModelComparison {
  FitResult single, chirped;
  double f_statistic = 0.0;
  double p_value = 1.0;
  bool chirped_preferred = false;
  bool valid = false;  // both fits converged and are not degenerate
  std::string note;
};

/// Nested-model F test of the chirped fit against the single exponential.
inline ModelComparison model_comparison(const RelaxationCurve& curve, ChirpForm form = ChirpForm::direct,
                                        double level = 0.05) {
  ModelComparison m;
  m.single = fit_single_exp(curve);
  m.chirped = fit_chirped(curve, form);
  m.valid = m.single.converged && m.chirped.converged && !m.single.degenerate && !m.chirped.degenerate;
  const double n = static_cast<double>(curve.time.size());
  const double df2 = n - 3.0;
  const double ssr1 = m.single.ssr, ssr2 = std::min(m.chirped.ssr, m.single.ssr);
  if (df2 < 1.0) throw ParameterError("model comparison needs more than three points");
  m.f_statistic = ssr2 > 0.0 ? (ssr1 - ssr2) / (ssr2 / df2) : std::numeric_limits<double>::infinity();
  const boost::math::fisher_f dist(1.0, df2);
  m.p_value = std::isfinite(m.f_statistic) ? boost::math::cdf(boost::math::complement(dist, std::max(0.0, m.f_statistic))) : 0.0;
  m.chirped_preferred = m.valid && m.p_value < level;
  if (!m.valid) {
    m.note = fmt::format("fit flags: single converged={} degenerate={}, chirped converged={} degenerate={}", m.single.converged,
                         m.single.degenerate, m.chirped.converged, m.chirped.degenerate);
  }
  return m;
}

struct Oscillation {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // trace units
  double damping = 0.0;    // s^-1
  double phase = 0.0;
  double offset = 0.0;
  double spectral_peak = 0.0;  // Hz, seed from the periodogram
};

/// Frequency of a uniformly sampled trace: periodogram peak, refined by a
/// damped-sinusoid least-squares fit.
inline Oscillation oscillation_frequency(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw ShapeError("trace time and value columns differ in length");
  const std::size_t n = t.size();
  if (n < 8) throw ParameterError("trace too short for a frequency estimate");
  const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt) throw ParameterError("trace must be uniformly sampled");
  double mean = 0.0;
  for (double v : y) mean += v / static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  if (!(var > 1e-30 * std::max(1.0, mean * mean) * static_cast<double>(n)))
    throw NoOscillationError("trace is constant: no oscillation");

  // Zero-padded periodogram from two periods per span up to Nyquist.
  const double span = t.back() - t.front();
  const double f_lo = 1.0 / span, f_hi = 0.5 / dt;
  const std::size_t n_f = 8 * n;
  std::vector<double> power(n_f);
  double peak = 0.0, f_peak = 0.0;
  for (std::size_t k = 0; k < n_f; ++k) {
    const double fr = f_lo + (f_hi - f_lo) * static_cast<double>(k) / static_cast<double>(n_f - 1);
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (y[i] - mean) * std::polar(1.0, -constants::two_pi * fr * (t[i] - t.front()));
    power[k] = std::norm(acc);
    if (power[k] > peak) peak = power[k], f_peak = fr;
  }
  std::vector<double> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_f / 2), sorted.end());
  const double median = sorted[n_f / 2];
  if (!(peak > 10.0 * median)) throw NoOscillationError("no spectral peak above the noise floor");

  // Damped sinusoid a e^{-g t} cos(w t + phi) + c in time relative to the start.
  const double t0 = t.front();
  const double amp0 = std::sqrt(2.0 * var / static_cast<double>(n));
  LsqProblem prob;
  prob.n_residuals = n;
  prob.lower = {0.0, -5.0 / span, 0.2 * constants::two_pi * f_peak, -1e3, -1e300};
  prob.upper = {1e300, 50.0 / span, 5.0 * constants::two_pi * f_peak, 1e3, 1e300};
  prob.residuals = [&](const std::vector<double>& p, std::vector<double>& r, std::vector<double>* jac) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = t[i] - t0;
      const double env = std::exp(-p[1] * s);
      const double c = std::cos(p[2] * s + p[3]), sn = std::sin(p[2] * s + p[3]);
      r[i] = p[0] * env * c + p[4] - y[i];
      if (jac) {
        double* row = &(*jac)[i * 5];
        row[0] = env * c;
        row[1] = -s * p[0] * env * c;
        row[2] = -s * p[0] * env * sn;
        row[3] = -p[0] * env * sn;
        row[4] = 1.0;
      }
    }
  };
  LsqResult best;
  for (double phi : {0.0, 0.5 * constants::pi, constants::pi, 1.5 * constants::pi}) {
    auto res = levenberg_marquardt(prob, {amp0, 0.0, constants::two_pi * f_peak, phi, mean});
    if (best.p.empty() || res.ssr < best.ssr) best = res;
  }
  Oscillation o;
  o.amplitude = best.p[0];
  o.damping = best.p[1];
  o.frequency = best.p[2] / constants::two_pi;
  o.phase = best.p[3];
  o.offset = best.p[4];
  o.spectral_peak = f_peak;
  return o;
}

struct LifetimeRow {
  double detuning_nm = 0.0;
  double tau_0 = 0.0, tau_500ms = 0.0, c = 0.0, beta = 0.0;
};

inline std::vector<LifetimeRow> lifetime_table(const std::vector<std::pair<double, FitResult>>& fits) {
  std::vector<LifetimeRow> rows;
  for (const auto& [d, f] : fits) {
    if (f.model != RelaxationModel::chirped || !f.converged) continue;
    rows.push_back({d, f.tau_at(0.0), f.tau_at(0.5), f.c, f.beta});
  }
  if (rows.empty()) throw ParameterError("lifetime table needs at least one converged chirped fit");
  return rows;
}

}  // namespace darkring

#endif  // DARKRING_ANALYSIS_HPP
