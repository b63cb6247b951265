#ifndef DARKRING_LSQ_HPP
#define DARKRING_LSQ_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "darkring/error.hpp"

namespace darkring {

/// Residuals r(p) and, when `jac` is non-null, the Jacobian dr/dp stored
/// row-major (residual index major).
using ResidualFn = std::function<void(const std::vector<double>& p, std::vector<double>& r, std::vector<double>* jac)>;

struct LsqProblem {
  std::size_t n_residuals = 0;
  ResidualFn residuals;
  std::vector<double> lower, upper;  // box bounds, may be +-inf
};

struct LsqOptions {
  int max_iterations = 400;
  double xtol = 1e-8;   // relative parameter change
  double gtol = 1e-6;   // largest cosine between r and a Jacobian column
};

struct LsqResult {
  std::vector<double> p;
  double ssr = std::numeric_limits<double>::infinity();
  double gradient = std::numeric_limits<double>::infinity();  // max |cos(r, J_i)| over free parameters
  std::vector<double> jtj_inverse;                              // (J^T J)^-1, row-major
  std::vector<bool> at_bound;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

/// Solves the small dense system A x = b in place by Gaussian elimination with
/// partial pivoting. Returns false when A is numerically singular.
inline bool solve_dense(std::vector<double> a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (!(std::abs(a[piv * n + c]) > 1e-300)) return false;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c * n + k] * b[k];
    b[c] = s / a[c * n + c];
  }
  return true;
}

inline std::vector<double> invert_dense(const std::vector<double>& a, std::size_t n) {
  std::vector<double> inv(n * n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    if (!solve_dense(a, e)) return inv;
    for (std::size_t r = 0; r < n; ++r) inv[r * n + c] = e[r];
  }
  return inv;
}

inline double sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

}  // namespace detail

/// Box-constrained Levenberg-Marquardt with Marquardt's diagonal scaling.
/// Steps are projected onto the bounds; a parameter sitting on a bound with
/// the gradient pushing outward counts as free of the gradient test.
inline LsqResult levenberg_marquardt(const LsqProblem& prob, std::vector<double> p, const LsqOptions& opt = {}) {
  const std::size_t np = p.size(), nr = prob.n_residuals;
  if (np == 0 || nr < np) throw ParameterError("least squares needs at least as many residuals as parameters");
  auto clamp = [&](std::vector<double>& q) {
    for (std::size_t i = 0; i < np; ++i) {
      if (!prob.lower.empty()) q[i] = std::max(q[i], prob.lower[i]);
      if (!prob.upper.empty()) q[i] = std::min(q[i], prob.upper[i]);
    }
  };
  clamp(p);
  std::vector<double> r(nr), jac(nr * np), r_try(nr);
  prob.residuals(p, r, &jac);
  double ssr = detail::sum_squares(r);
  // Below this the residual is roundoff and its direction carries no gradient information.
  const double ssr_floor = 1e-24 * std::max(ssr, 1.0);
  double lambda = -1.0;

  LsqResult res;
  res.at_bound.assign(np, false);
  auto normal_equations = [&](std::vector<double>& jtj, std::vector<double>& g) {
    jtj.assign(np * np, 0.0);
    g.assign(np, 0.0);
    for (std::size_t k = 0; k < nr; ++k)
      for (std::size_t i = 0; i < np; ++i) {
        g[i] += jac[k * np + i] * r[k];
        for (std::size_t j = 0; j < np; ++j) jtj[i * np + j] += jac[k * np + i] * jac[k * np + j];
      }
  };
  auto gradient_measure = [&](const std::vector<double>& jtj, const std::vector<double>& g) {
    const double rn = std::sqrt(ssr);
    double worst = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      const bool low = !prob.lower.empty() && p[i] <= prob.lower[i] && g[i] > 0.0;
      const bool high = !prob.upper.empty() && p[i] >= prob.upper[i] && g[i] < 0.0;
      res.at_bound[i] = low || high;
      if (res.at_bound[i]) continue;
      const double cn = std::sqrt(jtj[i * np + i]);
      if (ssr <= ssr_floor || cn == 0.0) continue;
      worst = std::max(worst, std::abs(g[i]) / (cn * rn));
    }
    return worst;
  };

  std::vector<double> jtj, g;
  normal_equations(jtj, g);
  int it = 0;
  bool small_step = false;
  for (; it < opt.max_iterations; ++it) {
    if (gradient_measure(jtj, g) < opt.gtol && small_step) break;
    if (lambda < 0.0) {
      double dmax = 0.0;
      for (std::size_t i = 0; i < np; ++i) dmax = std::max(dmax, jtj[i * np + i]);
      lambda = 1e-3 * std::max(dmax, 1e-300);
    }
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      std::vector<double> a = jtj, step(np);
      for (std::size_t i = 0; i < np; ++i) {
        a[i * np + i] += lambda * std::max(jtj[i * np + i], 1e-30);
        step[i] = -g[i];
      }
      if (!detail::solve_dense(a, step)) {
        lambda *= 4.0;
        continue;
      }
      std::vector<double> q = p;
      for (std::size_t i = 0; i < np; ++i) q[i] += step[i];
      clamp(q);
      prob.residuals(q, r_try, nullptr);
      const double s_try = detail::sum_squares(r_try);
      if (std::isfinite(s_try) && s_try <= ssr) {
        double rel = 0.0;
        for (std::size_t i = 0; i < np; ++i) rel = std::max(rel, std::abs(q[i] - p[i]) / (std::abs(p[i]) + 1e-12));
        small_step = rel < opt.xtol;
        p = q;
        ssr = s_try;
        prob.residuals(p, r, &jac);
        normal_equations(jtj, g);
        lambda = std::max(lambda / 3.0, 1e-300);
        accepted = true;
      } else {
        lambda *= 2.0;
      }
    }
    if (!accepted) {
      small_step = true;
      break;
    }
  }
  res.p = p;
  res.ssr = ssr;
  res.gradient = gradient_measure(jtj, g);
  res.converged = small_step && res.gradient < opt.gtol;
  res.iterations = it;
  res.jtj_inverse = detail::invert_dense(jtj, np);
  return res;
}

/// Nelder-Mead simplex on a scalar objective with box bounds by clamping.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                       const std::vector<double>& scale, const std::vector<double>& lower,
                                       const std::vector<double>& upper, int max_evaluations = 4000, double ftol = 1e-14) {
  const std::size_t n = x0.size();
  auto clamp = [&](std::vector<double>& q) {
    for (std::size_t i = 0; i < n; ++i) q[i] = std::clamp(q[i], lower[i], upper[i]);
  };
  std::vector<std::vector<double>> s(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    s[i + 1][i] += scale[i];
    clamp(s[i + 1]);
  }
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(s[i]);
  int evals = static_cast<int>(n + 1);
  std::vector<std::size_t> order(n + 1);
  while (evals < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (std::abs(fv[worst] - fv[best]) <= ftol * (std::abs(fv[best]) + 1e-300)) break;
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) c[i] += s[order[k]][i] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> q(n);
      for (std::size_t i = 0; i < n; ++i) q[i] = c[i] + t * (s[worst][i] - c[i]);
      clamp(q);
      return q;
    };
    auto xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[best]) {
      auto xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) s[worst] = xe, fv[worst] = fe;
      else s[worst] = xr, fv[worst] = fr;
    } else if (fr < fv[second]) {
      s[worst] = xr, fv[worst] = fr;
    } else {
      auto xc = fr < fv[worst] ? along(-0.5) : along(0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[worst])) {
        s[worst] = xc, fv[worst] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          auto& q = s[order[k]];
          for (std::size_t i = 0; i < n; ++i) q[i] = s[best][i] + 0.5 * (q[i] - s[best][i]);
          fv[order[k]] = f(q);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  return s[static_cast<std::size_t>(it - fv.begin())];
}

}  // namespace darkring

#endif  // DARKRING_LSQ_HPP
