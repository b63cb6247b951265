#ifndef DARKRING_RC_SEARCH_HPP
#define DARKRING_RC_SEARCH_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "darkring/atomic.hpp"
#include "darkring/error.hpp"
#include "darkring/potential.hpp"
#include "darkring/radial.hpp"

namespace darkring {

struct RcSearchOptions {
  double lo = 0.5, hi = 1.0;   // Rc/w0 bracket
  int coarse_steps = 11;
  double tolerance = 1e-3;     // on Rc/w0
  double z_span = 15e-3;
  std::size_t n_planes = 61;
  FocalSampling sampling{512, 2e-6, 256, 256, 200e-6};
  double power = 0.15;         // barrier ratios do not depend on it
};

struct RcScanPoint {
  double rc_over_w0 = 0.0;
  std::optional<double> difference;  // (U_z - U_in) / U_in, when defined
  std::string note;
};

struct RcSearchResult {
  double rc_over_w0 = 0.0;
  BarrierReport report;              // at the returned Rc
  std::vector<RcScanPoint> scan;     // coarse scan, for diagnostics
  int evaluations = 0;
};

namespace detail {

/// Relative mismatch between the longitudinal and the inner radial barrier.
inline RcScanPoint barrier_mismatch(int ell, double w0, double f, double wavelength, double ratio,
                                    const RcSearchOptions& opt, BarrierReport* out = nullptr) {
  RcScanPoint pt;
  pt.rc_over_w0 = ratio;
  const auto vol = focus_scan_radial(stepped_gaussian_source(w0, opt.power, wavelength, ell, ratio * w0), f, opt.z_span,
                                     opt.n_planes, opt.sampling);
  // Any blue detuning gives the same barrier ratios; 1 nm is used for scale.
  const auto params = AtomicParams::rb85(1.0);
  try {
    BarrierOptions bo;
    bo.require_longitudinal = false;
    const auto rep = barrier_report(vol, params, bo);
    if (out) *out = rep;
    const double inner = rep.inner_height();
    if (rep.longitudinal_found) {
      pt.difference = (rep.longitudinal_height() - inner) / inner;
    } else if (rep.path_u.back() - rep.u_min > inner || rep.path_u.front() - rep.u_min > inner) {
      // The saddle lies beyond the scan but is already higher than the inner barrier.
      pt.difference = (std::min(rep.path_u.front(), rep.path_u.back()) - rep.u_min - inner) / inner;
      pt.note = "saddle beyond scanned z range";
    } else {
      pt.note = "no longitudinal barrier inside the scanned z range";
    }
  } catch (const TopologyError& e) {
    pt.note = e.what();
  }
  return pt;
}

inline std::string format_scan(const std::vector<RcScanPoint>& scan) {
  std::string s;
  for (const auto& p : scan) {
    s += fmt::format("\n  Rc/w0 = {:.3f}: ", p.rc_over_w0);
    s += p.difference ? fmt::format("(U_z - U_in)/U_in = {:+.4f}", *p.difference) : std::string("undefined");
    if (!p.note.empty()) s += " (" + p.note + ")";
  }
  return s;
}

}  // namespace detail

/// Rc/w0 at which the longitudinal barrier equals the inner radial barrier.
/// A coarse scan over [lo, hi] locates a sign change of the mismatch, which is
/// then refined by bisection.
inline RcSearchResult equal_barrier_rc(int ell, double w0, double f, double wavelength, const RcSearchOptions& opt = {}) {
  if (ell < 0 || ell > 3) throw ParameterError("equal_barrier_rc supports ell in {0, 1, 2, 3}");
  if (!(w0 > 0.0) || !(f > 0.0) || !(wavelength > 0.0)) throw ParameterError("w0, f and wavelength must be positive");
  if (opt.coarse_steps < 3 || !(opt.hi > opt.lo)) throw ParameterError("bad coarse scan");

  RcSearchResult res;
  for (int k = 0; k < opt.coarse_steps; ++k) {
    const double r = opt.lo + (opt.hi - opt.lo) * k / (opt.coarse_steps - 1);
    res.scan.push_back(detail::barrier_mismatch(ell, w0, f, wavelength, r, opt));
    ++res.evaluations;
  }

  // The mismatch grows with Rc/w0 through the root: the inner barrier weakens
  // while the longitudinal saddle rises. Falling sign changes are topology
  // jumps (the dark ring changes identity), not roots.
  std::optional<std::size_t> bracket;
  int rising = 0;
  for (std::size_t k = 0; k + 1 < res.scan.size(); ++k) {
    const auto& a = res.scan[k].difference;
    const auto& b = res.scan[k + 1].difference;
    if (a && b && *a < 0.0 && *b >= 0.0) {
      ++rising;
      if (!bracket) bracket = k;
    }
  }
  if (!bracket) {
    throw OptimizationError(fmt::format("no sign change of the barrier mismatch for ell = {} in Rc/w0 [{}, {}]; scan:{}", ell,
                                        opt.lo, opt.hi, detail::format_scan(res.scan)));
  }
  if (rising > 1) {
    throw OptimizationError(fmt::format("barrier mismatch crosses zero {} times for ell = {}; scan:{}", rising, ell,
                                        detail::format_scan(res.scan)));
  }
  // Monotone approach: the defined points leading into the bracket must rise.
  for (std::size_t k = *bracket; k-- > 0;) {
    const auto& a = res.scan[k].difference;
    const auto& b = res.scan[k + 1].difference;
    if (!a || !b) break;
    if (*a > *b) {
      throw OptimizationError(fmt::format("barrier mismatch is not monotone below the bracket for ell = {}; scan:{}", ell,
                                          detail::format_scan(res.scan)));
    }
  }

  double a = res.scan[*bracket].rc_over_w0, b = res.scan[*bracket + 1].rc_over_w0;
  double fa = *res.scan[*bracket].difference;
  while (b - a > opt.tolerance) {
    const double m = 0.5 * (a + b);
    const auto pm = detail::barrier_mismatch(ell, w0, f, wavelength, m, opt);
    ++res.evaluations;
    if (!pm.difference) {
      throw OptimizationError(fmt::format("barrier mismatch undefined at Rc/w0 = {:.4f} inside the bracket ({})", m, pm.note));
    }
    if ((*pm.difference < 0.0) == (fa < 0.0)) {
      a = m;
      fa = *pm.difference;
    } else {
      b = m;
    }
  }
  res.rc_over_w0 = 0.5 * (a + b);
  detail::barrier_mismatch(ell, w0, f, wavelength, res.rc_over_w0, opt, &res.report);
  ++res.evaluations;
  return res;
}

}  // namespace darkring

#endif  // DARKRING_RC_SEARCH_HPP
