#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "radstab/core.hpp"

namespace radstab {

/// Slope band around zero inside which a dyadic fit is considered flat.
inline constexpr double kSlopeTol = 0.05;
/// Band around the L^p convergence threshold reported as borderline: a finite
/// horizon cannot distinguish log-divergent from convergent integrals there.
inline constexpr double kBorderlineTol = 0.1;

/// Dyadic fitting window: bases r_hi/2, r_hi/4, ... with dyadic_levels
/// doublings, all inside [r_lo, r_hi].
struct FitWindow {
  double r_lo;
  double r_hi;
  int dyadic_levels;

  FitWindow(double lo, double hi, int levels)
      : r_lo(lo), r_hi(hi), dyadic_levels(levels) {
    if (!(r_lo >= 1.0) || !(r_hi > r_lo)) {
      throw validation_error("fit window needs 1 <= r_lo < r_hi");
    }
    if (levels < 3) {
      throw validation_error("fit window needs dyadic_levels >= 3");
    }
  }

  /// Widest window a profile supports, capped at max_levels doublings.
  static FitWindow for_profile(const RadialProfile& p, int max_levels = 12) {
    const double lo = p.grid.front(), hi = p.grid.back();
    const int usable =
        static_cast<int>(std::floor(std::log2(hi / lo))) - 1;
    return FitWindow(lo, hi, std::clamp(usable, 3, max_levels));
  }
};

namespace detail {

inline std::vector<double> dyadic_bases(const FitWindow& w) {
  const int usable =
      static_cast<int>(std::floor(std::log2(w.r_hi / w.r_lo))) - 1;
  if (usable < w.dyadic_levels) {
    throw validation_error("fit window has fewer than dyadic_levels doublings");
  }
  std::vector<double> bases(static_cast<std::size_t>(w.dyadic_levels));
  double r = w.r_hi / 2.0;
  for (auto& b : bases) {
    b = r;
    r /= 2.0;
  }
  return bases;  // outermost first
}

struct LeastSquares {
  double slope = 0.0;
  double spread = 0.0;  // max - min of the ordinates
};

inline LeastSquares fit_line(const std::vector<double>& x,
                             const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += sq(x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  LeastSquares out;
  out.slope = sxy / sxx;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  out.spread = *hi - *lo;
  return out;
}

}  // namespace detail

/// Estimate lim_{r->inf} u(r) from the tail of a profile.
///
/// Dyadic increments u(2r) - u(r) near the horizon decide the outcome: a
/// geometric decay extrapolates to a finite limit by summing the remaining
/// series; growing or stagnating increments give +-infinity by the sign of
/// the tail derivative. Throws nonmonotone_tail_error when u_r changes sign
/// inside the sampling range (such a profile is outside the monotone-tail
/// hypothesis).
inline Limit estimate_limit(const RadialProfile& profile) {
  const double hi = profile.grid.back();
  const double lo = profile.grid.front();
  const int levels =
      std::min(7, static_cast<int>(std::floor(std::log2(hi / lo))) - 1);
  if (levels < 3) {
    throw validation_error("estimate_limit: profile span too short");
  }

  const double r_min_sample = hi / std::pow(2.0, levels + 1);
  for (std::size_t i = 0; i + 1 < profile.grid.size(); ++i) {
    if (profile.grid[i] < r_min_sample) continue;
    const double a = profile.u_r[i], b = profile.u_r[i + 1];
    if (a != 0.0 && b != 0.0 && (a > 0.0) != (b > 0.0)) {
      throw nonmonotone_tail_error(
          "estimate_limit: u_r changes sign in the sampling tail");
    }
  }

  const ProfileInterpolant interp(profile);
  std::vector<double> inc(static_cast<std::size_t>(levels));
  for (int j = 0; j < levels; ++j) {
    const double base = hi / std::pow(2.0, j + 1);
    inc[static_cast<std::size_t>(j)] = interp.u(2.0 * base) - interp.u(base);
  }

  double scale = std::abs(profile.u.back());
  for (const double v : profile.u) scale = std::max(scale, std::abs(v));
  const double tiny = 1e-13 * std::max(1.0, scale);
  if (std::abs(inc[0]) < tiny && std::abs(inc[1]) < tiny) {
    return Limit::finite(profile.u.back());
  }

  // outermost ratio: increment based at r_hi/2 over increment based at r_hi/4
  const double ratio = inc[1] != 0.0 ? inc[0] / inc[1] : 2.0;
  constexpr double kGeomCutoff = 0.95;
  if (std::abs(ratio) <= kGeomCutoff) {
    const double remaining = inc[0] * ratio / (1.0 - ratio);
    return Limit::finite(profile.u.back() + remaining);
  }
  return inc[0] > 0.0 ? Limit::plus_infinity() : Limit::minus_infinity();
}

/// Growth-rate fit from dyadic increments.
struct GrowthFit {
  double exponent = 0.0;
  bool log_flag = false;
  double m_lower = 0.0;  // bound constant realizing q >= M * shape on samples
  double m_upper = 0.0;  // bound constant realizing q <= M * shape on samples
  double r0 = 1.0;       // first sample from which the bounds hold onward
};

/// Least-squares slope of log |u(2r) - u(r)| against log r over the window's
/// dyadic bases. Increments avoid the cancellation of subtracting a nearby
/// u_infinity. log_flag marks asymptotically constant increments with a flat
/// slope (M log r growth). The bound constants are fitted against
/// |u - u_infinity| when the limit is finite and |u| otherwise.
inline GrowthFit fit_growth_exponent(const RadialProfile& profile,
                                     const Limit& u_inf,
                                     const FitWindow& window) {
  const auto bases = detail::dyadic_bases(window);
  const ProfileInterpolant interp(profile);

  std::vector<double> xs, ys;
  xs.reserve(bases.size());
  for (const double r : bases) {
    const double d = std::abs(interp.u(2.0 * r) - interp.u(r));
    if (d <= 0.0) continue;
    xs.push_back(std::log(r));
    ys.push_back(std::log(d));
  }
  if (xs.size() < 2) {
    throw numerical_error("fit_growth_exponent: dyadic increments vanish");
  }
  const auto line = detail::fit_line(xs, ys);

  GrowthFit fit;
  fit.exponent = line.slope;
  fit.log_flag = std::abs(line.slope) <= kSlopeTol && line.spread <= 0.1;

  // fit the bound constants on the dyadic samples plus the outer endpoint
  std::vector<double> samples(bases.rbegin(), bases.rend());
  samples.push_back(window.r_hi);
  double m_lo = std::numeric_limits<double>::infinity();
  double m_hi = 0.0;
  double r0 = samples.front();
  bool first = true;
  for (const double r : samples) {
    if (fit.log_flag && r < 2.0) continue;  // log bound is stated for r >= 2
    const double shape = fit.log_flag ? std::log(r) : std::pow(r, fit.exponent);
    const double q = u_inf.is_finite()
                         ? std::abs(interp.u(r) - u_inf.value)
                         : std::abs(interp.u(r));
    if (q <= 0.0 || shape <= 0.0) continue;
    m_lo = std::min(m_lo, q / shape);
    m_hi = std::max(m_hi, q / shape);
    if (first) {
      r0 = r;
      first = false;
    }
  }
  if (!std::isfinite(m_lo)) m_lo = 0.0;
  fit.m_lower = m_lo;
  fit.m_upper = m_hi;
  fit.r0 = r0;
  return fit;
}

/// Classify a profile against the two growth regimes.
///
/// Constant profiles short-circuit on total variation. Otherwise the fitted
/// dyadic exponent is matched against the critical pair: at or above
/// lambda_plus (minus the gap tolerance) is Large, at or below lambda_minus
/// (plus the tolerance) is Small; flat-log growth maps to Large at N = 10 and
/// Small at N = 2. An unbounded profile in N >= 11 is reported Large with a
/// vacuous-bound flag. Anything landing strictly inside the gap is
/// Undetermined, which for a genuinely stable input signals a classification
/// failure.
inline ClassificationReport classify(const RadialProfile& profile, Dimension n,
                                     const FitWindow& window) {
  ClassificationReport report;

  double tv = 0.0;
  for (std::size_t i = 0; i + 1 < profile.u.size(); ++i) {
    tv += std::abs(profile.u[i + 1] - profile.u[i]);
  }
  if (tv < 1e-12) {
    report.verdict = Verdict::Constant;
    report.u_infinity = Limit::finite(profile.u.back());
    return report;
  }

  Limit limit = Limit::unknown();
  try {
    limit = estimate_limit(profile);
  } catch (const nonmonotone_tail_error&) {
    report.outside_hypothesis = true;
  }
  report.u_infinity = limit;

  const GrowthFit fit = fit_growth_exponent(profile, limit, window);
  report.fitted_exponent = fit.exponent;
  report.log_growth = fit.log_flag;

  const auto [lp, lm] = exponents(n);
  const bool large_exponent = fit.exponent >= lp - kGapTolerance;
  const bool small_exponent = fit.exponent <= lm + kGapTolerance;

  if (fit.log_flag && n.value() == 10) {
    report.verdict = Verdict::Large;
  } else if (fit.log_flag && n.value() == 2) {
    report.verdict = Verdict::Small;
  } else if (large_exponent) {
    report.verdict = Verdict::Large;
  } else if (small_exponent) {
    report.verdict = Verdict::Small;
  } else if (limit.is_infinite() && n.value() >= 11) {
    report.verdict = Verdict::Large;
    report.vacuous_bound = true;
  } else {
    report.verdict = Verdict::Undetermined;
  }

  if (report.verdict == Verdict::Large || report.verdict == Verdict::Small) {
    report.m_fit =
        report.verdict == Verdict::Large ? fit.m_lower : fit.m_upper;
    report.r0_fit = fit.r0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dyadic integral bounds
// ---------------------------------------------------------------------------

enum class BoundSide { L, S };

/// Report of a dyadic integral-bound check: ratio_k = I(r_k) r_k^{-e} where
/// I is the side's dyadic integral and e its critical exponent. The bound
/// holds when the ratios stay bounded with a non-growing trend.
struct DyadicBoundReport {
  bool ok = false;
  double worst_ratio = 0.0;
  double trend_slope = 0.0;
  std::vector<std::pair<double, double>> ratios;  // (r, ratio)
};

/// Side L: I1(r) = int_r^{2r} u_r^{-2}, against r^{N - 2 sqrt(N-1) - 1}.
/// Side S: I2(r) = int_r^{2r} u_r^2, against r^{-N - 2 sqrt(N-1) + 3}.
/// Integrals by composite Gauss quadrature on the profile interpolant over
/// subsegments aligned with the profile nodes.
inline DyadicBoundReport dyadic_bound_check(const RadialProfile& profile,
                                            Dimension n, BoundSide side,
                                            const FitWindow& window) {
  const double nd = n.as_double();
  const double target = side == BoundSide::L
                            ? nd - 2.0 * std::sqrt(nd - 1.0) - 1.0
                            : -nd - 2.0 * std::sqrt(nd - 1.0) + 3.0;
  const ProfileInterpolant interp(profile);

  if (side == BoundSide::L) {
    for (std::size_t i = 0; i < profile.grid.size(); ++i) {
      const double r = profile.grid[i];
      if (r < window.r_lo || r > window.r_hi) continue;
      if (profile.u_r[i] == 0.0) {
        throw numerical_error("dyadic_bound_check: u_r vanishes on the window");
      }
      if (i > 0 && profile.grid[i - 1] >= window.r_lo &&
          (profile.u_r[i] > 0.0) != (profile.u_r[i - 1] > 0.0)) {
        throw numerical_error("dyadic_bound_check: u_r changes sign on the window");
      }
    }
  }

  auto integrand = [&](double r) {
    const double ur = interp.u_r(r);
    return side == BoundSide::L ? 1.0 / sq(ur) : sq(ur);
  };

  // Gauss-4 on [-1, 1]
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                   0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                   0.6521451548625461, 0.3478548451374538};

  auto integrate = [&](double a, double b) {
    // subsegments aligned with profile nodes
    const auto& nodes = profile.grid.nodes();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), a);
    double left = a;
    double acc = 0.0;
    while (left < b) {
      const double right = (it != nodes.end() && *it < b) ? *it : b;
      if (right > left) {
        const double mid = 0.5 * (left + right), half = 0.5 * (right - left);
        for (int g = 0; g < 4; ++g) {
          acc += gw[g] * half * integrand(mid + half * gx[g]);
        }
      }
      left = right;
      if (it != nodes.end()) ++it;
      if (right == b) break;
    }
    return acc;
  };

  DyadicBoundReport report;
  const auto bases = detail::dyadic_bases(window);
  std::vector<double> xs, ys;
  double worst = 0.0;
  bool all_tiny = true;
  for (const double r : bases) {
    const double value = integrate(r, 2.0 * r);
    const double ratio = value * std::pow(r, -target);
    report.ratios.emplace_back(r, ratio);
    worst = std::max(worst, ratio);
    if (std::abs(ratio) > 1e-290) {
      all_tiny = false;
      xs.push_back(std::log(r));
      ys.push_back(std::log(std::abs(ratio)));
    }
  }
  report.worst_ratio = worst;
  if (all_tiny) {
    report.ok = true;  // integral identically ~0: the bound holds trivially
    return report;
  }
  if (xs.size() >= 2) {
    report.trend_slope = detail::fit_line(xs, ys).slope;
  }
  bool finite = true;
  for (const auto& [r, ratio] : report.ratios) {
    if (!std::isfinite(ratio)) finite = false;
  }
  report.ok = finite && report.trend_slope <= 0.01;
  return report;
}

// ---------------------------------------------------------------------------
// Gradient L^p tails
// ---------------------------------------------------------------------------

enum class TailVerdict { Converged, Diverged, Borderline };

inline std::string to_string(TailVerdict v) {
  switch (v) {
    case TailVerdict::Converged: return "Converged";
    case TailVerdict::Diverged: return "Diverged";
    default: return "Borderline";
  }
}

struct LpTailReport {
  TailVerdict verdict = TailVerdict::Borderline;
  double tail_exponent = 0.0;   // beta with |u_r| ~ r^beta over the last decade
  double predicted_rate = 0.0;  // p*beta + N: log2 growth of dyadic partials
  double measured_rate = 0.0;   // observed log2 ratio of the last two partials
};

/// Decide membership of |grad u| in L^p of the exterior domain from the
/// profile tail: fit beta over the last decade and compare p*beta + N against
/// the borderline band.
inline LpTailReport lp_tail_test(const RadialProfile& profile, Dimension n,
                                 double p) {
  if (!(p >= 1.0)) throw validation_error("lp_tail_test needs p >= 1");
  const double nd = n.as_double();
  const double hi = profile.grid.back();
  const double lo = std::max(profile.grid.front(), hi / 10.0);

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < profile.grid.size(); ++i) {
    const double r = profile.grid[i];
    if (r < lo || r > hi) continue;
    const double a = std::abs(profile.u_r[i]);
    if (a <= 0.0) continue;
    xs.push_back(std::log(r));
    ys.push_back(std::log(a));
  }

  LpTailReport report;
  if (xs.size() < 2) {
    // derivative vanishes on the tail: nothing to integrate
    report.verdict = TailVerdict::Converged;
    report.predicted_rate = -std::numeric_limits<double>::infinity();
    report.measured_rate = report.predicted_rate;
    return report;
  }
  report.tail_exponent = detail::fit_line(xs, ys).slope;
  report.predicted_rate = p * report.tail_exponent + nd;

  // measured log2 ratio of the last two dyadic partial integrals of
  // r^{N-1} |u_r|^p, computed in log space to dodge under/overflow
  const ProfileInterpolant interp(profile);
  auto log_partial = [&](double a, double b) {
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                     0.3399810435848563, 0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                     0.6521451548625461, 0.3478548451374538};
    constexpr int kPieces = 64;
    std::vector<double> logs;
    std::vector<double> weights;
    const double t0 = std::log(a), t1 = std::log(b);
    for (int piece = 0; piece < kPieces; ++piece) {
      const double pa = t0 + (t1 - t0) * piece / kPieces;
      const double pb = t0 + (t1 - t0) * (piece + 1) / kPieces;
      const double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
      for (int g = 0; g < 4; ++g) {
        const double t = mid + half * gx[g];
        const double r = std::exp(t);
        const double ur = std::abs(interp.u_r(r));
        if (ur <= 0.0) continue;
        // dr = r dt folded into the exponent
        logs.push_back(p * std::log(ur) + nd * t);
        weights.push_back(gw[g] * half);
      }
    }
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      acc += weights[i] * std::exp(logs[i] - m);
    }
    return m + std::log(acc);
  };
  const double l1 = log_partial(hi / 4.0, hi / 2.0);
  const double l2 = log_partial(hi / 2.0, hi);
  report.measured_rate = (l2 - l1) / std::log(2.0);

  if (report.predicted_rate < -kBorderlineTol) {
    report.verdict = TailVerdict::Converged;
  } else if (report.predicted_rate > kBorderlineTol) {
    report.verdict = TailVerdict::Diverged;
  } else {
    report.verdict = TailVerdict::Borderline;
  }
  return report;
}

}  // namespace radstab
