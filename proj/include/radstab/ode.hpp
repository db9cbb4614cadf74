#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "radstab/core.hpp"

namespace radstab {

inline double residual(const RadialProfile& profile, const Nonlinearity& f,
                       Dimension n);

/// Controls for the exterior-domain initial value solve.
struct SolverSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double r_max = 1e4;            // integration horizon
  std::size_t max_steps = 2'000'000;
  double initial_step = 1e-4;    // in t = log r
  std::size_t grid_points = 20'001;  // log-uniform resampling of the output
  double residual_tol = 1e-3;    // post-solve discrete residual self-check

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw validation_error("solver tolerances must be positive");
    }
    if (!(r_max > 1.0)) throw validation_error("solver r_max must exceed 1");
    if (max_steps == 0) throw validation_error("solver max_steps must be > 0");
    if (!(initial_step > 0.0)) {
      throw validation_error("solver initial_step must be positive");
    }
    if (grid_points < 3) {
      throw validation_error("solver grid_points must be at least 3");
    }
    if (!(residual_tol > 0.0)) {
      throw validation_error("solver residual_tol must be positive");
    }
  }
};

/// |u| beyond this is declared blow-up: far below double overflow, far above
/// any classification horizon.
inline constexpr double kOverflowGuard = 1e150;

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr std::array<double, 7> c = {0.0,     1.0 / 5, 3.0 / 10, 4.0 / 5,
                                              8.0 / 9, 1.0,     1.0};
  static constexpr std::array<std::array<double, 6>, 7> a = {{
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  }};
  // b5 equals the last row of a (FSAL); e = b5 - b4.
  static constexpr std::array<double, 7> e = {
      71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
      22.0 / 525,   -1.0 / 40};
};

struct State {
  double u;
  double v;  // v = r u_r
};

}  // namespace detail

/// Integrate u'' + (N-1)/r u' + f(u) = 0 from r = 1 with u(1) = u1,
/// u_r(1) = du1 out to settings.r_max.
///
/// The integration runs in t = log r with state (u, v = r u_r), where the
/// system reads du/dt = v, dv/dt = (2-N) v - r^2 f(u); this removes the 1/r
/// stiffness near the inner boundary. An adaptive embedded 5(4) pair with PI
/// step control supplies the steps; the result is resampled onto a
/// log-uniform grid by cubic Hermite interpolation of (u, v).
///
/// Throws blow_up_error (carrying the blow-up radius) if |u| exceeds the
/// overflow guard, step_limit_error on step exhaustion.
inline RadialProfile solve_ivp(const Nonlinearity& f, Dimension n, double u1,
                               double du1, const SolverSettings& settings = {}) {
  settings.validate();
  const double nd = n.as_double();
  const double t_end = std::log(settings.r_max);

  auto rhs = [&](double t, detail::State y) -> detail::State {
    const double r2 = std::exp(2.0 * t);
    return {y.v, (2.0 - nd) * y.v - r2 * f.f(y.u)};
  };

  // accepted step endpoints and derivatives, for dense output
  std::vector<double> ts, us, vs, dus, dvs;
  ts.reserve(1024);

  detail::State y{u1, du1};  // v(0) = 1 * u_r(1)
  double t = 0.0;
  detail::State k0 = rhs(t, y);
  ts.push_back(t);
  us.push_back(y.u);
  vs.push_back(y.v);
  dus.push_back(k0.u);
  dvs.push_back(k0.v);

  double h = std::min(settings.initial_step, t_end);
  double err_prev = 1.0;
  std::size_t steps = 0;
  bool blew_up = false;
  double blow_up_radius = 0.0;

  while (t < t_end) {
    if (++steps > settings.max_steps) {
      throw step_limit_error("solve_ivp: step budget exhausted at r = " +
                             std::to_string(std::exp(t)));
    }
    h = std::min(h, t_end - t);

    std::array<detail::State, 7> k;
    k[0] = k0;
    detail::State ynew{};
    for (int s = 1; s < 7; ++s) {
      detail::State acc{0.0, 0.0};
      for (int j = 0; j < s; ++j) {
        acc.u += detail::Dopri5::a[s][j] * k[j].u;
        acc.v += detail::Dopri5::a[s][j] * k[j].v;
      }
      const detail::State ys{y.u + h * acc.u, y.v + h * acc.v};
      if (s == 6) ynew = ys;  // 5th-order solution (FSAL)
      k[s] = rhs(t + detail::Dopri5::c[s] * h, ys);
    }

    double err_u = 0.0, err_v = 0.0;
    for (int s = 0; s < 7; ++s) {
      err_u += detail::Dopri5::e[s] * k[s].u;
      err_v += detail::Dopri5::e[s] * k[s].v;
    }
    const double sc_u = settings.abs_tol +
                        settings.rel_tol * std::max(std::abs(y.u), std::abs(ynew.u));
    const double sc_v = settings.abs_tol +
                        settings.rel_tol * std::max(std::abs(y.v), std::abs(ynew.v));
    const double err = std::sqrt(0.5 * (sq(h * err_u / sc_u) + sq(h * err_v / sc_v)));

    if (err <= 1.0 || h <= 1e-14 * std::max(1.0, std::abs(t))) {
      t += h;
      y = ynew;
      k0 = k[6];  // FSAL
      ts.push_back(t);
      us.push_back(y.u);
      vs.push_back(y.v);
      dus.push_back(k0.u);
      dvs.push_back(k0.v);
      if (!std::isfinite(y.u) || !std::isfinite(y.v) ||
          std::abs(y.u) > kOverflowGuard) {
        blew_up = true;
        blow_up_radius = std::exp(t);
        break;
      }
      // PI controller
      const double e_clamped = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e_clamped, -0.7 / 5.0) *
                   std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      h *= fac;
      err_prev = e_clamped;
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
  }

  if (blew_up) {
    throw blow_up_error(blow_up_radius,
                        "solve_ivp: solution blew up at r = " +
                            std::to_string(blow_up_radius));
  }

  // Resample onto a log-uniform grid via cubic Hermite on each accepted step.
  const RadialGrid grid =
      RadialGrid::log_uniform(1.0, settings.r_max, settings.grid_points);
  std::vector<double> u_out(grid.size()), ur_out(grid.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double tq = std::min(std::log(grid[i]), ts.back());
    while (seg + 2 < ts.size() && ts[seg + 1] < tq) ++seg;
    const double h_seg = ts[seg + 1] - ts[seg];
    const double s = (tq - ts[seg]) / h_seg;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    u_out[i] = h00 * us[seg] + h10 * h_seg * dus[seg] + h01 * us[seg + 1] +
               h11 * h_seg * dus[seg + 1];
    const double v = h00 * vs[seg] + h10 * h_seg * dvs[seg] +
                     h01 * vs[seg + 1] + h11 * h_seg * dvs[seg + 1];
    ur_out[i] = v / grid[i];
  }

  RadialProfile profile(grid, std::move(u_out), std::move(ur_out));

  // Self-check: the resampled profile must satisfy the equation in the
  // discrete sense on its own grid.
  const double res = residual(profile, f, n);
  if (!(res <= settings.residual_tol)) {
    throw numerical_error("solve_ivp: discrete residual " + std::to_string(res) +
                          " exceeds residual_tol");
  }
  return profile;
}

/// Max over interior nodes of |u'' + (N-1)/r u' + f(u)| / (1 + |f(u)|),
/// with u'' estimated by second-order centered differencing of the stored
/// radial derivative on the (possibly nonuniform) grid. Verifies a candidate
/// profile independently of how it was produced.
inline double residual(const RadialProfile& profile, const Nonlinearity& f,
                       Dimension n) {
  const std::size_t m = profile.grid.size();
  if (m < 3) throw validation_error("residual needs at least 3 nodes");
  const double nd = n.as_double();
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double upp =
        (profile.u_r[i + 1] - profile.u_r[i - 1]) /
        (profile.grid[i + 1] - profile.grid[i - 1]);
    const double fu = f.f(profile.u[i]);
    const double res =
        std::abs(upp + (nd - 1.0) / profile.grid[i] * profile.u_r[i] + fu) /
        (1.0 + std::abs(fu));
    worst = std::max(worst, res);
  }
  return worst;
}

/// Zeros of u_r located on a profile: sign changes (refined by bisection on
/// the interpolant) and exact-zero touch points without a sign change.
struct CriticalPoints {
  std::vector<double> sign_changes;
  std::vector<double> touch_points;

  std::size_t total() const { return sign_changes.size() + touch_points.size(); }
};

inline CriticalPoints critical_points(const RadialProfile& profile) {
  CriticalPoints out;
  const std::size_t m = profile.grid.size();
  const ProfileInterpolant interp(profile);

  for (std::size_t i = 0; i < m; ++i) {
    if (profile.u_r[i] == 0.0) {
      const bool left_neg = i > 0 && profile.u_r[i - 1] < 0.0;
      const bool left_pos = i > 0 && profile.u_r[i - 1] > 0.0;
      const bool right_neg = i + 1 < m && profile.u_r[i + 1] < 0.0;
      const bool right_pos = i + 1 < m && profile.u_r[i + 1] > 0.0;
      if ((left_neg && right_pos) || (left_pos && right_neg)) {
        out.sign_changes.push_back(profile.grid[i]);
      } else {
        out.touch_points.push_back(profile.grid[i]);
      }
    }
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double a = profile.u_r[i], b = profile.u_r[i + 1];
    if (a == 0.0 || b == 0.0 || (a > 0.0) == (b > 0.0)) continue;
    double lo = profile.grid[i], hi = profile.grid[i + 1];
    double flo = a;
    for (int it = 0; it < 80 && (hi - lo) > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = interp.u_r(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    out.sign_changes.push_back(0.5 * (lo + hi));
  }
  std::sort(out.sign_changes.begin(), out.sign_changes.end());
  return out;
}

}  // namespace radstab
