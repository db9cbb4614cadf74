#pragma once

#include <cmath>

#include "radstab/core.hpp"

namespace radstab {

/// Parameter of the closed-form solution family u_alpha(r) = r^alpha.
/// alpha = 0 encodes the logarithmic member u_0(r) = log r.
struct FamilyParameter {
  double alpha = 0.0;

  explicit FamilyParameter(double a) : alpha(a) {
    if (!std::isfinite(a)) throw validation_error("alpha must be finite");
  }
};

/// Sample u_alpha on the given grid: r^alpha (alpha != 0) or log r (alpha = 0).
inline RadialProfile power_solution(FamilyParameter alpha, Dimension /*n*/,
                                    const RadialGrid& grid) {
  const double a = alpha.alpha;
  std::vector<double> u(grid.size()), ur(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid[i];
    if (a == 0.0) {
      u[i] = std::log(r);
      ur[i] = 1.0 / r;
    } else {
      u[i] = std::pow(r, a);
      ur[i] = a * std::pow(r, a - 1.0);
    }
  }
  return RadialProfile(grid, std::move(u), std::move(ur));
}

/// The piecewise C^1 nonlinearity f_alpha for which u_alpha solves the radial
/// equation:
///   alpha < 0:  f(s) = -a(a+N-2) s^{1-2/a} for s > 0, 0 for s <= 0
///   alpha > 0:  f(s) = -a(a+N-2) s^{1-2/a} for s >= 1,
///               (a+N-2)((2-a)s - 2)        for s < 1
///   alpha = 0:  f(s) = -(N-2) e^{-2s}
/// The branches glue with matching one-sided derivatives.
inline Nonlinearity f_alpha(FamilyParameter alpha, Dimension n) {
  const double a = alpha.alpha;
  const double nd = n.as_double();

  if (a == 0.0) {
    return Nonlinearity{
        [nd](double s) { return -(nd - 2.0) * std::exp(-2.0 * s); },
        [nd](double s) { return 2.0 * (nd - 2.0) * std::exp(-2.0 * s); }};
  }

  const double coef = -a * (a + nd - 2.0);          // power branch
  const double dcoef = -(a - 2.0) * (a + nd - 2.0);  // its derivative
  const double expo = 1.0 - 2.0 / a;

  if (a < 0.0) {
    return Nonlinearity{
        [coef, expo](double s) {
          return s > 0.0 ? coef * std::pow(s, expo) : 0.0;
        },
        [dcoef, expo](double s) {
          return s > 0.0 ? dcoef * std::pow(s, expo - 1.0) : 0.0;
        }};
  }
  const double lin_slope = (a + nd - 2.0) * (2.0 - a);
  const double lin_const = (a + nd - 2.0) * (-2.0);
  return Nonlinearity{
      [coef, expo, lin_slope, lin_const](double s) {
        return s >= 1.0 ? coef * std::pow(s, expo) : lin_slope * s + lin_const;
      },
      [dcoef, expo, lin_slope](double s) {
        return s >= 1.0 ? dcoef * std::pow(s, expo - 1.0) : lin_slope;
      }};
}

/// f_alpha'(u_alpha(r)) in closed form: -(a-2)(a+N-2) / r^2.
inline double linearized_potential(FamilyParameter alpha, Dimension n,
                                   double r) {
  if (!(r >= 1.0)) throw validation_error("linearized_potential needs r >= 1");
  const double a = alpha.alpha;
  return -(a - 2.0) * (a + n.as_double() - 2.0) / (r * r);
}

/// Stability of the family member u_alpha on the exterior domain. Stable
/// exactly when alpha lies outside the open gap (lambda_minus, lambda_plus);
/// both boundary values are stable (equality case of the Hardy criterion).
inline bool exact_stability(FamilyParameter alpha, Dimension n) {
  const auto [lp, lm] = exponents(n);
  return alpha.alpha >= lp || alpha.alpha <= lm;
}

/// The Joseph-Lundgren-type exponent ((N-2)^2 - 4N + 8 sqrt(N-1)) /
/// ((N-2)(N-10)), defined for N >= 11.
inline double p_critical(Dimension n) {
  const double nd = n.as_double();
  if (n.value() <= 10) {
    throw validation_error("p_critical requires N >= 11");
  }
  return (sq(nd - 2.0) - 4.0 * nd + 8.0 * std::sqrt(nd - 1.0)) /
         ((nd - 2.0) * (nd - 10.0));
}

/// The explicit Sobolev-critical bubble
///   u(r) = (lambda sqrt(N(N-2)) / (lambda^2 + r^2))^{(N-2)/2},
/// sampled on the exterior grid together with its radial derivative.
inline RadialProfile aubin_talenti(double lambda_scale, Dimension n,
                                   const RadialGrid& grid) {
  if (!(lambda_scale > 0.0)) {
    throw validation_error("aubin_talenti needs lambda > 0");
  }
  if (n.value() < 3) {
    throw validation_error("aubin_talenti requires N >= 3");
  }
  const double nd = n.as_double();
  const double amp = lambda_scale * std::sqrt(nd * (nd - 2.0));
  const double half = (nd - 2.0) / 2.0;
  std::vector<double> u(grid.size()), ur(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid[i];
    const double den = sq(lambda_scale) + r * r;
    u[i] = std::pow(amp / den, half);
    ur[i] = u[i] * (-(nd - 2.0) * r / den);
  }
  return RadialProfile(grid, std::move(u), std::move(ur));
}

/// Closed-form answer to |grad u_alpha| in L^p of the exterior domain:
/// finite exactly when p(alpha-1) + N < 0 (alpha != 0) or p > N (alpha = 0).
/// The borderline integral diverges logarithmically and counts as not a
/// member; a 1e-9 band around the threshold is treated as the borderline so
/// the answer is stable under rounding of threshold inputs.
inline bool lp_membership_exact(FamilyParameter alpha, Dimension n, double p) {
  if (!(p >= 1.0)) throw validation_error("lp_membership_exact needs p >= 1");
  constexpr double kBoundaryEps = 1e-9;
  // u_r ~ r^{alpha-1} for every member (the log member has alpha = 0), so the
  // weighted integrand is r^{p(alpha-1) + N - 1}.
  const double growth = p * (alpha.alpha - 1.0) + n.as_double();
  return growth < -kBoundaryEps;
}

}  // namespace radstab
