#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radstab/common.hpp"

namespace radstab {

// ---------------------------------------------------------------------------
// Space dimension and the critical growth exponents
// ---------------------------------------------------------------------------

/// Space dimension N of the exterior domain. Only N >= 2 is meaningful.
class Dimension {
 public:
  explicit Dimension(int n) : n_(n) {
    if (n < 2) {
      throw validation_error("dimension must satisfy N >= 2, got " +
                             std::to_string(n));
    }
  }
  int value() const { return n_; }
  double as_double() const { return static_cast<double>(n_); }

  friend bool operator==(Dimension a, Dimension b) { return a.n_ == b.n_; }

 private:
  int n_;
};

/// The pair of growth exponents -N/2 +- sqrt(N-1) + 2 separating the two
/// admissible growth regimes. lambda_plus vanishes at N = 10 and
/// lambda_minus at N = 2.
struct CriticalExponents {
  double lambda_plus;
  double lambda_minus;

  double gap() const { return lambda_plus - lambda_minus; }
};

inline CriticalExponents exponents(Dimension n) {
  const double nd = n.as_double();
  const double root = std::sqrt(nd - 1.0);
  return {2.0 - nd / 2.0 + root, 2.0 - nd / 2.0 - root};
}

/// Tolerance (in exponent units) used when matching fitted growth rates
/// against the critical exponents. Dyadic fits at horizon 1e4 resolve slopes
/// far better than half the minimum gap width (2 at N = 2).
inline constexpr double kGapTolerance = 0.05;

// ---------------------------------------------------------------------------
// Radial grids and sampled profiles
// ---------------------------------------------------------------------------

/// Strictly increasing radii, all >= 1. The exterior problem lives on r >= 1,
/// and grids are log-uniform by default: the growth dichotomy is
/// multiplicative in r, so log spacing equidistributes information.
class RadialGrid {
 public:
  explicit RadialGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) {
      throw validation_error("radial grid needs at least 2 nodes");
    }
    if (!(nodes_.front() >= 1.0)) {
      throw validation_error("radial grid must start at r >= 1");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!std::isfinite(nodes_[i])) {
        throw validation_error("radial grid node is not finite");
      }
      if (i > 0 && !(nodes_[i] > nodes_[i - 1])) {
        throw validation_error("radial grid nodes must be strictly increasing");
      }
    }
  }

  static RadialGrid log_uniform(double r_first, double r_last,
                                std::size_t count) {
    if (count < 2) throw validation_error("log_uniform grid needs count >= 2");
    if (!(r_first >= 1.0) || !(r_last > r_first)) {
      throw validation_error("log_uniform grid needs 1 <= r_first < r_last");
    }
    std::vector<double> nodes(count);
    const double t0 = std::log(r_first);
    const double t1 = std::log(r_last);
    for (std::size_t i = 0; i < count; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(count - 1);
      nodes[i] = std::exp(t0 + s * (t1 - t0));
    }
    nodes.front() = r_first;
    nodes.back() = r_last;
    return RadialGrid(std::move(nodes));
  }

  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::vector<double> nodes_;
};

/// A radial solution sampled as (u, u_r) on a grid. The central object passed
/// between the solver, the stability forms and the growth classifier.
struct RadialProfile {
  RadialProfile(RadialGrid grid_, std::vector<double> u_,
                std::vector<double> u_r_)
      : grid(std::move(grid_)), u(std::move(u_)), u_r(std::move(u_r_)) {
    if (u.size() != grid.size() || u_r.size() != grid.size()) {
      throw validation_error("profile arrays must match the grid size");
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!std::isfinite(u[i]) || !std::isfinite(u_r[i])) {
        throw validation_error("profile values must be finite");
      }
    }
  }

  RadialGrid grid;
  std::vector<double> u;
  std::vector<double> u_r;

  double horizon() const { return grid.back(); }
};

/// Evaluation interface for a C^1 nonlinearity: f and its derivative.
struct Nonlinearity {
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
};

// ---------------------------------------------------------------------------
// Tagged limits and classification reports
// ---------------------------------------------------------------------------

/// lim_{r->inf} u(r), which may be any real number or +-infinity. Infinities
/// are tagged values and never enter floating-point arithmetic.
struct Limit {
  enum class Kind { Finite, PlusInfinity, MinusInfinity, Unknown };

  Kind kind = Kind::Unknown;
  double value = 0.0;  // meaningful only when kind == Finite

  static Limit finite(double v) { return {Kind::Finite, v}; }
  static Limit plus_infinity() { return {Kind::PlusInfinity, 0.0}; }
  static Limit minus_infinity() { return {Kind::MinusInfinity, 0.0}; }
  static Limit unknown() { return {Kind::Unknown, 0.0}; }

  bool is_finite() const { return kind == Kind::Finite; }
  bool is_infinite() const {
    return kind == Kind::PlusInfinity || kind == Kind::MinusInfinity;
  }
};

inline std::string to_string(Limit::Kind k) {
  switch (k) {
    case Limit::Kind::Finite: return "finite";
    case Limit::Kind::PlusInfinity: return "+inf";
    case Limit::Kind::MinusInfinity: return "-inf";
    default: return "unknown";
  }
}

enum class Verdict { Large, Small, Constant, Undetermined };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Large: return "Large";
    case Verdict::Small: return "Small";
    case Verdict::Constant: return "Constant";
    default: return "Undetermined";
  }
}

/// Result of classifying a profile against the two growth regimes.
/// fitted_exponent is the dyadic log-log slope; M_fit and r0_fit realize the
/// fitted bound on the sampled window (no optimality claimed).
struct ClassificationReport {
  Verdict verdict = Verdict::Undetermined;
  std::optional<double> fitted_exponent;
  Limit u_infinity = Limit::unknown();
  std::optional<double> m_fit;   // > 0 when present
  std::optional<double> r0_fit;  // >= 1 when present
  bool log_growth = false;       // matched M*log r rather than a power
  bool vacuous_bound = false;    // Large with u_inf = +-inf in N >= 11
  bool outside_hypothesis = false;  // non-monotone tail: not a stable profile
};

// ---------------------------------------------------------------------------
// Profile interpolation
// ---------------------------------------------------------------------------

/// C^1 interpolant of a sampled profile in t = log r. u is reconstructed by
/// cubic Hermite from (u, du/dt = r u_r); u_r through 4-point Lagrange on
/// v = r u_r. Both are fourth-order accurate on smooth profiles.
class ProfileInterpolant {
 public:
  explicit ProfileInterpolant(const RadialProfile& p)
      : t_(p.grid.size()), u_(p.u), v_(p.grid.size()) {
    const std::size_t n = p.grid.size();
    for (std::size_t i = 0; i < n; ++i) {
      t_[i] = std::log(p.grid[i]);
      v_[i] = p.grid[i] * p.u_r[i];
    }
    dt_ = (t_.back() - t_.front()) / static_cast<double>(n - 1);
    uniform_ = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(t_[i + 1] - t_[i] - dt_) > 1e-12 * std::max(1.0, dt_)) {
        uniform_ = false;
        break;
      }
    }
  }

  double r_min() const { return std::exp(t_.front()); }
  double r_max() const { return std::exp(t_.back()); }

  double u(double r) const {
    const double t = checked_log(r);
    const std::size_t i = locate(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * u_[i] + (s3 - 2 * s2 + s) * h * v_[i] +
           (-2 * s3 + 3 * s2) * u_[i + 1] + (s3 - s2) * h * v_[i + 1];
  }

  double u_r(double r) const { return v_of_t(checked_log(r)) / r; }

 private:
  double checked_log(double r) const {
    const double t = std::log(r);
    if (t < t_.front() - 1e-12 || t > t_.back() + 1e-12) {
      throw validation_error("interpolation query outside the profile domain");
    }
    return std::clamp(t, t_.front(), t_.back());
  }

  std::size_t locate(double t) const {
    const std::size_t n = t_.size();
    if (uniform_) {
      auto i = static_cast<std::ptrdiff_t>((t - t_.front()) / dt_);
      return static_cast<std::size_t>(
          std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 2));
    }
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const auto i = static_cast<std::size_t>(it - t_.begin());
    return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, n - 2);
  }

  double v_of_t(double t) const {
    const std::size_t n = t_.size();
    const std::size_t i = locate(t);
    if (n < 4) {
      // linear fallback for minimal grids
      const double s = (t - t_[i]) / (t_[i + 1] - t_[i]);
      return (1 - s) * v_[i] + s * v_[i + 1];
    }
    std::size_t j0 = (i == 0) ? 0 : i - 1;
    j0 = std::min(j0, n - 4);
    double acc = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      double term = v_[j0 + a];
      for (std::size_t b = 0; b < 4; ++b) {
        if (a == b) continue;
        term *= (t - t_[j0 + b]) / (t_[j0 + a] - t_[j0 + b]);
      }
      acc += term;
    }
    return acc;
  }

  std::vector<double> t_;
  std::vector<double> u_;
  std::vector<double> v_;
  double dt_ = 0.0;
  bool uniform_ = false;
};

// ---------------------------------------------------------------------------
// Rescaling u(r) -> u(R0 r)
// ---------------------------------------------------------------------------

/// Pull a profile defined for r >= R0 back to a grid starting at 1:
/// w(r) = u(R0 r), w_r(r) = R0 u_r(R0 r). Reduces problems that are stable
/// outside a ball of radius R0 to the unit-ball exterior form. Growth
/// classification is invariant under this map.
inline RadialProfile rescale(const RadialProfile& profile, double r0) {
  if (!(r0 >= 1.0)) {
    throw validation_error("rescale requires R0 >= 1");
  }
  if (r0 == 1.0) return profile;
  if (!(r0 < profile.grid.back())) {
    throw validation_error("rescale requires the profile to cover [R0, horizon]");
  }

  const ProfileInterpolant interp(profile);
  std::vector<double> rs, w, w_r;
  rs.reserve(profile.grid.size());
  w.reserve(profile.grid.size());
  w_r.reserve(profile.grid.size());

  rs.push_back(1.0);
  w.push_back(interp.u(r0));
  w_r.push_back(r0 * interp.u_r(r0));

  for (std::size_t i = 0; i < profile.grid.size(); ++i) {
    const double x = profile.grid[i];
    if (x <= r0) continue;
    const double r = x / r0;
    if (r <= rs.back() * (1.0 + 1e-14)) continue;
    rs.push_back(r);
    w.push_back(profile.u[i]);       // u(R0 * (x/R0)) = stored sample
    w_r.push_back(r0 * profile.u_r[i]);
  }
  if (rs.size() < 2) {
    throw validation_error("rescale leaves fewer than 2 nodes");
  }
  return RadialProfile(RadialGrid(std::move(rs)), std::move(w), std::move(w_r));
}

}  // namespace radstab
