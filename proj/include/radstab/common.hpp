#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace radstab {

/// Invalid arguments or domain violations detected before any numerics run.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to deliver its contract (lost bracket,
/// singular pencil, residual check failure, ...).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The IVP integration left the overflow guard before reaching the horizon.
class blow_up_error : public numerical_error {
 public:
  blow_up_error(double radius, const std::string& what)
      : numerical_error(what), radius_(radius) {}
  double radius() const { return radius_; }

 private:
  double radius_;
};

/// The adaptive integrator exhausted its step budget.
class step_limit_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

/// The tail of a profile changes direction where a limit estimate needs
/// monotonicity.
class nonmonotone_tail_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

inline double sq(double x) { return x * x; }

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

inline bool nearly_equal(double a, double b, double rel_tol) {
  return rel_diff(a, b) <= rel_tol;
}

}  // namespace radstab
