#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "radstab/common.hpp"

namespace radstab {

/// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct TriMat {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }
};

/// Generalized symmetric tridiagonal pencil A x = lambda B x with B positive
/// definite. Eigenvalues are located by Sturm-sequence bisection: by
/// Sylvester's law, the number of pencil eigenvalues below sigma equals the
/// number of negative pivots in the LDL^T factorization of A - sigma B.
class TriPencil {
 public:
  TriPencil(TriMat a, TriMat b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.size() != b_.size() || a_.size() == 0 ||
        a_.off.size() + 1 != a_.size() || b_.off.size() + 1 != b_.size()) {
      throw validation_error("pencil matrices must be tridiagonal and equal-sized");
    }
  }

  std::size_t size() const { return a_.size(); }
  const TriMat& a() const { return a_; }
  const TriMat& b() const { return b_; }

  /// Number of eigenvalues strictly below sigma.
  std::size_t count_below(double sigma) const {
    const std::size_t n = size();
    std::size_t count = 0;
    double d = a_.diag[0] - sigma * b_.diag[0];
    if (d == 0.0) d = -kTinyPivot;
    if (d < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
      const double c = a_.off[i - 1] - sigma * b_.off[i - 1];
      d = (a_.diag[i] - sigma * b_.diag[i]) - c * c / d;
      if (d == 0.0) d = -kTinyPivot;
      if (d < 0.0) ++count;
    }
    return count;
  }

  /// Smallest eigenvalue, bisected to abs_tol.
  double smallest_eigenvalue(double abs_tol = 1e-10) const {
    auto [lo, hi] = bracket_smallest();
    while (hi - lo > abs_tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;  // double resolution reached
      if (count_below(mid) >= 1) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// Eigenvector for the eigenvalue nearest sigma, by inverse iteration.
  /// Returned B-normalized.
  std::vector<double> eigenvector(double sigma) const {
    const std::size_t n = size();
    std::vector<double> x(n);
    // deterministic, non-degenerate start
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 1.0 + 1e-3 * static_cast<double>((i * 2654435761u) % 97) / 97.0;
    }
    b_normalize(x);
    double shift = sigma;
    for (int pass = 0; pass < 8; ++pass) {
      std::vector<double> rhs = b_mul(x);
      if (solve_shifted(shift, rhs)) {
        x = std::move(rhs);
        b_normalize(x);
        if (pass >= 2) break;
      } else {
        // exactly singular shift: nudge proportionally to the matrix scale
        shift += 1e-12 * (1.0 + std::abs(shift));
      }
    }
    return x;
  }

  double rayleigh(const std::vector<double>& x) const {
    return quad_form(a_, x) / quad_form(b_, x);
  }

  static double quad_form(const TriMat& m, const std::vector<double>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m.diag[i] * x[i] * x[i];
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
      acc += 2.0 * m.off[i] * x[i] * x[i + 1];
    }
    return acc;
  }

 private:
  static constexpr double kTinyPivot = 1e-300;

  std::pair<double, double> bracket_smallest() const {
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (count_below(lo) > 0) {
      lo *= 4.0;
      if (++guard > 600) throw numerical_error("pencil bracket: no lower bound");
    }
    guard = 0;
    while (count_below(hi) < 1) {
      hi *= 4.0;
      if (++guard > 600) throw numerical_error("pencil bracket: no upper bound");
    }
    return {lo, hi};
  }

  std::vector<double> b_mul(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = b_.diag[i] * x[i];
      if (i > 0) y[i] += b_.off[i - 1] * x[i - 1];
      if (i + 1 < n) y[i] += b_.off[i] * x[i + 1];
    }
    return y;
  }

  void b_normalize(std::vector<double>& x) const {
    double norm2 = quad_form(b_, x);
    if (!(norm2 > 0.0)) throw numerical_error("mass matrix is not positive");
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& xi : x) xi *= inv;
  }

  /// Solve (A - shift B) y = rhs in place via tridiagonal LU with partial
  /// pivoting. Returns false on an exactly singular pivot.
  bool solve_shifted(double shift, std::vector<double>& rhs) const {
    const std::size_t n = size();
    std::vector<double> dl(n, 0.0), dm(n, 0.0), du(n, 0.0), du2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      dm[i] = a_.diag[i] - shift * b_.diag[i];
      if (i + 1 < n) {
        du[i] = a_.off[i] - shift * b_.off[i];
        dl[i + 1] = a_.off[i] - shift * b_.off[i];
      }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(dl[i + 1]) > std::abs(dm[i])) {
        std::swap(dm[i], dl[i + 1]);
        std::swap(du[i], dm[i + 1]);
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = 0.0;
        }
        std::swap(rhs[i], rhs[i + 1]);
      }
      if (dm[i] == 0.0) return false;
      const double m = dl[i + 1] / dm[i];
      dm[i + 1] -= m * du[i];
      if (i + 2 < n) du[i + 1] -= m * du2[i];
      rhs[i + 1] -= m * rhs[i];
    }
    if (dm[n - 1] == 0.0) return false;
    rhs[n - 1] /= dm[n - 1];
    if (n >= 2) {
      rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / dm[n - 2];
    }
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(n) - 3; i >= 0; --i) {
      const auto ui = static_cast<std::size_t>(i);
      rhs[ui] = (rhs[ui] - du[ui] * rhs[ui + 1] - du2[ui] * rhs[ui + 2]) / dm[ui];
    }
    return true;
  }

  TriMat a_;
  TriMat b_;
};

}  // namespace radstab
