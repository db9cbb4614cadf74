#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "radstab/core.hpp"
#include "radstab/tridiag.hpp"

namespace radstab {

/// Negative-eigenvalue threshold separating quadrature noise from genuine
/// negative directions (B-normalized units, meshes of m >= 100).
inline constexpr double kSideTol = 1e-6;

/// Working annulus [r1, r2] with 1 <= r1 < r2 < inf.
struct AnnulusWindow {
  double r1;
  double r2;

  AnnulusWindow(double r1_, double r2_) : r1(r1_), r2(r2_) {
    if (!(r1 >= 1.0) || !(r2 > r1) || !std::isfinite(r2)) {
      throw validation_error("annulus window needs 1 <= r1 < r2 < inf");
    }
  }
};

/// Piecewise-linear test function eta on an annulus window. Lipschitz by
/// construction; the admissible class for the annulus form constrains only
/// the right end.
struct TestFunction {
  AnnulusWindow window;
  std::vector<double> nodes;
  std::vector<double> values;

  TestFunction(AnnulusWindow w, std::vector<double> nodes_,
               std::vector<double> values_)
      : window(w), nodes(std::move(nodes_)), values(std::move(values_)) {
    if (nodes.size() < 2 || nodes.size() != values.size()) {
      throw validation_error("test function needs matching nodes/values, >= 2");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!std::isfinite(nodes[i]) || !std::isfinite(values[i])) {
        throw validation_error("test function entries must be finite");
      }
      if (i > 0 && !(nodes[i] > nodes[i - 1])) {
        throw validation_error("test function nodes must be strictly increasing");
      }
    }
    if (rel_diff(nodes.front(), window.r1) > 1e-12 ||
        rel_diff(nodes.back(), window.r2) > 1e-12) {
      throw validation_error("test function nodes must span the window");
    }
  }

  double operator()(double r) const {
    if (r <= nodes.front()) return values.front();
    if (r >= nodes.back()) return values.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    const auto i = static_cast<std::size_t>(it - nodes.begin()) - 1;
    const double s = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
    return (1.0 - s) * values[i] + s * values[i + 1];
  }
};

enum class StabilityStatus { StableOnRadialClass, Unstable, Inconclusive };

inline std::string to_string(StabilityStatus s) {
  switch (s) {
    case StabilityStatus::StableOnRadialClass: return "StableOnRadialClass";
    case StabilityStatus::Unstable: return "Unstable";
    default: return "Inconclusive";
  }
}

/// Outcome of a finite-horizon radial stability scan. The verdict covers
/// radial perturbations only and is a bounded-horizon statement.
struct StabilityVerdict {
  StabilityStatus status = StabilityStatus::Inconclusive;
  std::optional<TestFunction> witness;  // negative-energy direction if Unstable
  std::vector<std::pair<double, double>> min_eigenvalue_trace;  // (R2, lambda1)
};

/// (N-2)^2/4 - c: nonnegative means the potential c/r^2 passes the
/// exterior-domain Hardy stability criterion; the constant (N-2)^2/4 is
/// optimal.
inline double hardy_margin(double c, Dimension n) {
  return sq(n.as_double() - 2.0) / 4.0 - c;
}

namespace detail {

// 4-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 4> kGaussX = {
    -0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
    0.8611363115940526};
inline constexpr std::array<double, 4> kGaussW = {
    0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
    0.3478548451374538};

template <typename F>
double gauss_segment(double a, double b, F&& f) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int g = 0; g < 4; ++g) {
    acc += kGaussW[g] * f(mid + half * kGaussX[g]);
  }
  return acc * half;
}

}  // namespace detail

/// Boundary handling for the annulus-form pencil. The admissible class is
/// free at R1 and zero at R2; the vanishing-product variant (used for
/// realization checks on profiles whose u_r does not vanish at the ends)
/// pins both ends.
enum class LeftEnd { Free, Zero };

/// P1 discretization of the annulus quadratic form
///   J(eta) = int r^{N-1} u_r^2 (eta'^2 - (N-1)/r^2 eta^2) dr
/// on m log-uniform elements: K carries the derivative weight r^{N-1} u_r^2,
/// P the potential weight (N-1) r^{N-3} u_r^2, B the mass weight
/// r^{N-1} u_r^2. The right node is always excluded (eta(R2) = 0).
struct AssembledPencil {
  TriMat stiffness;           // K
  TriMat potential;           // P
  TriMat mass;                // B
  std::vector<double> nodes;  // full mesh, m+1 nodes
  LeftEnd left = LeftEnd::Free;
  bool zero_form = false;     // u_r identically zero on the window

  std::size_t dof_count() const { return stiffness.size(); }
  std::size_t dof_node(std::size_t i) const {
    return i + (left == LeftEnd::Zero ? 1 : 0);
  }
};

namespace detail {

struct WeightSet {
  std::function<double(double)> stiffness;
  std::function<double(double)> potential;
  std::function<double(double)> mass;
};

inline AssembledPencil assemble_p1(const std::vector<double>& nodes,
                                   const WeightSet& w, LeftEnd left) {
  const std::size_t n = nodes.size();
  std::vector<double> kd(n, 0.0), ko(n - 1, 0.0);
  std::vector<double> pd(n, 0.0), po(n - 1, 0.0);
  std::vector<double> bd(n, 0.0), bo(n - 1, 0.0);

  for (std::size_t e = 0; e + 1 < n; ++e) {
    const double a = nodes[e], b = nodes[e + 1];
    const double h = b - a;
    const double mid = 0.5 * (a + b), half = 0.5 * h;
    for (int g = 0; g < 4; ++g) {
      const double r = mid + half * kGaussX[g];
      const double wq = kGaussW[g] * half;
      const double phiL = (b - r) / h, phiR = (r - a) / h;
      const double ks = wq * w.stiffness(r) / (h * h);
      kd[e] += ks;
      kd[e + 1] += ks;
      ko[e] -= ks;
      const double ps = wq * w.potential(r);
      pd[e] += ps * phiL * phiL;
      pd[e + 1] += ps * phiR * phiR;
      po[e] += ps * phiL * phiR;
      const double bs = wq * w.mass(r);
      bd[e] += bs * phiL * phiL;
      bd[e + 1] += bs * phiR * phiR;
      bo[e] += bs * phiL * phiR;
    }
  }

  // restrict to degrees of freedom: drop the right node, and the left node
  // under a zero left end
  const std::size_t lo = (left == LeftEnd::Zero) ? 1 : 0;
  const std::size_t hi = n - 1;  // exclusive
  auto restrict_mat = [&](const std::vector<double>& d,
                          const std::vector<double>& o) {
    TriMat m;
    m.diag.assign(d.begin() + static_cast<std::ptrdiff_t>(lo),
                  d.begin() + static_cast<std::ptrdiff_t>(hi));
    m.off.assign(o.begin() + static_cast<std::ptrdiff_t>(lo),
                 o.begin() + static_cast<std::ptrdiff_t>(hi) - 1);
    return m;
  };

  AssembledPencil out;
  out.stiffness = restrict_mat(kd, ko);
  out.potential = restrict_mat(pd, po);
  out.mass = restrict_mat(bd, bo);
  out.nodes = nodes;
  out.left = left;
  return out;
}

inline std::vector<double> log_uniform_nodes(double r1, double r2,
                                             std::size_t m) {
  std::vector<double> nodes(m + 1);
  const double t0 = std::log(r1), t1 = std::log(r2);
  for (std::size_t i = 0; i <= m; ++i) {
    nodes[i] =
        std::exp(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(m));
  }
  nodes.front() = r1;
  nodes.back() = r2;
  return nodes;
}

}  // namespace detail

/// Assemble the annulus-form pencil for a profile on m log-uniform elements.
inline AssembledPencil assemble_pencil(const RadialProfile& profile,
                                       Dimension n, const AnnulusWindow& window,
                                       std::size_t m,
                                       LeftEnd left = LeftEnd::Free) {
  if (m < 3) throw validation_error("assemble_pencil needs m >= 3");
  if (window.r1 < profile.grid.front() * (1.0 - 1e-12) ||
      window.r2 > profile.grid.back() * (1.0 + 1e-12)) {
    throw validation_error("annulus window outside the profile domain");
  }
  const double nd = n.as_double();
  const ProfileInterpolant interp(profile);
  auto ur2 = [&interp](double r) { return sq(interp.u_r(r)); };

  detail::WeightSet w{
      [&, nd](double r) { return std::pow(r, nd - 1.0) * ur2(r); },
      [&, nd](double r) { return (nd - 1.0) * std::pow(r, nd - 3.0) * ur2(r); },
      [&, nd](double r) { return std::pow(r, nd - 1.0) * ur2(r); }};

  auto nodes = detail::log_uniform_nodes(window.r1, window.r2, m);
  AssembledPencil out = detail::assemble_p1(nodes, w, left);

  double max_ur = 0.0;
  for (const double r : nodes) {
    max_ur = std::max(max_ur, std::abs(interp.u_r(r)));
  }
  out.zero_form = (max_ur == 0.0);
  return out;
}

/// The annulus form J evaluated on a concrete piecewise-linear eta by
/// composite Gauss quadrature per segment, with u_r interpolated from the
/// profile. Matches the assembled quadratic form eta^T (K - P) eta on shared
/// nodes by construction (same rule, same interpolant).
inline double reduced_form_J(const RadialProfile& profile, Dimension n,
                             const TestFunction& eta) {
  if (eta.window.r1 < profile.grid.front() * (1.0 - 1e-12) ||
      eta.window.r2 > profile.grid.back() * (1.0 + 1e-12)) {
    throw validation_error("test function window outside the profile domain");
  }
  const double nd = n.as_double();
  const ProfileInterpolant interp(profile);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < eta.nodes.size(); ++i) {
    const double a = eta.nodes[i], b = eta.nodes[i + 1];
    const double slope = (eta.values[i + 1] - eta.values[i]) / (b - a);
    acc += detail::gauss_segment(a, b, [&](double r) {
      const double w = std::pow(r, nd - 1.0) * sq(interp.u_r(r));
      const double ev = eta.values[i] + slope * (r - a);
      return w * (sq(slope) - (nd - 1.0) / (r * r) * sq(ev));
    });
  }
  return acc;
}

/// Discrete minimizer of the annulus form.
struct MinimizeResult {
  double lambda_min = 0.0;
  TestFunction eta_star;
};

/// Smallest eigenvalue of (K - P) x = lambda B x with eta(R2) = 0 enforced,
/// by Sturm-sequence bisection on the tridiagonal pencil; eta_star is the
/// corresponding eigenvector. A negative lambda_min exhibits an eta with
/// J(eta) < 0 in the discrete space.
inline MinimizeResult minimize_J(const RadialProfile& profile, Dimension n,
                                 const AnnulusWindow& window, std::size_t m,
                                 LeftEnd left = LeftEnd::Free,
                                 double eig_tol = 1e-10) {
  AssembledPencil pencil = assemble_pencil(profile, n, window, m, left);
  if (pencil.zero_form) {
    throw numerical_error(
        "minimize_J: u_r vanishes identically on the window (singular mass)");
  }
  TriMat a = pencil.stiffness;
  for (std::size_t i = 0; i < a.size(); ++i) a.diag[i] -= pencil.potential.diag[i];
  for (std::size_t i = 0; i + 1 < a.size(); ++i) a.off[i] -= pencil.potential.off[i];

  TriPencil eig(std::move(a), pencil.mass);
  const double lambda = eig.smallest_eigenvalue(eig_tol);
  const std::vector<double> x = eig.eigenvector(lambda);

  std::vector<double> values(pencil.nodes.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) values[pencil.dof_node(i)] = x[i];
  TestFunction eta(window, pencil.nodes, std::move(values));
  return {lambda, std::move(eta)};
}

enum class Side { HL, HS, Undetermined };

inline std::string to_string(Side s) {
  switch (s) {
    case Side::HL: return "HL";
    case Side::HS: return "HS";
    default: return "Undetermined";
  }
}

struct DecideSideResult {
  Side side = Side::Undetermined;
  bool zero_form = false;  // form identically zero (constant profile)
  struct WindowTrace {
    double r1;
    double r2;
    double lambda_min;
  };
  std::vector<WindowTrace> trace;
};

/// Default dyadic schedule for decide_side: R1 in {1, 2, 4, ..., 64}.
inline std::vector<double> default_r1_schedule() {
  return {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
}

/// Decide which side of the annulus-form dichotomy a profile sits on, over a
/// finite window schedule:
///   HS  -- every tested R1 admits a tested R2 with lambda_min < -side_tol;
///   HL  -- the smallest tested R1 has lambda_min >= -side_tol for every
///          tested R2.
/// The verdict is explicitly a finite-horizon approximation.
inline DecideSideResult decide_side(const RadialProfile& profile, Dimension n,
                                    std::vector<double> r1_schedule =
                                        default_r1_schedule(),
                                    double r2_growth = 2.0,
                                    std::size_t max_windows = 12,
                                    std::size_t m = 400) {
  if (!(r2_growth > 1.0)) throw validation_error("r2_growth must exceed 1");
  if (max_windows == 0) throw validation_error("max_windows must be positive");
  const double horizon = profile.horizon();

  DecideSideResult out;

  double max_ur = 0.0;
  for (const double v : profile.u_r) max_ur = std::max(max_ur, std::abs(v));
  if (max_ur == 0.0) {
    out.side = Side::HL;  // degenerate: the form is identically zero
    out.zero_form = true;
    return out;
  }

  std::sort(r1_schedule.begin(), r1_schedule.end());
  bool every_r1_negative = true;
  bool smallest_r1_clean = false;
  bool first_tested = true;

  for (const double r1 : r1_schedule) {
    if (!(r1 >= profile.grid.front()) || r1 * r2_growth > horizon) continue;
    bool has_negative = false;
    double r2 = r1;
    for (std::size_t k = 0; k < max_windows; ++k) {
      r2 *= r2_growth;
      if (r2 > horizon) r2 = horizon;
      const auto res = minimize_J(profile, n, AnnulusWindow(r1, r2), m);
      out.trace.push_back({r1, r2, res.lambda_min});
      if (res.lambda_min < -kSideTol) {
        has_negative = true;
        break;
      }
      if (r2 == horizon) break;
    }
    if (!has_negative) every_r1_negative = false;
    if (first_tested) {
      smallest_r1_clean = !has_negative;
      first_tested = false;
    }
  }

  if (first_tested) {
    throw validation_error("decide_side: no usable R1 in the schedule");
  }
  if (every_r1_negative) {
    out.side = Side::HS;
  } else if (smallest_r1_clean) {
    out.side = Side::HL;
  } else {
    out.side = Side::Undetermined;
  }
  return out;
}

namespace detail {

inline AssembledPencil schrodinger_pencil(const std::function<double(double)>& V,
                                          Dimension n,
                                          const AnnulusWindow& window,
                                          std::size_t m) {
  const double nd = n.as_double();
  detail::WeightSet w{
      [nd](double r) { return std::pow(r, nd - 1.0); },
      [nd, &V](double r) { return std::pow(r, nd - 1.0) * V(r); },
      [nd](double r) { return std::pow(r, nd - 1.0); }};
  auto nodes = detail::log_uniform_nodes(window.r1, window.r2, m);
  return detail::assemble_p1(nodes, w, LeftEnd::Zero);
}

}  // namespace detail

/// Smallest Dirichlet eigenvalue of -v'' - (N-1)/r v' - V v on the window,
/// in the r^{N-1}-weighted sense, resolved by Sturm bisection to 1e-8.
inline double principal_eigenvalue(const std::function<double(double)>& V,
                                   Dimension n, const AnnulusWindow& window,
                                   std::size_t m) {
  if (m < 3) throw validation_error("principal_eigenvalue needs m >= 3");
  AssembledPencil pencil = detail::schrodinger_pencil(V, n, window, m);
  TriMat a = pencil.stiffness;
  for (std::size_t i = 0; i < a.size(); ++i) a.diag[i] -= pencil.potential.diag[i];
  for (std::size_t i = 0; i + 1 < a.size(); ++i) a.off[i] -= pencil.potential.off[i];
  TriPencil eig(std::move(a), pencil.mass);
  return eig.smallest_eigenvalue(1e-8);
}

/// Radial Schrodinger form int r^{N-1} (w'^2 - V w^2) dr of a piecewise-linear
/// function, by the same per-segment Gauss rule as the assembly.
inline double schrodinger_form(const std::function<double(double)>& V,
                               Dimension n, const TestFunction& w) {
  const double nd = n.as_double();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < w.nodes.size(); ++i) {
    const double a = w.nodes[i], b = w.nodes[i + 1];
    const double slope = (w.values[i + 1] - w.values[i]) / (b - a);
    acc += detail::gauss_segment(a, b, [&](double r) {
      const double ev = w.values[i] + slope * (r - a);
      return std::pow(r, nd - 1.0) * (sq(slope) - V(r) * sq(ev));
    });
  }
  return acc;
}

/// Scan Dirichlet windows [1, R] for R in a geometric schedule up to the
/// horizon. Unstable (with a negative-energy witness) as soon as some
/// lambda_1 < -side_tol; otherwise StableOnRadialClass. lambda_1 is
/// non-increasing in R by domain monotonicity, which is asserted up to
/// side_tol of mesh drift. Radial perturbations only.
inline StabilityVerdict stability_scan(const std::function<double(double)>& V,
                                       Dimension n, double horizon,
                                       std::size_t m) {
  if (!(horizon > 1.0)) throw validation_error("scan horizon must exceed 1");
  if (m < 3) throw validation_error("stability_scan needs m >= 3");

  std::vector<double> schedule;
  for (double r = 2.0; r < horizon; r *= 2.0) schedule.push_back(r);
  if (schedule.empty() || schedule.back() < horizon) schedule.push_back(horizon);

  StabilityVerdict verdict;
  double prev = std::numeric_limits<double>::infinity();
  for (const double r2 : schedule) {
    const AnnulusWindow window(1.0, r2);
    AssembledPencil pencil = detail::schrodinger_pencil(V, n, window, m);
    TriMat a = pencil.stiffness;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.diag[i] -= pencil.potential.diag[i];
    }
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      a.off[i] -= pencil.potential.off[i];
    }
    TriPencil eig(std::move(a), pencil.mass);
    const double lambda = eig.smallest_eigenvalue(1e-8);
    verdict.min_eigenvalue_trace.emplace_back(r2, lambda);

    if (lambda > prev + kSideTol) {
      throw numerical_error("stability_scan: domain monotonicity violated");
    }
    prev = lambda;

    if (lambda < -kSideTol) {
      const std::vector<double> x = eig.eigenvector(lambda);
      std::vector<double> values(pencil.nodes.size(), 0.0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        values[pencil.dof_node(i)] = x[i];
      }
      TestFunction witness(window, pencil.nodes, std::move(values));
      if (!(schrodinger_form(V, n, witness) < 0.0)) {
        throw numerical_error(
            "stability_scan: witness fails to realize a negative form value");
      }
      verdict.status = StabilityStatus::Unstable;
      verdict.witness = std::move(witness);
      return verdict;
    }
  }
  verdict.status = StabilityStatus::StableOnRadialClass;
  return verdict;
}

/// End conditions matching the vanishing-product admissibility rule for a
/// given profile: an end is pinned unless u_r vanishes there.
inline LeftEnd vanishing_product_left_end(const RadialProfile& profile,
                                          const AnnulusWindow& window) {
  const ProfileInterpolant interp(profile);
  return interp.u_r(window.r1) == 0.0 ? LeftEnd::Free : LeftEnd::Zero;
}

}  // namespace radstab
