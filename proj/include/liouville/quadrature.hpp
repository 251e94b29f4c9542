#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>

#include "liouville/errors.hpp"

namespace liouville {

inline constexpr double kDefaultTolerance = 1e-12;

struct IntegralEstimate {
  double value = 0.0;
  double error_estimate = 0.0;  // indicator, not a bound
  std::size_t evaluations = 0;
  int levels = 0;
};

namespace detail {

/// Nodes of one tanh-sinh refinement level on the reference interval [-1, 1].
/// Only the nodes with t >= 0 are stored; the rule is symmetric. `complement`
/// holds 1 - x computed without cancellation so that integrands can be given
/// the exact distance to the endpoint.
struct TanhSinhLevel {
  std::span<const double> complement;
  std::span<const double> weight;
  bool has_center = false;  // level 0 contains t = 0
};

inline constexpr int kMaxLevel = 12;
inline constexpr int kMinConvergedLevel = 4;

/// Cached abscissas/weights; built once on first use, read-only afterwards.
TanhSinhLevel tanh_sinh_level(int level);

/// Step of level `level` in the t variable.
inline double tanh_sinh_step(int level) { return std::ldexp(1.0, -level); }

}  // namespace detail

/// Double-exponential (tanh-sinh) quadrature of f over [a, b], tolerant of
/// integrable inverse-square-root singularities at either endpoint.
///
/// The integrand may be given in one of two forms:
///   - f(x): nodes that round onto an endpoint are moved to the adjacent
///     representable number inside (a, b). Singularities sitting at a nonzero
///     endpoint then cost roughly sqrt(ulp) of accuracy.
///   - f(x, dist_a, dist_b): additionally receives x - a and b - x computed
///     without cancellation, which resolves endpoint singularities to full
///     precision. Prefer this form for singular integrands.
///
/// Refinement halves the step until two successive levels agree within
/// tol * (1 + |value|); at most 12 levels are tried before ConvergenceError.
/// A non-finite integrand value away from the endpoints raises DomainError.
template <class F>
IntegralEstimate integrate_singular(F&& f, double a, double b,
                                    double tol = kDefaultTolerance);

/// Root of a continuous monotone g on [lo, hi] with g(lo) g(hi) <= 0.
/// Bisection safeguarding secant steps; stops when g vanishes, the bracket is
/// narrower than tol, or no representable point remains inside the bracket.
template <class G>
double find_root_monotone(G&& g, double lo, double hi, double tol);

// ---------------------------------------------------------------------------

template <class F>
IntegralEstimate integrate_singular(F&& f, double a, double b, double tol) {
  if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
    throw DomainError("integrate_singular: need finite a < b");
  }
  if (!(tol > 0.0)) throw DomainError("integrate_singular: tol must be > 0");

  constexpr bool kDistanceAware =
      std::is_invocable_r_v<double, F&, double, double, double>;
  static_assert(kDistanceAware || std::is_invocable_r_v<double, F&, double>,
                "integrand must be callable as f(x) or f(x, x - a, b - x)");

  const double half = 0.5 * (b - a);
  const double center = a + half;
  // Non-finite values are tolerated only this close to an endpoint.
  const double finite_zone = 64.0 * std::numeric_limits<double>::epsilon() * (b - a);

  std::size_t evaluations = 0;
  auto eval = [&](double x, double da, double db) -> double {
    double y;
    if constexpr (kDistanceAware) {
      if (da <= 0.0 || db <= 0.0) return 0.0;
      y = f(x, da, db);
    } else {
      if (!(x > a)) x = std::nextafter(a, b);
      if (!(x < b)) x = std::nextafter(b, a);
      y = f(x);
    }
    ++evaluations;
    if (!std::isfinite(y)) {
      if (std::min(da, db) < finite_zone) return 0.0;
      throw DomainError("integrate_singular: integrand not finite at x = " +
                        std::to_string(x));
    }
    return y;
  };

  double sum = 0.0;
  double previous = 0.0;
  double current = 0.0;
  double error = std::numeric_limits<double>::infinity();
  for (int level = 0; level <= detail::kMaxLevel; ++level) {
    const detail::TanhSinhLevel nodes = detail::tanh_sinh_level(level);
    for (std::size_t i = 0; i < nodes.weight.size(); ++i) {
      const double w = nodes.weight[i];
      if (nodes.has_center && i == 0) {
        sum += w * eval(center, half, half);
        continue;
      }
      const double d = half * nodes.complement[i];  // distance to endpoint
      const double far = (b - a) - d;
      sum += w * (eval(b - d, far, d) + eval(a + d, d, far));
    }
    current = half * detail::tanh_sinh_step(level) * sum;
    if (level > 0) error = std::abs(current - previous);
    if (level >= detail::kMinConvergedLevel &&
        error <= tol * (1.0 + std::abs(current))) {
      return {current, error, evaluations, level};
    }
    previous = current;
  }
  throw ConvergenceError("integrate_singular: no convergence on [" +
                         std::to_string(a) + ", " + std::to_string(b) +
                         "], last change " + std::to_string(error));
}

template <class G>
double find_root_monotone(G&& g, double lo, double hi, double tol) {
  if (!(lo <= hi)) std::swap(lo, hi);
  double glo = g(lo);
  double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (!(std::isfinite(glo) && std::isfinite(ghi)) || (glo > 0.0) == (ghi > 0.0)) {
    throw BracketError("find_root_monotone: no sign change on [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  constexpr int kMaxIterations = 300;
  double last_width = hi - lo;
  bool force_bisection = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double width = hi - lo;
    if (width <= tol) break;
    double x;
    if (force_bisection) {
      x = lo + 0.5 * width;
    } else {
      x = hi - ghi * (hi - lo) / (ghi - glo);
      if (!(x > lo && x < hi)) x = lo + 0.5 * width;
    }
    if (!(x > lo && x < hi)) break;  // bracket exhausted at double precision
    const double gx = g(x);
    if (gx == 0.0) return x;
    if ((gx > 0.0) == (glo > 0.0)) {
      lo = x;
      glo = gx;
    } else {
      hi = x;
      ghi = gx;
    }
    // Fall back to bisection whenever a step fails to halve the bracket.
    force_bisection = (hi - lo) > 0.5 * last_width;
    last_width = hi - lo;
  }
  return std::abs(glo) <= std::abs(ghi) ? lo : hi;
}

}  // namespace liouville
