#include "liouville/liouville_core.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "liouville/errors.hpp"
#include "liouville/quadrature.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kValidationSamples = 32;
constexpr double kMorseThreshold = -1e-9;

// Base steps of the Richardson triplets (h, h/2, h/4), relative to 4 x0.
constexpr std::array<double, 5> kTaylorBases = {2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3};

void fail(const std::string& condition) {
  throw DomainError("invalid Liouville profile: " + condition);
}

// Two Richardson sweeps for an O(h^2) + O(h^4) error expansion, steps halving.
double richardson(const std::array<double, 3>& d) {
  const double r0 = (4.0 * d[1] - d[0]) / 3.0;
  const double r1 = (4.0 * d[2] - d[1]) / 3.0;
  return (16.0 * r1 - r0) / 15.0;
}

double peak_value(const LiouvilleProfile& profile) { return profile.f(profile.x0()); }

// Coarse triplets suffer truncation error and fine ones rounding noise. The
// finer member of the two neighbouring estimates that agree best is kept.
double best_estimate(const std::array<double, kTaylorBases.size()>& estimates) {
  std::size_t best = 1;
  double best_gap = std::abs(estimates[1] - estimates[0]);
  for (std::size_t j = 2; j < estimates.size(); ++j) {
    const double gap = std::abs(estimates[j] - estimates[j - 1]);
    if (gap < best_gap) {
      best_gap = gap;
      best = j;
    }
  }
  return estimates[best];
}

}  // namespace

TaylorData TaylorData::from_coefficients(double alpha0, double alpha1, double alpha2) {
  return {alpha0, alpha1, alpha2, 3.0 * alpha2 / (alpha1 * alpha1)};
}

void validate_profile(const LiouvilleProfile& p) {
  if (!p.f || !p.q) fail("profile functions are empty");
  if (!(std::isfinite(p.period) && p.period > 0.0)) fail("period must be positive");
  if (!(std::isfinite(p.half_width) && p.half_width > 0.0)) fail("N must be positive");

  const double peak = peak_value(p);
  const double scale = std::abs(peak - p.base);
  if (!(std::isfinite(peak) && scale > 0.0)) fail("f(x0) must exceed f(0)");
  const double tol = 1e-8 * std::max(1.0, scale);

  const double half_period = 0.5 * p.period;
  if (std::abs(p.f(0.0) - p.base) > tol || std::abs(p.f(half_period) - p.base) > tol) {
    fail("f must equal its base value at 0 and period/2");
  }
  for (int i = 1; i < kValidationSamples; ++i) {
    const double x = half_period * i / kValidationSamples;
    const double fx = p.f(x);
    if (!(fx > p.base)) fail("f must exceed its base value off half-periods");
    if (std::abs(p.f(-x) - fx) > tol) fail("f must be even");
    if (std::abs(p.f(half_period - x) - fx) > tol) {
      fail("f must be symmetric about x0 = period/4");
    }
  }

  const double n = p.half_width;
  if (std::abs(p.q(0.0) - p.base) > tol) fail("q(0) must equal the base value");
  for (int i = 1; i <= kValidationSamples; ++i) {
    const double y = n * i / kValidationSamples;
    const double qy = p.q(y);
    if (!(qy < p.base)) fail("q must be below its base value for y != 0");
    if (std::abs(p.q(-y) - qy) > tol) fail("q must be even");
  }
  const double hq = 1e-3 * n;
  const double q_curvature = (p.q(hq) - 2.0 * p.q(0.0) + p.q(-hq)) / (hq * hq);
  if (!(q_curvature < 0.0)) fail("q''(0) must be negative");

  const double hn = 1e-4 * n;
  if (!((p.q(n) - p.q(n - hn)) / hn < 0.0)) {
    fail("q'(N) must be negative (strict geodesic convexity)");
  }

  // Raises on a degenerate maximum.
  taylor_from_profile(p);
}

LiouvilleProfile model_profile() {
  LiouvilleProfile p;
  p.f = [](double x) {
    const double s = std::sin(2.0 * kPi * x);
    return s * s;
  };
  p.q = [](double y) { return -y * y; };
  p.period = 1.0;
  p.half_width = 1.0;
  p.base = 0.0;
  return p;
}

LiouvilleProfile rescaled_profile(const LiouvilleProfile& profile, double mu) {
  if (!(std::isfinite(mu) && mu > 0.0)) throw DomainError("rescaled_profile: mu must be > 0");
  const double inv2 = 1.0 / (mu * mu);
  LiouvilleProfile p;
  p.f = [f = profile.f, mu, inv2](double x) { return f(x / mu) * inv2; };
  p.q = [q = profile.q, mu, inv2](double y) { return q(y / mu) * inv2; };
  p.period = mu * profile.period;
  p.half_width = mu * profile.half_width;
  p.base = profile.base * inv2;
  return p;
}

TaylorData rescaled_taylor(const TaylorData& taylor, double mu) {
  if (!(std::isfinite(mu) && mu > 0.0)) throw DomainError("rescaled_taylor: mu must be > 0");
  const double m2 = mu * mu;
  return {taylor.alpha0 / m2, taylor.alpha1 / (m2 * m2), taylor.alpha2 / (m2 * m2 * m2),
          taylor.kappa * m2};
}

TaylorData taylor_from_profile(const LiouvilleProfile& p) {
  const double x0 = p.x0();
  const double f0 = p.f(x0);
  std::array<double, kTaylorBases.size()> second_estimates{};
  std::array<double, kTaylorBases.size()> fourth_estimates{};
  for (std::size_t j = 0; j < kTaylorBases.size(); ++j) {
    std::array<double, 3> second{};
    std::array<double, 3> fourth{};
    for (int i = 0; i < 3; ++i) {
      const double h = std::ldexp(kTaylorBases[j] * 4.0 * x0, -i);
      const double fp1 = p.f(x0 + h);
      const double fm1 = p.f(x0 - h);
      const double fp2 = p.f(x0 + 2.0 * h);
      const double fm2 = p.f(x0 - 2.0 * h);
      second[i] = (fp1 - 2.0 * f0 + fm1) / (h * h);
      fourth[i] = (fp2 - 4.0 * fp1 + 6.0 * f0 - 4.0 * fm1 + fm2) / (h * h * h * h);
    }
    second_estimates[j] = richardson(second);
    fourth_estimates[j] = richardson(fourth);
  }
  const double alpha1 = 0.5 * best_estimate(second_estimates);
  const double alpha2 = best_estimate(fourth_estimates) / 24.0;
  if (!(alpha1 < kMorseThreshold)) {
    throw DomainError("f has no Morse maximum at x0 (alpha1 = " +
                      std::to_string(alpha1) + ")");
  }
  return TaylorData::from_coefficients(f0, alpha1, alpha2);
}

double length_function(const LiouvilleProfile& p, double h) {
  const double peak = peak_value(p);
  if (!(h > p.base && h <= peak)) {
    throw DomainError("length_function: h outside (base, alpha0]");
  }
  const double n = p.half_width;
  auto integrand = [&](double y) { return std::sqrt(std::max(0.0, h - p.q(y))); };
  return 2.0 * integrate_singular(integrand, -n, n).value;
}

double action_function(const LiouvilleProfile& p, double h) {
  const double x0 = p.x0();
  const double peak = peak_value(p);
  if (!(h > p.base && h <= peak)) {
    throw DomainError("action_function: h outside (base, alpha0]");
  }
  if (h == peak) return 0.0;
  auto level = [&](double x) { return p.f(x) - h; };
  const double tol = 1e-15 * p.period;
  const double left = find_root_monotone(level, 0.0, x0, tol);
  const double right = find_root_monotone(level, x0, 0.5 * p.period, tol);
  if (!(left < right)) return 0.0;
  auto integrand = [&](double x) { return std::sqrt(std::max(0.0, p.f(x) - h)); };
  return 2.0 * integrate_singular(integrand, left, right).value;
}

ActionDerivatives action_derivatives_at_peak(const LiouvilleProfile& p) {
  constexpr int kSamples = 5;
  const double peak = peak_value(p);
  const double first_delta = 0.02 * (peak - p.base);
  Eigen::Matrix<double, kSamples, kSamples> vandermonde;
  Eigen::Matrix<double, kSamples, 1> ratios;
  for (int j = 0; j < kSamples; ++j) {
    const double delta = std::ldexp(first_delta, -j);
    ratios(j) = action_function(p, peak - delta) / delta;
    for (int k = 0; k < kSamples; ++k) vandermonde(j, k) = std::pow(delta, k);
  }
  // I(alpha0 - d) / d = -I'(alpha0) + I''(alpha0) d / 2 + O(d^2)
  const Eigen::Matrix<double, kSamples, 1> c = vandermonde.colPivHouseholderQr().solve(ratios);
  return {-c(0), 2.0 * c(1)};
}

double rotation_at_center(const LiouvilleProfile& p, const TaylorData& t) {
  const double n = p.half_width;
  auto integrand = [&](double y) { return 1.0 / std::sqrt(t.alpha0 - p.q(y)); };
  const double integral = integrate_singular(integrand, -n, n).value;
  return -std::sqrt(-t.alpha1) / kPi * integral;
}

double rotation_at_center(const LiouvilleProfile& p) {
  return rotation_at_center(p, taylor_from_profile(p));
}

double twist_at_center(const LiouvilleProfile& p, const TaylorData& t) {
  const double n = p.half_width;
  auto inverse_sqrt = [&](double y) { return 1.0 / std::sqrt(t.alpha0 - p.q(y)); };
  auto inverse_three_halves = [&](double y) {
    const double gap = t.alpha0 - p.q(y);
    return 1.0 / (gap * std::sqrt(gap));
  };
  const double first = integrate_singular(inverse_three_halves, -n, n).value;
  const double second = integrate_singular(inverse_sqrt, -n, n).value;
  return t.alpha1 / (4.0 * kPi * kPi) * (2.0 * first - t.kappa * second);
}

double twist_at_center(const LiouvilleProfile& p) {
  return twist_at_center(p, taylor_from_profile(p));
}

double fractional_part(double value) {
  const double frac = value - std::floor(value);
  return frac >= 1.0 ? 0.0 : frac;
}

FixedPointClass classify(double rotation, double twist, double tolerance) {
  FixedPointClass c;
  c.rotation = rotation;
  c.twist = twist;
  if (!(std::isfinite(rotation) && std::isfinite(twist))) return c;
  const double frac = fractional_part(rotation);
  c.is_elliptic = std::min(frac, 1.0 - frac) > tolerance;
  bool resonant = false;
  for (double r : {0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75}) {
    if (std::abs(frac - r) <= tolerance) resonant = true;
  }
  c.is_four_elementary = c.is_elliptic && !resonant;
  c.is_nondegenerate = std::abs(twist) > tolerance;
  return c;
}

}  // namespace liouville
