#pragma once

#include <functional>

namespace liouville {

using RealFunction = std::function<double(double)>;

/// Profile pair (f, q) of a Liouville table of classical type, i.e. the metric
/// (f(x) - q(y)) (dx^2 + dy^2) on the cylinder (R / period Z) x [-N, N].
///
/// `base` is the common value f(0) = f(period/2) = q(0). Profiles coming from
/// the ellipsoid chart take f(0) = a1 rather than 0; only differences f - q
/// and alpha0 - q enter the invariants, so the level is carried explicitly.
///
/// Both callables must be safe to invoke concurrently.
struct LiouvilleProfile {
  RealFunction f;
  RealFunction q;
  double period = 1.0;
  double half_width = 1.0;  // N
  double base = 0.0;

  double x0() const { return 0.25 * period; }
};

/// Coefficients of f(x) = alpha0 + alpha1 (x - x0)^2 + alpha2 (x - x0)^4 + ...
struct TaylorData {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double kappa = 0.0;  // 3 alpha2 / alpha1^2

  static TaylorData from_coefficients(double alpha0, double alpha1, double alpha2);
};

struct FixedPointClass {
  double rotation = 0.0;
  double twist = 0.0;
  bool is_elliptic = false;
  bool is_four_elementary = false;
  bool is_nondegenerate = false;
};

inline constexpr double kResonanceTolerance = 1e-9;

/// Checks on a sample grid that f is even, symmetric about x0 and above its
/// base value off the half-periods; that q is even with q < base away from 0,
/// q''(0) < 0 and q'(N) < 0; and that f has a Morse maximum at x0. Throws
/// DomainError naming the first violation. Compatibility of the Taylor
/// expansions at the branch points is not checked.
void validate_profile(const LiouvilleProfile& profile);

/// f = sin^2(2 pi x), q = -y^2, N = 1.
LiouvilleProfile model_profile();

/// Same table in the coordinates (mu x, mu y): f_mu(x) = f(x / mu) / mu^2,
/// q_mu(y) = q(y / mu) / mu^2, period mu * period, N_mu = mu N.
LiouvilleProfile rescaled_profile(const LiouvilleProfile& profile, double mu);

/// Taylor data of the rescaled profile, transformed exactly:
/// alpha_j -> alpha_j / mu^(2 + 2j), kappa -> mu^2 kappa.
TaylorData rescaled_taylor(const TaylorData& taylor, double mu);

/// alpha0 = f(x0); alpha1 and alpha2 from Richardson-extrapolated central
/// differences. Several step triplets (h, h/2, h/4) are tried with h a fixed
/// fraction of x0, from 8e-2 x0 down to 1.25e-3 x0, and the estimate that agrees
/// best with its coarser neighbour is kept. Throws DomainError when
/// alpha1 >= -1e-9 (no Morse maximum).
TaylorData taylor_from_profile(const LiouvilleProfile& profile);

/// L(h) = 2 int_{-N}^{N} sqrt(h - q(y)) dy, for base < h <= alpha0.
double length_function(const LiouvilleProfile& profile, double h);

/// I(h) = 2 int_{x'}^{x''} sqrt(f(x) - h) dx where x' <= x0 <= x'' solve
/// f(x) = h. Exactly 0 at h = alpha0.
double action_function(const LiouvilleProfile& profile, double h);

struct ActionDerivatives {
  double first = 0.0;   // dI/dh at alpha0
  double second = 0.0;  // d^2I/dh^2 at alpha0
};

/// One-sided estimate of the derivatives of I at h = alpha0: I is sampled at
/// h = alpha0 - delta for geometrically shrinking delta and I / delta is
/// extrapolated polynomially to delta = 0.
ActionDerivatives action_derivatives_at_peak(const LiouvilleProfile& profile);

/// dL/dI(0) = -(sqrt(-alpha1) / pi) int_{-N}^{N} dy / sqrt(alpha0 - q(y)).
double rotation_at_center(const LiouvilleProfile& profile, const TaylorData& taylor);
double rotation_at_center(const LiouvilleProfile& profile);

/// d^2L/dI^2(0) = alpha1 / (4 pi^2) * ( 2 int (alpha0 - q)^(-3/2) dy
///                                      - kappa int (alpha0 - q)^(-1/2) dy ).
double twist_at_center(const LiouvilleProfile& profile, const TaylorData& taylor);
double twist_at_center(const LiouvilleProfile& profile);

/// Fractional part in [0, 1).
double fractional_part(double value);

FixedPointClass classify(double rotation, double twist,
                         double tolerance = kResonanceTolerance);

}  // namespace liouville
