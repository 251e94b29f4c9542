#pragma once

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "liouville/liouville_core.hpp"

namespace liouville {

/// Squared semi-axes of the ellipsoid x0^2/a0 + x1^2/a1 + x2^2/a2 = 1.
/// Construction validates 0 < a0 < a1 < a2 with gaps above 1e-12 * a2.
class EllipsoidAxes {
 public:
  EllipsoidAxes(double a0, double a1, double a2);

  double a0() const { return a_[0]; }
  double a1() const { return a_[1]; }
  double a2() const { return a_[2]; }
  double operator[](int i) const { return a_[static_cast<std::size_t>(i)]; }
  const std::array<double, 3>& values() const { return a_; }

 private:
  std::array<double, 3> a_;
};

enum class BilliardKind { First, Second };

/// First type: lambda in (a0, a1), the table lies inside a one-sheet
/// hyperboloid. Second type: lambda in (a1, a2), two-sheet hyperboloid.
struct BilliardSelector {
  BilliardKind kind = BilliardKind::First;
  double lambda = 0.0;
};

/// Throws DomainError unless lambda lies strictly inside the interval of
/// `selector.kind`.
void validate_selector(const EllipsoidAxes& axes, const BilliardSelector& selector);

/// Open lambda interval (lo, hi) belonging to `kind`.
std::pair<double, double> lambda_interval(const EllipsoidAxes& axes, BilliardKind kind);

// ---------------------------------------------------------------------------
// Elliptic coordinates

/// Octant signs applied to (x0, x1, x2); each entry must be +1 or -1.
using OctantSigns = std::array<int, 3>;

/// Point of the ellipsoid with elliptic coordinates a0 <= u1 <= a1 <= u2 <= a2.
Eigen::Vector3d elliptic_to_cartesian(const EllipsoidAxes& axes, double u1, double u2,
                                      const OctantSigns& signs = {1, 1, 1});

/// Inverse of elliptic_to_cartesian up to octant: the two nonzero roots of
/// sum p_i^2 / (a_i - u) = 1. Throws DomainError for points off the surface.
std::pair<double, double> cartesian_to_elliptic(const EllipsoidAxes& axes,
                                                const Eigen::Vector3d& p);

// ---------------------------------------------------------------------------
// Chart

/// Liouville chart of the ellipsoid in a frame c0 < c1 < c2 with sign sigma.
/// The first-type frame is (a0, a1, a2) with sigma = +1; the second-type frame
/// is the reflection (-a2, -a1, -a0) with sigma = -1, in which the metric has
/// the same algebraic shape.
///
///   X(v) = int_{c1}^{v} sqrt(sigma s) / (2 sqrt((s - c0)(s - c1)(c2 - s))) ds
///   Y(v) = int_{v}^{c1} sqrt(sigma t) / (2 sqrt((t - c0)(c1 - t)(c2 - t))) dt
///
/// Both are evaluated after the substitutions v = c1 + (c2 - c1) sin^2(theta)
/// and v = c1 - (c1 - c0) sin^2(theta), which turn the integrands into smooth
/// functions of theta. The inverses use safeguarded Newton iteration in theta.
class EllipticChart {
 public:
  EllipticChart(const EllipsoidAxes& axes, BilliardKind frame);
  ~EllipticChart();
  EllipticChart(const EllipticChart&) = delete;
  EllipticChart& operator=(const EllipticChart&) = delete;

  const EllipsoidAxes& axes() const { return axes_; }
  BilliardKind frame() const { return frame_; }
  double c0() const { return c_[0]; }
  double c1() const { return c_[1]; }
  double c2() const { return c_[2]; }
  double sigma() const { return sigma_; }

  /// v in [c1, c2].
  double X(double v) const;
  /// v in [c0, c1].
  double Y(double v) const;

  double quarter_period_x() const;  // X(c2) = omega1 / 4
  double quarter_period_y() const;  // Y(c0) = omega2 / 4

  /// X^{-1} on [0, omega1/4], extended to an even function symmetric about
  /// omega1/4 (so f(0) = c1, f(omega1/4) = c2).
  double f(double x) const;
  /// Y^{-1}(|y|) for |y| <= omega2/4.
  double q(double y) const;

 private:
  class ThetaIntegral;

  EllipsoidAxes axes_;
  BilliardKind frame_;
  std::array<double, 3> c_;
  double sigma_;
  std::unique_ptr<ThetaIntegral> x_integral_;
  std::unique_ptr<ThetaIntegral> y_integral_;
};

/// X and Y of the first-type frame.
double chart_X(const EllipsoidAxes& axes, double u2);
double chart_Y(const EllipsoidAxes& axes, double u1);

/// Pointwise-evaluable profile (f, q) = (X^{-1}, Y^{-1}) in the frame of
/// `selector.kind`, with period omega1, base c1 and N = Y(lambda) (first
/// type) or N = Y(-lambda) (second type, reflected frame).
LiouvilleProfile chart_profile(const EllipsoidAxes& axes, const BilliardSelector& selector);

// ---------------------------------------------------------------------------
// Closed forms

TaylorData taylor_closed_form(const EllipsoidAxes& axes, BilliardKind kind);

/// dL/dI(0, lambda) from the single-integral formula in the original axes.
double rotation_closed_form(const EllipsoidAxes& axes, const BilliardSelector& selector);

/// d^2L/dI^2(0, lambda) from the single-integral formula in the original axes.
double twist_closed_form(const EllipsoidAxes& axes, const BilliardSelector& selector);

/// Limit of -dL/dI(0, lambda) at the far end of the lambda interval
/// (lambda -> a0+ for the first type, lambda -> a2- for the second). The
/// attained range of -rotation is the open interval (0, limit).
double rotation_endpoint_limit(const EllipsoidAxes& axes, BilliardKind kind);

struct SignCertificate {
  BilliardKind kind = BilliardKind::First;
  /// Zero of the factor 2 - kappa (a2 - t) (first type: t*) or
  /// 2 - kappa (s - a0) (second type: s*). Always below a1.
  double vanishing_point = 0.0;
  /// First type only: the twist integral over the whole interval (a0, a1),
  /// once by quadrature and once through complete elliptic integrals.
  double e1_quadrature = 0.0;
  double e1_elliptic = 0.0;
  double e1_relative_error = 0.0;
  double modulus = 0.0;  // k = sqrt(1 - a0 / a1)
  double zeta = 0.0;     // Z(k) > 0 bounds (a2/a0) E(k) - K(k) from below
  bool passed = false;
};

/// Throws CertificateError when an assertion of the sign analysis fails.
SignCertificate sign_certificate(const EllipsoidAxes& axes, BilliardKind kind,
                                 double relative_tolerance = 1e-8);

struct RotationBounds {
  /// 0 < -rotation < supremum on the whole interval.
  double supremum = 0.0;
  /// Second type only: lower bound for the limit of -rotation as lambda -> a2-.
  double right_limit_lower = 0.0;
  bool has_right_limit_lower = false;
};

RotationBounds rotation_bound(const EllipsoidAxes& axes, BilliardKind kind);

/// Selector for which -rotation hits `target`, where frac(target) belongs to
/// the resonance set {1/4, 1/3, 1/2, 2/3, 3/4} or target is an integer.
struct ExceptionalBilliard {
  double lambda = 0.0;
  double target = 0.0;  // value of -dL/dI(0, lambda)
  double rotation = 0.0;
  double residual = 0.0;  // |rotation + target|
  bool integer_resonance = false;
};

/// Every lambda of `kind` at which the table fails to be elliptic or
/// 4-elementary, sorted increasingly. Throws CertificateError if the sampled
/// rotation is not monotone or a root fails its residual check.
std::vector<ExceptionalBilliard> exceptional_lambdas(const EllipsoidAxes& axes,
                                                     BilliardKind kind,
                                                     double residual_tolerance = 1e-9);

struct TwistReport {
  EllipsoidAxes axes;
  BilliardSelector selector;
  TaylorData taylor;
  double rotation = 0.0;
  double twist = 0.0;
  FixedPointClass classification;
  RotationBounds bound;
  SignCertificate certificate;
};

/// Assembles the report and enforces 0 < -rotation < bound and the sign of
/// the twist (negative for the first type, positive for the second); a
/// violation raises CertificateError.
TwistReport full_report(const EllipsoidAxes& axes, const BilliardSelector& selector,
                        double resonance_tolerance = kResonanceTolerance,
                        double certificate_tolerance = 1e-8);

/// `count` Chebyshev points of (lo, hi) after shrinking both ends by
/// shrink * (hi - lo), in increasing order.
std::vector<double> certification_grid(double lo, double hi, int count = 50,
                                       double shrink = 1e-4);

}  // namespace liouville
