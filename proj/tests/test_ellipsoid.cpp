#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/special_functions/ellint_2.hpp>
#include <gtest/gtest.h>

#include "liouville/ellipsoid.hpp"
#include "liouville/errors.hpp"
#include "liouville/quadrature.hpp"

namespace {

using namespace liouville;

constexpr double kPi = std::numbers::pi;
constexpr BilliardKind kFirst = BilliardKind::First;
constexpr BilliardKind kSecond = BilliardKind::Second;

const EllipsoidAxes kAxes(1.0, 2.0, 3.0);

// Boost tanh-sinh on the original single-integral forms. The integrand gets
// the complement distance to the singular endpoint a1 from Boost's two-argument
// interface, so nothing is shared with the library's own evaluation.
struct ClosedFormOracle {
  EllipsoidAxes axes;
  BilliardKind kind;

  double alpha1() const {
    const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
    return kind == kFirst ? -(a2 - a0) * (a2 - a1) / a2 : -(a2 - a0) * (a1 - a0) / a0;
  }
  double kappa() const {
    const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
    return kind == kFirst ? (a2 * a2 - a0 * a1) / (a2 * (a2 - a0) * (a2 - a1))
                          : (a2 * a1 - a0 * a0) / (a0 * (a2 - a0) * (a1 - a0));
  }

  // weight(t) multiplies the rotation integrand.
  template <class W>
  double integral(double lambda, W weight) const {
    const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
    boost::math::quadrature::tanh_sinh<double> ts;
    if (kind == kFirst) {
      // over [lambda, a1]; singular at a1
      auto f = [&](double t, double tc) {
        const double to_a1 = tc > 0 ? tc : a1 - t;
        return std::sqrt(t) / (std::sqrt((t - a0) * to_a1) * (a2 - t)) * weight(t);
      };
      return ts.integrate(f, lambda, a1, 1e-14);
    }
    auto f = [&](double s, double sc) {
      const double from_a1 = sc < 0 ? -sc : s - a1;
      return std::sqrt(s) / (std::sqrt((a2 - s) * from_a1) * (s - a0)) * weight(s);
    };
    return ts.integrate(f, a1, lambda, 1e-14);
  }

  double rotation(double lambda) const {
    return -(std::sqrt(-alpha1()) / kPi) * integral(lambda, [](double) { return 1.0; });
  }
  double twist(double lambda) const {
    const double a0 = axes.a0(), a2 = axes.a2(), k = kappa();
    const bool first = kind == kFirst;
    return alpha1() / (4.0 * kPi * kPi) * integral(lambda, [&](double t) {
             const double d = first ? a2 - t : t - a0;
             return (2.0 - k * d) / d;
           });
  }
};

// ---------------------------------------------------------------------------

TEST(Axes, Validation) {
  EXPECT_NO_THROW(EllipsoidAxes(1, 2, 3));
  EXPECT_THROW(EllipsoidAxes(0, 2, 3), DomainError);
  EXPECT_THROW(EllipsoidAxes(2, 1, 3), DomainError);
  EXPECT_THROW(EllipsoidAxes(1, 1, 3), DomainError);
  EXPECT_THROW(EllipsoidAxes(1, 2, INFINITY), DomainError);
  EXPECT_DOUBLE_EQ(kAxes[2], 3.0);
}

TEST(Selector, IntervalsAndValidation) {
  EXPECT_EQ(lambda_interval(kAxes, kFirst), std::make_pair(1.0, 2.0));
  EXPECT_EQ(lambda_interval(kAxes, kSecond), std::make_pair(2.0, 3.0));
  EXPECT_NO_THROW(validate_selector(kAxes, {kFirst, 1.5}));
  EXPECT_THROW(validate_selector(kAxes, {kFirst, 2.0}), DomainError);
  EXPECT_THROW(validate_selector(kAxes, {kSecond, 2.0}), DomainError);
  EXPECT_THROW(validate_selector(kAxes, {kSecond, NAN}), DomainError);
}

TEST(EllipticCoordinates, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double u1 = 1.0 + unit(rng);
    const double u2 = 2.0 + unit(rng);
    const OctantSigns signs{unit(rng) < 0.5 ? 1 : -1, unit(rng) < 0.5 ? 1 : -1, 1};
    const Eigen::Vector3d p = elliptic_to_cartesian(kAxes, u1, u2, signs);
    EXPECT_NEAR(p.cwiseProduct(p).dot(Eigen::Vector3d(1.0, 0.5, 1.0 / 3.0)), 1.0, 1e-14);
    const auto [v1, v2] = cartesian_to_elliptic(kAxes, p);
    EXPECT_NEAR(v1, u1, 1e-11);
    EXPECT_NEAR(v2, u2, 1e-11);
  }
}

TEST(EllipticCoordinates, ConfocalQuadricThroughPoint) {
  // The coordinate surfaces are the confocal quadrics sum x_i^2 / (a_i - u) = 1.
  const Eigen::Vector3d p = elliptic_to_cartesian(kAxes, 1.3, 2.6);
  for (double u : {1.3, 2.6}) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += p[i] * p[i] / (kAxes[i] - u);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(cartesian_to_elliptic(kAxes, Eigen::Vector3d(2.0, 0.0, 0.0)), DomainError);
}

TEST(Chart, XAndYMatchSingularQuadrature) {
  const double a0 = 1.0, a1 = 2.0, a2 = 3.0;
  for (double v : {2.1, 2.5, 2.9, 3.0}) {
    const double oracle =
        integrate_singular(
            [&](double s, double da, double db) {
              const double to_a2 = v == a2 ? db : a2 - s;
              return std::sqrt(s) / (2.0 * std::sqrt((s - a0) * da * to_a2));
            },
            a1, v)
            .value;
    EXPECT_NEAR(chart_X(kAxes, v), oracle, 1e-11) << "v = " << v;
  }
  for (double v : {1.9, 1.5, 1.1, 1.0}) {
    const double oracle =
        integrate_singular(
            [&](double t, double da, double db) {
              const double from_a0 = v == a0 ? da : t - a0;
              return std::sqrt(t) / (2.0 * std::sqrt(from_a0 * db * (a2 - t)));
            },
            v, a1)
            .value;
    EXPECT_NEAR(chart_Y(kAxes, v), oracle, 1e-11) << "v = " << v;
  }
}

TEST(Chart, InversesAndSymmetry) {
  for (BilliardKind frame : {kFirst, kSecond}) {
    const EllipticChart chart(kAxes, frame);
    const double qx = chart.quarter_period_x();
    const double qy = chart.quarter_period_y();
    EXPECT_NEAR(chart.f(0.0), chart.c1(), 1e-14);
    EXPECT_NEAR(chart.f(qx), chart.c2(), 1e-12);
    EXPECT_NEAR(chart.q(qy), chart.c0(), 1e-12);
    for (int i = 1; i < 10; ++i) {
      const double v = chart.c1() + (chart.c2() - chart.c1()) * i / 10.0;
      EXPECT_NEAR(chart.f(chart.X(v)), v, 1e-12);
      const double w = chart.c1() - (chart.c1() - chart.c0()) * i / 10.0;
      EXPECT_NEAR(chart.q(chart.Y(w)), w, 1e-12);
      const double x = qx * i / 10.0;
      EXPECT_NEAR(chart.f(-x), chart.f(x), 1e-13);
      EXPECT_NEAR(chart.f(2.0 * qx - x), chart.f(x), 1e-12);
      EXPECT_NEAR(chart.q(-x * qy / qx), chart.q(x * qy / qx), 1e-13);
    }
  }
}

TEST(Chart, ProfilePassesValidation) {
  EXPECT_NO_THROW(validate_profile(chart_profile(kAxes, {kFirst, 1.5})));
  EXPECT_NO_THROW(validate_profile(chart_profile(kAxes, {kSecond, 2.5})));
}

TEST(Taylor, ClosedFormsForReferenceAxes) {
  const TaylorData first = taylor_closed_form(kAxes, kFirst);
  EXPECT_DOUBLE_EQ(first.alpha0, 3.0);
  EXPECT_DOUBLE_EQ(first.alpha1, -2.0 / 3.0);
  EXPECT_DOUBLE_EQ(first.alpha2, 14.0 / 81.0);
  EXPECT_DOUBLE_EQ(first.kappa, 7.0 / 6.0);
  const TaylorData second = taylor_closed_form(kAxes, kSecond);
  EXPECT_DOUBLE_EQ(second.alpha0, -1.0);
  EXPECT_DOUBLE_EQ(second.alpha1, -2.0);
  EXPECT_DOUBLE_EQ(second.alpha2, 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(second.kappa, 2.5);
}

TEST(Taylor, FiniteDifferencesOnInvertedChart) {
  for (const BilliardSelector sel : {BilliardSelector{kFirst, 1.5}, BilliardSelector{kSecond, 2.5}}) {
    const TaylorData closed = taylor_closed_form(kAxes, sel.kind);
    const TaylorData numeric = taylor_from_profile(chart_profile(kAxes, sel));
    EXPECT_NEAR(numeric.alpha0, closed.alpha0, 1e-5);
    EXPECT_NEAR(numeric.alpha1, closed.alpha1, 1e-5);
    EXPECT_NEAR(numeric.alpha2, closed.alpha2, 1e-5);
    EXPECT_NEAR(numeric.kappa, closed.kappa, 1e-5);
  }
}

TEST(ClosedForms, AgreeWithBoostOracle) {
  for (const auto& axes : {EllipsoidAxes(1, 2, 3), EllipsoidAxes(1, 1.1, 20), EllipsoidAxes(1, 2, 100)}) {
    for (BilliardKind kind : {kFirst, kSecond}) {
      const ClosedFormOracle oracle{axes, kind};
      const auto [lo, hi] = lambda_interval(axes, kind);
      for (double t : {0.1, 0.5, 0.9}) {
        const BilliardSelector sel{kind, lo + t * (hi - lo)};
        EXPECT_NEAR(rotation_closed_form(axes, sel), oracle.rotation(sel.lambda), 1e-9);
        EXPECT_NEAR(twist_closed_form(axes, sel), oracle.twist(sel.lambda), 1e-9);
      }
    }
  }
}

TEST(ClosedForms, ReferenceValuesAndSigns) {
  EXPECT_LT(twist_closed_form(kAxes, {kFirst, 1.5}), 0.0);
  EXPECT_GT(twist_closed_form(kAxes, {kSecond, 2.5}), 0.0);
  EXPECT_NEAR(rotation_closed_form(kAxes, {kFirst, 1.5}), -0.475546263371, 1e-11);
  EXPECT_NEAR(rotation_closed_form(kAxes, {kSecond, 2.5}), -0.893863908345, 1e-11);
}

TEST(CrossPath, GenericFormulasOnChartProfiles) {
  const std::vector<std::pair<EllipsoidAxes, BilliardSelector>> cases{
      {kAxes, {kFirst, 1.2}},    {kAxes, {kFirst, 1.5}},
      {kAxes, {kFirst, 1.8}},    {kAxes, {kSecond, 2.2}},
      {kAxes, {kSecond, 2.5}},   {kAxes, {kSecond, 2.8}},
      {EllipsoidAxes(1, 1.1, 20), {kFirst, 1.05}},
      {EllipsoidAxes(1, 1.1, 20), {kSecond, 10.0}},
      {EllipsoidAxes(1, 2, 100), {kFirst, 1.5}},
      {EllipsoidAxes(1, 2, 100), {kSecond, 50.0}}};
  for (const auto& [axes, sel] : cases) {
    const LiouvilleProfile profile = chart_profile(axes, sel);
    const TaylorData taylor = taylor_closed_form(axes, sel.kind);
    EXPECT_NEAR(rotation_at_center(profile, taylor), rotation_closed_form(axes, sel), 1e-6);
    EXPECT_NEAR(twist_at_center(profile, taylor), twist_closed_form(axes, sel), 1e-6);
  }
}

TEST(Certificate, ReferenceAxes) {
  const SignCertificate first = sign_certificate(kAxes, kFirst);
  EXPECT_NEAR(first.vanishing_point, 9.0 / 7.0, 1e-14);
  EXPECT_TRUE(first.passed);
  EXPECT_GT(first.zeta, 0.0);
  // E1 = 2 a0 sqrt(a1) / (a2 (a2 - a0)(a2 - a1)) * ((a2 / a0) E(k) - K(k)).
  const double k = std::sqrt(0.5);
  const double e1 = 2.0 * std::sqrt(2.0) / (3.0 * 2.0 * 1.0) *
                    (3.0 * boost::math::ellint_2(k) - boost::math::ellint_1(k));
  EXPECT_NEAR(first.e1_elliptic, e1, 1e-13);
  EXPECT_NEAR(first.e1_quadrature / e1, 1.0, 1e-8);

  const SignCertificate second = sign_certificate(kAxes, kSecond);
  EXPECT_NEAR(second.vanishing_point, 1.8, 1e-14);
  EXPECT_TRUE(second.passed);
}

TEST(Certificate, FirstTypeE1OnSeveralAxes) {
  for (const auto& axes : {EllipsoidAxes(1, 2, 3), EllipsoidAxes(1, 1.1, 20), EllipsoidAxes(1, 2, 100),
                           EllipsoidAxes(1, 3, 5), EllipsoidAxes(2, 5, 11)}) {
    const SignCertificate c = sign_certificate(axes, kFirst);
    EXPECT_LT(c.e1_relative_error, 1e-8);
    EXPECT_GT(c.e1_elliptic, 0.0);
  }
}

// s* < a1 is equivalent to a2 (2 a0 - a1) < a0^2. When it fails the factor
// 2 - kappa (s - a0) is positive on (a1, s*) and the twist of the second type
// is negative for lambda slightly above a1.
bool second_type_certifiable(const EllipsoidAxes& axes) {
  return axes.a2() * (2.0 * axes.a0() - axes.a1()) < axes.a0() * axes.a0();
}

TEST(Certificate, SecondTypeFailsWhenVanishingPointExceedsA1) {
  const EllipsoidAxes axes(1, 1.1, 20);
  ASSERT_FALSE(second_type_certifiable(axes));
  EXPECT_THROW(sign_certificate(axes, kSecond), CertificateError);
  EXPECT_LT(twist_closed_form(axes, {kSecond, 1.5}), 0.0);
  EXPECT_GT(twist_closed_form(axes, {kSecond, 15.0}), 0.0);
  EXPECT_THROW(full_report(axes, {kSecond, 1.5}), CertificateError);
}

TEST(SignProperty, RandomAxes) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int uncertifiable = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double a1 = 1.05 + 3.0 * unit(rng);
    const double a2 = a1 + 0.05 + 40.0 * unit(rng) * unit(rng);
    const EllipsoidAxes axes(1.0, a1, a2);
    for (BilliardKind kind : {kFirst, kSecond}) {
      const auto [lo, hi] = lambda_interval(axes, kind);
      const bool expect_sign = kind == kFirst || second_type_certifiable(axes);
      if (!expect_sign) {
        ++uncertifiable;
        EXPECT_THROW(sign_certificate(axes, kind), CertificateError);
        continue;
      }
      EXPECT_TRUE(sign_certificate(axes, kind).passed);
      for (double lambda : certification_grid(lo, hi, 12)) {
        const double w = twist_closed_form(axes, {kind, lambda});
        if (kind == kFirst) {
          EXPECT_LT(w, 0.0) << a1 << ' ' << a2 << ' ' << lambda;
        } else {
          EXPECT_GT(w, 0.0) << a1 << ' ' << a2 << ' ' << lambda;
        }
      }
    }
  }
  EXPECT_GT(uncertifiable, 0);  // the sample covers both regimes
}

class RotationProperties : public ::testing::TestWithParam<std::array<double, 3>> {};

TEST_P(RotationProperties, MonotoneBoundedAndVanishingAtA1) {
  const auto [a0, a1, a2] = GetParam();
  const EllipsoidAxes axes(a0, a1, a2);
  for (BilliardKind kind : {kFirst, kSecond}) {
    const auto [lo, hi] = lambda_interval(axes, kind);
    const RotationBounds bound = rotation_bound(axes, kind);
    double previous = NAN;
    for (double lambda : certification_grid(lo, hi)) {
      const double r = -rotation_closed_form(axes, {kind, lambda});
      EXPECT_GT(r, 0.0);
      EXPECT_LT(r, bound.supremum);
      if (!std::isnan(previous)) {
        if (kind == kFirst) {
          EXPECT_LT(r, previous);
        } else {
          EXPECT_GT(r, previous);
        }
      }
      previous = r;
    }
    const double near = kind == kFirst ? a1 - 1e-8 : a1 + 1e-8;
    EXPECT_LT(-rotation_closed_form(axes, {kind, near}), 1e-3);
    EXPECT_LT(rotation_endpoint_limit(axes, kind), bound.supremum);
    if (kind == kSecond) {
      EXPECT_GT(-rotation_closed_form(axes, {kind, a2 - 1e-6}), bound.right_limit_lower - 1e-3);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Axes, RotationProperties,
                         ::testing::Values(std::array<double, 3>{1, 2, 3},
                                           std::array<double, 3>{1, 1.1, 20},
                                           std::array<double, 3>{1, 2, 100},
                                           std::array<double, 3>{1, 3, 5},
                                           std::array<double, 3>{2, 5, 11}),
                         [](const auto& info) { return "Triple" + std::to_string(info.index); });

TEST(Bounds, ReferenceValues) {
  EXPECT_NEAR(rotation_bound(kAxes, kFirst).supremum, std::sqrt(2.0 / 3.0), 1e-15);
  const RotationBounds second = rotation_bound(kAxes, kSecond);
  EXPECT_NEAR(second.supremum, std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(second.right_limit_lower, 1.0, 1e-15);
  EXPECT_FALSE(rotation_bound(kAxes, kFirst).has_right_limit_lower);
}

TEST(Bounds, EndpointLimitIsApproached) {
  for (BilliardKind kind : {kFirst, kSecond}) {
    const auto [lo, hi] = lambda_interval(kAxes, kind);
    const double far = kind == kFirst ? lo + 1e-9 : hi - 1e-9;
    EXPECT_NEAR(-rotation_closed_form(kAxes, {kind, far}), rotation_endpoint_limit(kAxes, kind), 1e-3);
  }
}

TEST(Exceptional, EmptyForNarrowFirstType) {
  EXPECT_TRUE(exceptional_lambdas(EllipsoidAxes(1, 1.1, 20), kFirst).empty());
}

TEST(Exceptional, ReferenceAxesFirstType) {
  const auto roots = exceptional_lambdas(kAxes, kFirst);
  ASSERT_LE(roots.size(), 5u);
  ASSERT_EQ(roots.size(), 4u);
  const double targets[] = {2.0 / 3.0, 0.5, 1.0 / 3.0, 0.25};  // -rotation decreases
  for (std::size_t i = 0; i < roots.size(); ++i) {
    EXPECT_NEAR(roots[i].target, targets[i], 1e-15);
    EXPECT_LT(roots[i].residual, 1e-9);
    EXPECT_LT(std::abs(rotation_closed_form(kAxes, {kFirst, roots[i].lambda}) + roots[i].target),
              1e-9);
    EXPECT_FALSE(classify(roots[i].rotation, -1.0, 1e-9).is_four_elementary);
    if (i > 0) {
      EXPECT_LT(roots[i - 1].lambda, roots[i].lambda);
    }
  }
}

TEST(Exceptional, SecondTypeIntegerResonance) {
  ASSERT_GT(rotation_bound(kAxes, kSecond).supremum, 2.0);
  const auto roots = exceptional_lambdas(kAxes, kSecond);
  int integers = 0;
  for (const auto& r : roots) {
    EXPECT_LT(r.residual, 1e-9);
    if (r.integer_resonance) {
      ++integers;
      EXPECT_DOUBLE_EQ(r.target, 1.0);
      EXPECT_FALSE(classify(r.rotation, 1.0, 1e-9).is_elliptic);
    }
  }
  EXPECT_EQ(integers, 1);
  // Targets below the endpoint limit only.
  for (const auto& r : roots) EXPECT_LT(r.target, rotation_endpoint_limit(kAxes, kSecond));
}

TEST(Report, AssemblesAllPieces) {
  const TwistReport r = full_report(kAxes, {kSecond, 2.5});
  EXPECT_GT(r.twist, 0.0);
  EXPECT_NEAR(r.bound.supremum, std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(r.certificate.vanishing_point, 1.8, 1e-14);
  EXPECT_TRUE(r.classification.is_elliptic);
  EXPECT_DOUBLE_EQ(r.taylor.kappa, 2.5);
  EXPECT_THROW(full_report(kAxes, {kFirst, 2.5}), DomainError);
}

TEST(Grid, ChebyshevPointsInsideInterval) {
  const auto g = certification_grid(1.0, 2.0);
  ASSERT_EQ(g.size(), 50u);
  EXPECT_GE(g.front(), 1.0 + 1e-4 - 1e-15);
  EXPECT_LE(g.back(), 2.0 - 1e-4 + 1e-15);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
}

}  // namespace
