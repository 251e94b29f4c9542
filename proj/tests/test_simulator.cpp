#include <cmath>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "liouville/ellipsoid.hpp"
#include "liouville/errors.hpp"
#include "liouville/simulator.hpp"

namespace {

using namespace liouville;

constexpr double kPi = std::numbers::pi;
const EllipsoidAxes kAxes(1.0, 2.0, 3.0);

double confocal_form(const EllipsoidAxes& axes, double lambda, const Eigen::Vector3d& x) {
  double s = -1.0;
  for (int i = 0; i < 3; ++i) s += x[i] * x[i] / (axes[i] - lambda);
  return s;
}

double ellipsoid_form(const EllipsoidAxes& axes, const Eigen::Vector3d& x) {
  return confocal_form(axes, 0.0, x);
}

TEST(Options, Validation) {
  SimulatorOptions o;
  EXPECT_NO_THROW(o.validate());
  o.step_fraction = -1.0;
  EXPECT_THROW(o.validate(), DomainError);
  EXPECT_THROW(BilliardSimulator(kAxes, {BilliardKind::First, 1.5}, o), DomainError);
  EXPECT_THROW(BilliardSimulator(kAxes, {BilliardKind::First, 2.5}), DomainError);
}

TEST(Vertex, FirstTypeLiesInPlaneX2) {
  const Eigen::Vector3d v = bouncing_ball_vertex(kAxes, {BilliardKind::First, 1.5});
  EXPECT_NEAR(v[2], 0.0, 1e-15);
  EXPECT_NEAR(v[0], std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(v[1], 1.0, 1e-14);
  EXPECT_NEAR(ellipsoid_form(kAxes, v), 0.0, 1e-14);
  EXPECT_NEAR(confocal_form(kAxes, 1.5, v), 0.0, 1e-14);
}

TEST(Vertex, SecondTypeLiesInPlaneX0) {
  const Eigen::Vector3d v = bouncing_ball_vertex(kAxes, {BilliardKind::Second, 2.5});
  EXPECT_NEAR(v[0], 0.0, 1e-15);
  EXPECT_NEAR(ellipsoid_form(kAxes, v), 0.0, 1e-14);
  EXPECT_NEAR(confocal_form(kAxes, 2.5, v), 0.0, 1e-14);
}

class BoundaryCurve : public ::testing::TestWithParam<BilliardSelector> {};

TEST_P(BoundaryCurve, LiesOnBothQuadricsAndArclengthInverts) {
  const BilliardSelector sel = GetParam();
  const BilliardSimulator sim(kAxes, sel);
  EXPECT_NEAR((sim.boundary_point(0.0) - bouncing_ball_vertex(kAxes, sel)).norm(), 0.0, 1e-14);
  for (int i = -8; i <= 8; ++i) {
    const double phi = kPi * i / 8.0;
    const Eigen::Vector3d x = sim.boundary_point(phi);
    EXPECT_NEAR(ellipsoid_form(kAxes, x), 0.0, 1e-13);
    EXPECT_NEAR(confocal_form(kAxes, sel.lambda, x), 0.0, 1e-12);
    EXPECT_NEAR(std::remainder(sim.angle_of(x) - phi, 2 * kPi), 0.0, 1e-12);
    EXPECT_NEAR(std::remainder(sim.angle_at(sim.arclength(phi)) - phi, 2 * kPi), 0.0, 1e-10);
  }
  EXPECT_NEAR(sim.arclength(kPi), 0.5 * sim.boundary_length(), 1e-12);
}

TEST_P(BoundaryCurve, PolygonLengthConverges) {
  const BilliardSimulator sim(kAxes, GetParam());
  double polygon = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    polygon += (sim.boundary_point(2 * kPi * (i + 1) / n - kPi) -
                sim.boundary_point(2 * kPi * i / n - kPi))
                   .norm();
  }
  EXPECT_NEAR(polygon, sim.boundary_length(), 1e-6 * polygon);
}

TEST_P(BoundaryCurve, BouncingBallOrbit) {
  const BilliardSelector sel = GetParam();
  const BilliardSimulator sim(kAxes, sel);
  const BoundaryPhasePoint once = sim.billiard_map({0.0, 0.0});
  EXPECT_NEAR(std::abs(once.s), 0.5 * sim.boundary_length(), 1e-8);
  EXPECT_NEAR(once.p_t, 0.0, 1e-8);
  const BoundaryPhasePoint twice = sim.squared_map({0.0, 0.0});
  EXPECT_NEAR(twice.s, 0.0, 1e-8);
  EXPECT_NEAR(twice.p_t, 0.0, 1e-8);
  // The bouncing-ball geodesic lies in a coordinate plane, so its
  // separation constant is the axis value of that plane.
  const double expected_h = sel.kind == BilliardKind::First ? kAxes.a2() : kAxes.a0();
  EXPECT_NEAR(conserved_h(kAxes, sim.lift({0.0, 0.0})), expected_h, 1e-12);
}

TEST_P(BoundaryCurve, LinearizationAtFixedPoint) {
  const BilliardSelector sel = GetParam();
  const BilliardSimulator sim(kAxes, sel);
  const LinearizedMap lin = sim.linearized_P();
  EXPECT_LT(lin.fixed_point_residual, 1e-8);
  EXPECT_LT(std::abs(lin.det - 1.0), 1e-6);
  EXPECT_NEAR(0.5 * lin.trace, std::cos(2 * kPi * rotation_closed_form(kAxes, sel)), 1e-4);
  EXPECT_LT(lin.richardson_gap, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(ReferenceAxes, BoundaryCurve,
                         ::testing::Values(BilliardSelector{BilliardKind::First, 1.5},
                                           BilliardSelector{BilliardKind::Second, 2.5}),
                         [](const auto& info) {
                           return info.param.kind == BilliardKind::First ? "FirstType"
                                                                         : "SecondType";
                         });

TEST(Flight, SeparationConstantAlongGeodesic) {
  const BilliardSimulator sim(kAxes, {BilliardKind::First, 1.5});
  const PhaseState start = sim.lift({0.3, 0.2});
  EXPECT_NEAR(start.velocity.norm(), 1.0, 1e-14);
  const FlightResult leg = sim.geodesic_until_boundary(start);
  EXPECT_GT(leg.elapsed, 0.0);
  EXPECT_GT(leg.steps, 0);
  EXPECT_NEAR(sim.boundary_function(leg.state.position), 0.0, 1e-12);
  EXPECT_NEAR(ellipsoid_form(kAxes, leg.state.position), 0.0, 1e-12);
  EXPECT_NEAR(conserved_h(kAxes, leg.state), conserved_h(kAxes, start), 1e-10);
  const PhaseState bounced = sim.reflect(leg.state);
  EXPECT_NEAR(conserved_h(kAxes, bounced), conserved_h(kAxes, start), 1e-10);
}

TEST(Flight, ChartRouteAgreesWithCartesianForm) {
  const BilliardSimulator sim(kAxes, {BilliardKind::First, 1.5});
  for (const BoundaryPhasePoint start : {BoundaryPhasePoint{0.4, 0.3}, BoundaryPhasePoint{-1.0, -0.5}}) {
    const PhaseState state = sim.lift(start);
    const ChartSeparation chart = conserved_h_chart(kAxes, state);
    ASSERT_TRUE(chart.valid);
    EXPECT_NEAR(chart.from_f, chart.from_q, 1e-6);
    EXPECT_NEAR(chart.mean, conserved_h(kAxes, state), 1e-6);
  }
}

TEST(Flight, LiftRejectsTangentialDirections) {
  const BilliardSimulator sim(kAxes, {BilliardKind::First, 1.5});
  EXPECT_THROW(sim.lift({0.0, 1.0}), SimulationError);
  EXPECT_THROW(sim.lift({0.0, 0.99999}), SimulationError);
}

TEST(Trajectory, RowsAndConservation) {
  const BilliardSimulator sim(kAxes, {BilliardKind::Second, 2.5});
  const auto rows = sim.trajectory({0.2, -0.1}, 40);
  ASSERT_EQ(rows.size(), 41u);
  EXPECT_EQ(rows.front().index, 0);
  EXPECT_EQ(rows.back().index, 40);
  EXPECT_DOUBLE_EQ(rows.front().s, 0.2);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.h, rows.front().h, 1e-9);
    EXPECT_LE(std::abs(r.s), 0.5 * sim.boundary_length());
  }
  EXPECT_THROW(sim.trajectory({0.0, 0.0}, -1), DomainError);
}

TEST(RotationAction, LineFitRecoversLine) {
  std::vector<RotationActionSample> samples(3);
  for (int i = 0; i < 3; ++i) {
    samples[i].action = i + 1.0;
    samples[i].rotation = 0.2 - 0.5 * samples[i].action;
  }
  const LineFit fit = fit_rotation_action(samples);
  EXPECT_NEAR(fit.slope, -0.5, 1e-14);
  EXPECT_NEAR(fit.intercept, 0.2, 1e-14);
  EXPECT_THROW(fit_rotation_action({samples[0]}), DomainError);
}

// Slope of rotation number against enclosed area, measured on P-orbits near
// the fixed point, against the closed-form twist.
struct SlopeCase {
  std::array<double, 3> axes;
  BilliardSelector selector;
};

class TwistFromOrbits : public ::testing::TestWithParam<SlopeCase> {};

std::string slope_case_name(const ::testing::TestParamInfo<SlopeCase>& info) {
  const std::string kind =
      info.param.selector.kind == BilliardKind::First ? "FirstType" : "SecondType";
  return kind + std::to_string(info.index);
}

TEST_P(TwistFromOrbits, SlopeMatchesClosedForm) {
  const auto& [a, sel] = GetParam();
  const EllipsoidAxes axes(a[0], a[1], a[2]);
  const BilliardSimulator sim(axes, sel);
  const auto samples = sim.rotation_action_profile({0.02, 0.04}, 400);
  const double twist = twist_closed_form(axes, sel);
  EXPECT_NEAR(fractional_part(samples.front().rotation),
              fractional_part(rotation_closed_form(axes, sel)), 2e-3);
  const double estimate = fit_rotation_action(samples).slope;
  EXPECT_EQ(std::signbit(estimate), std::signbit(twist));
  EXPECT_NEAR(estimate, twist, 0.05 * std::abs(twist));
}

INSTANTIATE_TEST_SUITE_P(
    Cases, TwistFromOrbits,
    ::testing::Values(SlopeCase{{1, 2, 3}, {BilliardKind::First, 1.5}},
                      SlopeCase{{1, 2, 3}, {BilliardKind::Second, 2.5}},
                      // s* > a1 for these axes: negative twist on a second-type table.
                      SlopeCase{{1, 1.1, 20}, {BilliardKind::Second, 1.5}}),
    slope_case_name);

}  // namespace
