#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "liouville/ellipsoid.hpp"

namespace liouville {

/// Point of the ellipsoid with a unit tangent velocity.
struct PhaseState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/// Coordinates on the open unit coball bundle of the boundary curve:
/// arclength from the bouncing-ball vertex, taken in (-length/2, length/2],
/// and the tangential component of the unit velocity.
struct BoundaryPhasePoint {
  double s = 0.0;
  double p_t = 0.0;
};

struct LinearizedMap {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();  // DP at the fixed point, (s, p_t) order
  double det = 1.0;
  double trace = 2.0;
  double fixed_point_residual = 0.0;  // |P(p*) - p*|
  double richardson_gap = 0.0;        // max entry change between step and step/2
  bool well_conditioned = true;       // richardson_gap <= 1e-4
};

struct SimulatorOptions {
  double step_fraction = 1e-4;         // RK4 step relative to the vertex distance
  double crossing_tolerance = 1e-12;   // |g_lambda| at a refined boundary hit
  double drift_tolerance = 1e-8;       // constraint drift allowed before projection
  double grazing_threshold = 1e-8;     // |v . nu| below this aborts a reflection
  double min_normal_component = 1e-2;  // sqrt(1 - p_t^2) needed to launch a leg
  int arclength_panels = 256;

  void validate() const;
};

struct FlightResult {
  PhaseState state;
  double elapsed = 0.0;
  long steps = 0;
};

struct RotationActionSample {
  double radius = 0.0;    // in the normalized coordinates of the linearization
  double action = 0.0;    // area enclosed by the orbit in (s, p_t)
  double rotation = 0.0;  // counter-clockwise rotation number in (s, p_t)
  int iterations = 0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line rotation = intercept + slope * action.
LineFit fit_rotation_action(const std::vector<RotationActionSample>& samples);

struct TrajectoryRow {
  int index = 0;
  double s = 0.0;
  double p_t = 0.0;
  double h = 0.0;
};

/// Unit speed billiard on the ellipsoid inside the table X^lambda.
///
/// The table is {beta <= 0} on the relevant half of the ellipsoid, with
/// beta = g_lambda for the first type and -g_lambda for the second, where
/// g_lambda(x) = sum x_i^2 / (a_i - lambda) - 1. The boundary curve is
/// parametrized by an angle phi with the bouncing-ball vertices at phi = 0
/// and phi = pi.
///
/// Instances are immutable after construction; distinct trajectories may be
/// run concurrently on the same instance.
class BilliardSimulator {
 public:
  BilliardSimulator(const EllipsoidAxes& axes, const BilliardSelector& selector,
                    SimulatorOptions options = {});

  const EllipsoidAxes& axes() const { return axes_; }
  const BilliardSelector& selector() const { return selector_; }
  const SimulatorOptions& options() const { return options_; }

  double boundary_function(const Eigen::Vector3d& x) const;
  Eigen::Vector3d boundary_point(double phi) const;
  /// d boundary_point / d phi.
  Eigen::Vector3d boundary_derivative(double phi) const;
  double boundary_length() const { return length_; }
  double vertex_distance() const { return vertex_distance_; }

  /// Arclength from the vertex to boundary_point(phi), phi in [-pi, pi].
  double arclength(double phi) const;
  /// Inverse of arclength, s reduced modulo the length first.
  double angle_at(double s) const;
  /// Angle of the boundary point closest in the (x_i, x_j) projection.
  double angle_of(const Eigen::Vector3d& boundary_point) const;

  /// Unit vector tangent to the ellipsoid, normal to the boundary, pointing
  /// out of the table.
  Eigen::Vector3d outward_normal(const Eigen::Vector3d& x) const;

  /// Integrates the geodesic from `state` until the boundary is crossed.
  FlightResult geodesic_until_boundary(const PhaseState& state, double max_time) const;
  FlightResult geodesic_until_boundary(const PhaseState& state) const;

  /// Elastic reflection v' = v - 2 (v . nu) nu at a boundary point.
  PhaseState reflect(const PhaseState& state) const;

  /// Inward state at the boundary point with the given phase coordinates.
  PhaseState lift(const BoundaryPhasePoint& point) const;
  /// Phase coordinates of a state sitting on the boundary.
  BoundaryPhasePoint project(const PhaseState& state) const;

  BoundaryPhasePoint billiard_map(const BoundaryPhasePoint& point) const;
  /// P = B^2.
  BoundaryPhasePoint squared_map(const BoundaryPhasePoint& point) const;

  /// Central differences of P at p* = (0, 0) with steps (step * length, step),
  /// Richardson-combined with the half step.
  LinearizedMap linearized_P(double step = 1e-5) const;

  /// Rotation number and enclosed area of P-orbits started at the given radii
  /// along the first normalized axis of the linearization. The rotation is a
  /// smoothly weighted Birkhoff average of the angle increments.
  std::vector<RotationActionSample> rotation_action_profile(const std::vector<double>& radii,
                                                            int iterations = 10000) const;

  /// Orbit of `start` under P: rows 0..iterations, with h from conserved_h.
  std::vector<TrajectoryRow> trajectory(const BoundaryPhasePoint& start, int iterations) const;

 private:
  double wrap_s(double s) const;
  PhaseState rk4_step(const PhaseState& state, double dt) const;
  PhaseState project_to_surface(PhaseState state) const;
  void check_drift(const PhaseState& state) const;
  double panel_arclength(double from, double to) const;
  double speed(double phi) const { return boundary_derivative(phi).norm(); }

  EllipsoidAxes axes_;
  BilliardSelector selector_;
  SimulatorOptions options_;
  double orientation_ = 1.0;    // +1 first type (beta = g), -1 second type (beta = -g)
  std::array<double, 2> semi_{};  // amplitudes of the cos and sin coordinates of Gamma
  std::array<int, 3> index_{};    // coordinate indices: cos, sin, dependent
  double vertex_distance_ = 0.0;
  double length_ = 0.0;
  std::vector<double> cumulative_;  // arclength at panel edges on [0, pi]
  double panel_width_ = 0.0;
};

/// Vertex of the bouncing-ball geodesic with positive coordinates: on
/// {x2 = 0} for the first type and on {x0 = 0} for the second.
Eigen::Vector3d bouncing_ball_vertex(const EllipsoidAxes& axes, const BilliardSelector& selector);

/// Separation constant of the geodesic through `state` (unit velocity):
///   h = a0 + a1 + a2 - sum a_i v_i^2 - |x|^2 + (x . v)^2,
/// the nonzero confocal parameter of the quadric tangent to the geodesic.
/// Away from coordinate degeneracies the value is cross-checked against the
/// chart route of conserved_h_chart; a disagreement above 1e-5 raises
/// SimulationError.
double conserved_h(const EllipsoidAxes& axes, const PhaseState& state);

struct ChartSeparation {
  double from_f = 0.0;  // u2 - p1^2
  double from_q = 0.0;  // u1 + p2^2
  double mean = 0.0;
  bool valid = false;   // false near u1, u2 in {a0, a1, a2}, where the chart degenerates
};

/// h through elliptic coordinates: chart velocities by central differences
/// over time delta, impulses p1 = (u2 - u1) sqrt(U2) du2/dt and
/// p2 = (u2 - u1) sqrt(U1) du1/dt.
ChartSeparation conserved_h_chart(const EllipsoidAxes& axes, const PhaseState& state,
                                  double delta = 1e-6);

}  // namespace liouville
