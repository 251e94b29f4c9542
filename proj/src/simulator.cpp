#include "liouville/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "liouville/errors.hpp"
#include "liouville/quadrature.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOnBoundary = 1e-14;
constexpr double kBoundaryPrecondition = 1e-10;
constexpr double kChartConsistency = 1e-5;
constexpr double kChartDegeneracy = 1e-3;

using Vec3 = Eigen::Vector3d;

Vec3 inverse_axes(const EllipsoidAxes& axes) {
  return {1.0 / axes.a0(), 1.0 / axes.a1(), 1.0 / axes.a2()};
}

double surface_constraint(const EllipsoidAxes& axes, const Vec3& x) {
  return x.cwiseProduct(x).dot(inverse_axes(axes)) - 1.0;
}

Vec3 unit_normal(const EllipsoidAxes& axes, const Vec3& x) {
  return x.cwiseProduct(inverse_axes(axes)).normalized();
}

Vec3 onto_surface(const EllipsoidAxes& axes, Vec3 x) {
  const Vec3 inv = inverse_axes(axes);
  for (int i = 0; i < 3; ++i) {
    const Vec3 grad = 2.0 * x.cwiseProduct(inv);
    x -= surface_constraint(axes, x) / grad.squaredNorm() * grad;
  }
  return x;
}

// Smooth bump for weighted Birkhoff averages.
double bump(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / (t * (1.0 - t)));
}

double wrap_angle(double angle, double center) {
  return center + std::remainder(angle - center, 2.0 * kPi);
}

}  // namespace

void SimulatorOptions::validate() const {
  const bool ok = step_fraction > 0.0 && step_fraction <= 0.1 && crossing_tolerance > 0.0 &&
                  drift_tolerance > 0.0 && grazing_threshold > 0.0 &&
                  min_normal_component > 0.0 && min_normal_component < 1.0 &&
                  arclength_panels >= 8;
  if (!ok) throw DomainError("invalid simulator options");
}

// ---------------------------------------------------------------------------

Eigen::Vector3d bouncing_ball_vertex(const EllipsoidAxes& axes, const BilliardSelector& selector) {
  validate_selector(axes, selector);
  const double lambda = selector.lambda;
  // Squared coordinates (X, Y) of the two nonzero components solve
  //   X / a_i + Y / a_j = 1,   X / (a_i - lambda) + Y / (a_j - lambda) = 1.
  const bool first = selector.kind == BilliardKind::First;
  const int i = first ? 0 : 1;
  const int j = first ? 1 : 2;
  Eigen::Matrix2d m;
  m << 1.0 / axes[i], 1.0 / axes[j], 1.0 / (axes[i] - lambda), 1.0 / (axes[j] - lambda);
  const Eigen::Vector2d squares = m.partialPivLu().solve(Eigen::Vector2d::Ones());
  Vec3 x = Vec3::Zero();
  x[i] = std::sqrt(std::max(0.0, squares[0]));
  x[j] = std::sqrt(std::max(0.0, squares[1]));
  return x;
}

double conserved_h(const EllipsoidAxes& axes, const PhaseState& state) {
  const Vec3& x = state.position;
  const Vec3& v = state.velocity;
  const Vec3 a(axes.a0(), axes.a1(), axes.a2());
  const double xv = x.dot(v);
  const double h = a.sum() - v.cwiseProduct(v).dot(a) - x.squaredNorm() + xv * xv;

  const ChartSeparation chart = conserved_h_chart(axes, state);
  if (chart.valid && std::abs(chart.from_f - chart.from_q) > kChartConsistency) {
    throw SimulationError("separation constant inconsistent between chart evaluations (" +
                          std::to_string(chart.from_f) + " vs " +
                          std::to_string(chart.from_q) + ")");
  }
  return h;
}

ChartSeparation conserved_h_chart(const EllipsoidAxes& axes, const PhaseState& state,
                                  double delta) {
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  ChartSeparation out;
  const auto [u1, u2] = cartesian_to_elliptic(axes, state.position);
  const double margin = kChartDegeneracy * (a2 - a0);
  const bool interior = u1 - a0 > margin && a1 - u1 > margin && u2 - a1 > margin &&
                        a2 - u2 > margin;
  if (!interior) return out;

  const auto [u1p, u2p] = cartesian_to_elliptic(
      axes, onto_surface(axes, state.position + delta * state.velocity));
  const auto [u1m, u2m] = cartesian_to_elliptic(
      axes, onto_surface(axes, state.position - delta * state.velocity));
  const double du1 = (u1p - u1m) / (2.0 * delta);
  const double du2 = (u2p - u2m) / (2.0 * delta);

  const double big_u1 = u1 / (4.0 * (u1 - a0) * (a1 - u1) * (a2 - u1));
  const double big_u2 = u2 / (4.0 * (u2 - a0) * (u2 - a1) * (a2 - u2));
  const double gap = u2 - u1;
  const double p1_sq = gap * gap * big_u2 * du2 * du2;
  const double p2_sq = gap * gap * big_u1 * du1 * du1;
  out.from_f = u2 - p1_sq;
  out.from_q = u1 + p2_sq;
  out.mean = 0.5 * (out.from_f + out.from_q);
  out.valid = true;
  return out;
}

LineFit fit_rotation_action(const std::vector<RotationActionSample>& samples) {
  if (samples.size() < 2) throw DomainError("fit_rotation_action: need two samples");
  Eigen::MatrixXd design(samples.size(), 2);
  Eigen::VectorXd rhs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design(static_cast<Eigen::Index>(i), 1) = samples[i].action;
    rhs(static_cast<Eigen::Index>(i)) = samples[i].rotation;
  }
  const Eigen::Vector2d c = design.colPivHouseholderQr().solve(rhs);
  return {c[1], c[0]};
}

// ---------------------------------------------------------------------------

BilliardSimulator::BilliardSimulator(const EllipsoidAxes& axes,
                                     const BilliardSelector& selector,
                                     SimulatorOptions options)
    : axes_(axes), selector_(selector), options_(options) {
  validate_selector(axes, selector);
  options_.validate();
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  const double lambda = selector.lambda;
  if (selector.kind == BilliardKind::First) {
    orientation_ = 1.0;
    index_ = {1, 2, 0};
    semi_ = {std::sqrt(a1 * (a1 - lambda) / (a1 - a0)),
             std::sqrt(a2 * (a2 - lambda) / (a2 - a0))};
  } else {
    orientation_ = -1.0;
    index_ = {1, 0, 2};
    semi_ = {std::sqrt(a1 * (lambda - a1) / (a2 - a1)),
             std::sqrt(a0 * (lambda - a0) / (a2 - a0))};
  }
  vertex_distance_ = 2.0 * semi_[0];

  const int panels = options_.arclength_panels;
  panel_width_ = kPi / panels;
  cumulative_.assign(static_cast<std::size_t>(panels) + 1, 0.0);
  for (int k = 0; k < panels; ++k) {
    cumulative_[k + 1] = cumulative_[k] + panel_arclength(k * panel_width_, (k + 1) * panel_width_);
  }
  length_ = 2.0 * cumulative_.back();
}

double BilliardSimulator::boundary_function(const Vec3& x) const {
  double g = -1.0;
  for (int i = 0; i < 3; ++i) g += x[i] * x[i] / (axes_[i] - selector_.lambda);
  return orientation_ * g;
}

Vec3 BilliardSimulator::boundary_point(double phi) const {
  const auto [ic, is, id] = index_;
  Vec3 x;
  x[ic] = semi_[0] * std::cos(phi);
  x[is] = semi_[1] * std::sin(phi);
  const double rest = 1.0 - x[ic] * x[ic] / axes_[ic] - x[is] * x[is] / axes_[is];
  x[id] = std::sqrt(axes_[id] * std::max(0.0, rest));
  return x;
}

Vec3 BilliardSimulator::boundary_derivative(double phi) const {
  const auto [ic, is, id] = index_;
  const Vec3 x = boundary_point(phi);
  Vec3 d;
  d[ic] = -semi_[0] * std::sin(phi);
  d[is] = semi_[1] * std::cos(phi);
  d[id] = -axes_[id] * (x[ic] * d[ic] / axes_[ic] + x[is] * d[is] / axes_[is]) / x[id];
  return d;
}

double BilliardSimulator::panel_arclength(double from, double to) const {
  if (from == to) return 0.0;
  return boost::math::quadrature::gauss<double, 20>::integrate(
      [this](double phi) { return speed(phi); }, from, to);
}

double BilliardSimulator::arclength(double phi) const {
  if (!(std::abs(phi) <= kPi)) throw DomainError("arclength: angle outside [-pi, pi]");
  const double r = std::abs(phi);
  const int last = static_cast<int>(cumulative_.size()) - 2;
  const int k = std::clamp(static_cast<int>(r / panel_width_), 0, last);
  const double value = cumulative_[k] + panel_arclength(k * panel_width_, r);
  return phi < 0.0 ? -value : value;
}

double BilliardSimulator::wrap_s(double s) const {
  double r = std::remainder(s, length_);
  if (r <= -0.5 * length_) r += length_;
  return r;
}

double BilliardSimulator::angle_at(double s) const {
  const double r = wrap_s(s);
  const double target = std::abs(r);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  const int last = static_cast<int>(cumulative_.size()) - 2;
  const int k = std::clamp(static_cast<int>(it - cumulative_.begin()) - 1, 0, last);
  double lo = k * panel_width_;
  double hi = (k + 1) * panel_width_;
  double phi = lo + panel_width_ * (target - cumulative_[k]) / (cumulative_[k + 1] - cumulative_[k]);
  for (int iteration = 0; iteration < 60; ++iteration) {
    const double residual = cumulative_[k] + panel_arclength(k * panel_width_, phi) - target;
    if (residual == 0.0) break;
    (residual > 0.0 ? hi : lo) = phi;
    double next = phi - residual / speed(phi);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - phi) <= 4.0 * std::numeric_limits<double>::epsilon();
    phi = next;
    if (done) break;
  }
  return r < 0.0 ? -phi : phi;
}

double BilliardSimulator::angle_of(const Vec3& x) const {
  const auto [ic, is, id] = index_;
  return std::atan2(x[is] / semi_[1], x[ic] / semi_[0]);
}

Vec3 BilliardSimulator::outward_normal(const Vec3& x) const {
  Vec3 grad;
  for (int i = 0; i < 3; ++i) grad[i] = 2.0 * orientation_ * x[i] / (axes_[i] - selector_.lambda);
  const Vec3 n = unit_normal(axes_, x);
  return (grad - grad.dot(n) * n).normalized();
}

// ---------------------------------------------------------------------------

PhaseState BilliardSimulator::rk4_step(const PhaseState& state, double dt) const {
  const Vec3 inv = inverse_axes(axes_);
  // Geodesic acceleration on the quadric: -(v^T A^-1 v / |A^-1 x|^2) A^-1 x.
  auto acceleration = [&inv](const Vec3& x, const Vec3& v) -> Vec3 {
    const Vec3 scaled = x.cwiseProduct(inv);
    return -(v.cwiseProduct(v).dot(inv) / scaled.squaredNorm()) * scaled;
  };
  const Vec3& x = state.position;
  const Vec3& v = state.velocity;
  const Vec3 k1x = v;
  const Vec3 k1v = acceleration(x, v);
  const Vec3 k2x = v + 0.5 * dt * k1v;
  const Vec3 k2v = acceleration(x + 0.5 * dt * k1x, k2x);
  const Vec3 k3x = v + 0.5 * dt * k2v;
  const Vec3 k3v = acceleration(x + 0.5 * dt * k2x, k3x);
  const Vec3 k4x = v + dt * k3v;
  const Vec3 k4v = acceleration(x + dt * k3x, k4x);
  PhaseState next;
  next.position = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  next.velocity = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return next;
}

PhaseState BilliardSimulator::project_to_surface(PhaseState state) const {
  state.position = onto_surface(axes_, state.position);
  const Vec3 n = unit_normal(axes_, state.position);
  state.velocity = (state.velocity - state.velocity.dot(n) * n).normalized();
  return state;
}

void BilliardSimulator::check_drift(const PhaseState& state) const {
  const double tol = options_.drift_tolerance;
  const double on_surface = std::abs(surface_constraint(axes_, state.position));
  const double tangency = std::abs(state.velocity.dot(unit_normal(axes_, state.position)));
  const double speed_error = std::abs(state.velocity.norm() - 1.0);
  if (on_surface > tol || tangency > tol || speed_error > tol) {
    throw SimulationError("constraint drift beyond tolerance during a geodesic step");
  }
}

FlightResult BilliardSimulator::geodesic_until_boundary(const PhaseState& state) const {
  return geodesic_until_boundary(state, 4.0 * kPi * std::sqrt(axes_.a2()));
}

FlightResult BilliardSimulator::geodesic_until_boundary(const PhaseState& state,
                                                        double max_time) const {
  const double dt = options_.step_fraction * vertex_distance_;
  PhaseState current = state;
  double beta_current = boundary_function(current.position);
  double elapsed = 0.0;
  long steps = 0;
  while (elapsed < max_time) {
    const PhaseState raw = rk4_step(current, dt);
    check_drift(raw);
    const PhaseState next = project_to_surface(raw);
    const double beta_next = boundary_function(next.position);
    ++steps;
    if (beta_next < -kOnBoundary) {
      current = next;
      beta_current = beta_next;
      elapsed += dt;
      continue;
    }
    if (!(beta_current < 0.0)) {
      throw SimulationError("geodesic leaves the table immediately");
    }
    if (beta_next <= 0.0) return {next, elapsed + dt, steps};

    auto beta_at = [&](double tau) {
      return boundary_function(project_to_surface(rk4_step(current, tau)).position);
    };
    const double tau = find_root_monotone(beta_at, 0.0, dt, 1e-15 * dt);
    const PhaseState hit = project_to_surface(rk4_step(current, tau));
    if (!(std::abs(boundary_function(hit.position)) <= options_.crossing_tolerance)) {
      throw SimulationError("boundary crossing could not be refined");
    }
    return {hit, elapsed + tau, steps};
  }
  throw SimulationError("geodesic did not reach the boundary within the time limit");
}

PhaseState BilliardSimulator::reflect(const PhaseState& state) const {
  if (!(std::abs(boundary_function(state.position)) < kBoundaryPrecondition)) {
    throw SimulationError("reflect: state is not on the boundary");
  }
  const Vec3 nu = outward_normal(state.position);
  const double vn = state.velocity.dot(nu);
  if (std::abs(vn) < options_.grazing_threshold) {
    throw SimulationError("reflect: grazing incidence");
  }
  return {state.position, state.velocity - 2.0 * vn * nu};
}

PhaseState BilliardSimulator::lift(const BoundaryPhasePoint& point) const {
  if (!(std::abs(point.p_t) < 1.0)) throw SimulationError("lift: |p_t| must be below 1");
  const double normal = std::sqrt((1.0 - point.p_t) * (1.0 + point.p_t));
  if (normal < options_.min_normal_component) {
    throw SimulationError("lift: direction too close to the boundary tangent");
  }
  const double phi = angle_at(point.s);
  PhaseState state;
  state.position = boundary_point(phi);
  const Vec3 tangent = boundary_derivative(phi).normalized();
  state.velocity =
      (point.p_t * tangent - normal * outward_normal(state.position)).normalized();
  return state;
}

BoundaryPhasePoint BilliardSimulator::project(const PhaseState& state) const {
  const double phi = angle_of(state.position);
  const Vec3 tangent = boundary_derivative(phi).normalized();
  return {arclength(phi), state.velocity.dot(tangent)};
}

BoundaryPhasePoint BilliardSimulator::billiard_map(const BoundaryPhasePoint& point) const {
  const FlightResult flight = geodesic_until_boundary(lift(point));
  return project(reflect(flight.state));
}

BoundaryPhasePoint BilliardSimulator::squared_map(const BoundaryPhasePoint& point) const {
  return billiard_map(billiard_map(point));
}

LinearizedMap BilliardSimulator::linearized_P(double step) const {
  if (!(step > 0.0 && step < 1e-2)) throw DomainError("linearized_P: step must lie in (0, 1e-2)");
  auto differences = [this](double h) {
    const std::array<double, 2> steps = {h * length_, h};
    Eigen::Matrix2d d;
    for (int j = 0; j < 2; ++j) {
      BoundaryPhasePoint plus{};
      BoundaryPhasePoint minus{};
      (j == 0 ? plus.s : plus.p_t) = steps[j];
      (j == 0 ? minus.s : minus.p_t) = -steps[j];
      const BoundaryPhasePoint fp = squared_map(plus);
      const BoundaryPhasePoint fm = squared_map(minus);
      d(0, j) = wrap_s(fp.s - fm.s) / (2.0 * steps[j]);
      d(1, j) = (fp.p_t - fm.p_t) / (2.0 * steps[j]);
    }
    return d;
  };
  const Eigen::Matrix2d coarse = differences(step);
  const Eigen::Matrix2d fine = differences(0.5 * step);
  LinearizedMap out;
  out.m = (4.0 * fine - coarse) / 3.0;
  out.det = out.m.determinant();
  out.trace = out.m.trace();
  out.richardson_gap = (out.m - fine).cwiseAbs().maxCoeff();
  out.well_conditioned = out.richardson_gap <= 1e-4;
  const BoundaryPhasePoint image = squared_map({0.0, 0.0});
  out.fixed_point_residual = std::hypot(wrap_s(image.s), image.p_t);
  return out;
}

std::vector<RotationActionSample> BilliardSimulator::rotation_action_profile(
    const std::vector<double>& radii, int iterations) const {
  if (iterations < 16) throw DomainError("rotation_action_profile: too few iterations");
  const LinearizedMap lin = linearized_P();
  const double a = lin.m(0, 0), b = lin.m(0, 1), c = lin.m(1, 0), d = lin.m(1, 1);
  const double half_trace = 0.5 * lin.trace;
  if (!(std::abs(half_trace) < 1.0)) {
    throw SimulationError("rotation_action_profile: fixed point is not elliptic");
  }
  const double sin_abs = std::sqrt((1.0 - half_trace) * (1.0 + half_trace));
  const double orientation = c > 0.0 ? 1.0 : -1.0;
  // Quadratic form preserved by the linear map, normalized to unit determinant.
  Eigen::Matrix2d form;
  form << c, 0.5 * (d - a), 0.5 * (d - a), -b;
  form *= orientation / sin_abs;
  const Eigen::LLT<Eigen::Matrix2d> llt(form);
  if (llt.info() != Eigen::Success) {
    throw SimulationError("rotation_action_profile: invariant form is not definite");
  }
  const Eigen::Matrix2d upper = llt.matrixU();
  const Eigen::Matrix2d upper_inv = upper.inverse();
  const double linear_angle = std::atan2(orientation * sin_abs, half_trace);

  std::vector<RotationActionSample> out;
  for (double radius : radii) {
    if (!(radius > 0.0)) throw DomainError("rotation_action_profile: radii must be > 0");
    const Eigen::Vector2d z0 = upper_inv * Eigen::Vector2d(radius, 0.0);
    BoundaryPhasePoint point{z0[0], z0[1]};
    std::vector<Eigen::Vector2d> orbit;
    orbit.reserve(static_cast<std::size_t>(iterations) + 1);
    orbit.emplace_back(point.s, point.p_t);
    for (int n = 0; n < iterations; ++n) {
      point = squared_map(point);
      orbit.emplace_back(point.s, point.p_t);
    }

    std::vector<double> angles(orbit.size());
    for (std::size_t n = 0; n < orbit.size(); ++n) {
      const Eigen::Vector2d w = upper * orbit[n];
      const double r = w.norm();
      if (r < 0.5 * radius || r > 2.0 * radius) {
        throw SimulationError("rotation_action_profile: orbit left the elliptic island");
      }
      angles[n] = std::atan2(w[1], w[0]);
    }
    double weighted = 0.0;
    double weights = 0.0;
    double winding = 0.0;
    for (int n = 0; n < iterations; ++n) {
      const double step = wrap_angle(angles[n + 1] - angles[n], linear_angle);
      const double w = bump((n + 0.5) / iterations);
      weighted += w * step;
      weights += w;
      winding += step;
    }
    if (std::abs(winding) < 2.0 * kPi) {
      throw SimulationError("rotation_action_profile: insufficient winding");
    }

    std::vector<std::size_t> order(orbit.size());
    for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
    std::sort(order.begin(), order.end(),
              [&angles](std::size_t l, std::size_t r) { return angles[l] < angles[r]; });
    double area = 0.0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      const Eigen::Vector2d& p = orbit[order[n]];
      const Eigen::Vector2d& q = orbit[order[(n + 1) % order.size()]];
      area += p[0] * q[1] - p[1] * q[0];
    }
    out.push_back({radius, 0.5 * std::abs(area), weighted / weights / (2.0 * kPi), iterations});
  }
  return out;
}

std::vector<TrajectoryRow> BilliardSimulator::trajectory(const BoundaryPhasePoint& start,
                                                         int iterations) const {
  if (iterations < 0) throw DomainError("trajectory: negative iteration count");
  std::vector<TrajectoryRow> rows;
  rows.reserve(static_cast<std::size_t>(iterations) + 1);
  BoundaryPhasePoint point = start;
  for (int n = 0;; ++n) {
    rows.push_back({n, point.s, point.p_t, conserved_h(axes_, lift(point))});
    if (n == iterations) break;
    point = squared_map(point);
  }
  return rows;
}

}  // namespace liouville
