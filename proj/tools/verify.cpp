#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "liouville/errors.hpp"
#include "liouville/liouville_core.hpp"
#include "liouville/simulator.hpp"
#include "liouville/special_functions.hpp"

namespace liouville::cli {
namespace {

using Checks = std::vector<CheckResult>;

CheckResult make_check(std::string name, double value, double tolerance, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.passed = std::isfinite(value) && value <= tolerance;
  c.detail = std::move(detail);
  return c;
}

std::string describe(double value) { return format_number(value); }

BilliardSelector midpoint(const EllipsoidAxes& axes, BilliardKind kind) {
  const auto [lo, hi] = lambda_interval(axes, kind);
  return {kind, 0.5 * (lo + hi)};
}

Checks check_zeta(const Tolerances& tol) {
  double worst = 0.0;
  double smallest = INFINITY;
  for (int i = 0; i < 20; ++i) {
    const double k = 0.02 + 0.96 * i / 19.0;
    const double z = zeta_Z(k);
    const double h = 1e-4 * std::min(k, 1.0 - k);
    // Fourth-order central difference of K.
    const double dk = (-elliptic_K(k + 2 * h) + 8 * elliptic_K(k + h) - 8 * elliptic_K(k - h) +
                       elliptic_K(k - 2 * h)) /
                      (12 * h);
    worst = std::max(worst, std::abs(z - k * dk) / std::max(1.0, std::abs(z)));
    smallest = std::min(smallest, z);
  }
  return {make_check("zeta.derivative_identity", worst, tol.get("zeta")),
          make_check("zeta.positive", smallest > 0.0 ? 0.0 : 1.0, 0.0,
                     "min Z(k) = " + describe(smallest))};
}

Checks check_model(const Tolerances& tol) {
  const LiouvilleProfile profile = model_profile();
  const double log_term = std::log(1.0 + std::numbers::sqrt2);
  const double rotation = rotation_at_center(profile);
  const double twist = twist_at_center(profile);
  const ActionDerivatives action = action_derivatives_at_peak(profile);
  Checks out{
      make_check("model.rotation", std::abs(rotation + 4.0 * log_term), tol.get("model"),
                 "rotation = " + describe(rotation)),
      make_check("model.twist", std::abs(twist + 2.0 * (std::numbers::sqrt2 - log_term)),
                 tol.get("model"), "twist = " + describe(twist)),
      make_check("model.action_first", std::abs(action.first + 0.5), tol.get("action_first"),
                 "dI/dh = " + describe(action.first)),
      make_check("model.action_second", std::abs(action.second - 0.125), tol.get("action_second"),
                 "d2I/dh2 = " + describe(action.second))};
  // The integrals are compared with exactly transported Taylor data; the
  // discrepancy of a full re-extraction on the rescaled profile is reported
  // alongside, since finite differences at non-binary scales add rounding.
  const TaylorData taylor = taylor_from_profile(profile);
  double worst = 0.0;
  double worst_reextracted = 0.0;
  for (double mu : {0.5, 2.0, 10.0}) {
    const LiouvilleProfile scaled = rescaled_profile(profile, mu);
    const TaylorData moved = rescaled_taylor(taylor, mu);
    worst = std::max({worst, std::abs(rotation_at_center(scaled, moved) - rotation),
                      std::abs(twist_at_center(scaled, moved) - twist)});
    worst_reextracted = std::max({worst_reextracted, std::abs(rotation_at_center(scaled) - rotation),
                                  std::abs(twist_at_center(scaled) - twist)});
  }
  out.push_back(make_check("model.scaling", worst, tol.get("scaling"),
                           "re-extracted Taylor data: " + describe(worst_reextracted)));
  return out;
}

Checks check_taylor(const EllipsoidAxes& axes, BilliardKind kind, const Tolerances& tol) {
  const TaylorData closed = taylor_closed_form(axes, kind);
  const TaylorData numeric = taylor_from_profile(chart_profile(axes, midpoint(axes, kind)));
  // Componentwise, relative to max(1, |closed form|) so that large axes
  // ratios (alpha2 grows like a2^2) are judged on the same footing.
  auto gap = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
  const double worst = std::max({gap(closed.alpha0, numeric.alpha0), gap(closed.alpha1, numeric.alpha1),
                                 gap(closed.alpha2, numeric.alpha2), gap(closed.kappa, numeric.kappa)});
  return {make_check("taylor." + kind_label(kind), worst, tol.get("taylor"))};
}

Checks check_cross_path(const EllipsoidAxes& axes, BilliardKind kind, const Tolerances& tol) {
  const auto [lo, hi] = lambda_interval(axes, kind);
  double worst = 0.0;
  for (double t : {0.2, 0.5, 0.8}) {
    const BilliardSelector sel{kind, lo + t * (hi - lo)};
    const LiouvilleProfile profile = chart_profile(axes, sel);
    const TaylorData taylor = taylor_closed_form(axes, kind);
    worst = std::max({worst,
                      std::abs(rotation_at_center(profile, taylor) -
                               rotation_closed_form(axes, sel)),
                      std::abs(twist_at_center(profile, taylor) - twist_closed_form(axes, sel))});
  }
  return {make_check("cross_path." + kind_label(kind), worst, tol.get("cross_path"))};
}

Checks check_certificate(const EllipsoidAxes& axes, BilliardKind kind, const Tolerances& tol) {
  const SignCertificate cert = sign_certificate(axes, kind, tol.get("certificate"));
  std::ostringstream detail;
  detail << "vanishing point " << describe(cert.vanishing_point) << " < a1";
  const double value = kind == BilliardKind::First ? cert.e1_relative_error : 0.0;
  return {make_check("certificate." + kind_label(kind), cert.passed ? value : INFINITY,
                     tol.get("certificate"), detail.str())};
}

Checks check_sign_and_monotonicity(const EllipsoidAxes& axes, BilliardKind kind,
                                   const Tolerances& tol) {
  const bool first = kind == BilliardKind::First;
  const auto [lo, hi] = lambda_interval(axes, kind);
  const RotationBounds bound = rotation_bound(axes, kind);
  const auto grid = certification_grid(lo, hi);
  int sign_violations = 0;
  int order_violations = 0;
  int bound_violations = 0;
  double wrong_sign_lo = NAN;
  double wrong_sign_hi = NAN;
  double previous = NAN;
  for (double lambda : grid) {
    const BilliardSelector sel{kind, lambda};
    const double r = -rotation_closed_form(axes, sel);
    const double w = twist_closed_form(axes, sel);
    if (first ? !(w < 0.0) : !(w > 0.0)) {
      ++sign_violations;
      if (std::isnan(wrong_sign_lo)) wrong_sign_lo = lambda;
      wrong_sign_hi = lambda;
    }
    if (!(r > 0.0 && r < bound.supremum)) ++bound_violations;
    if (!std::isnan(previous) && (first ? !(r < previous) : !(r > previous))) ++order_violations;
    previous = r;
  }
  const std::string label = kind_label(kind);
  const std::string points = std::to_string(grid.size()) + " points";
  std::string sign_detail = points;
  if (sign_violations > 0) {
    sign_detail += ", wrong sign for lambda in [" + describe(wrong_sign_lo) + ", " +
                   describe(wrong_sign_hi) + "]";
  }
  Checks out{make_check("grid." + label + ".twist_sign", sign_violations, 0.0, sign_detail),
             make_check("grid." + label + ".monotone", order_violations, 0.0, points),
             make_check("grid." + label + ".bounds", bound_violations, 0.0,
                        points + ", bound " + describe(bound.supremum))};

  const double near = first ? axes.a1() - 1e-8 : axes.a1() + 1e-8;
  const double near_value = -rotation_closed_form(axes, {kind, near});
  out.push_back(make_check("limit." + label, near_value, tol.get("limit"),
                           "-rotation at a1 " + std::string(first ? "- " : "+ ") + "1e-8"));

  if (bound.has_right_limit_lower) {
    const double far = -rotation_closed_form(axes, {kind, axes.a2() - 1e-6});
    out.push_back(make_check("lower_bound." + label,
                             std::max(0.0, bound.right_limit_lower - far),
                             tol.get("lower_bound_slack"),
                             "-rotation " + describe(far) + " vs lower bound " +
                                 describe(bound.right_limit_lower)));
  }
  return out;
}

Checks check_simulator(const EllipsoidAxes& axes, BilliardKind kind, const VerifyConfig& config) {
  const Tolerances& tol = config.tolerances;
  const BilliardSelector sel = midpoint(axes, kind);
  SimulatorOptions options;
  options.step_fraction = tol.get("step_fraction");
  const BilliardSimulator sim(axes, sel, options);
  const LinearizedMap lin = sim.linearized_P();
  const double rotation = rotation_closed_form(axes, sel);
  const double trace_error =
      std::abs(0.5 * lin.trace - std::cos(2.0 * std::numbers::pi * rotation));

  // Drift from a seeded start near the vertex.
  std::mt19937_64 rng(config.seed + (kind == BilliardKind::First ? 0 : 1));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const BoundaryPhasePoint start{0.05 * sim.boundary_length() * unit(rng), 0.2 * unit(rng)};
  const auto rows = sim.trajectory(start, config.bounces);
  double drift = 0.0;
  for (const auto& row : rows) drift = std::max(drift, std::abs(row.h - rows.front().h));

  const std::string label = "simulator." + kind_label(kind);
  std::ostringstream where;
  where << "lambda " << describe(sel.lambda) << ", start (" << describe(start.s) << ", "
        << describe(start.p_t) << ")";
  return {make_check(label + ".fixed_point", lin.fixed_point_residual, tol.get("fixed_point")),
          make_check(label + ".det", std::abs(lin.det - 1.0), tol.get("det")),
          make_check(label + ".trace", trace_error, tol.get("trace")),
          make_check(label + ".drift", drift, tol.get("drift"), where.str())};
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyConfig& config) {
  using Task = std::pair<std::string, std::function<Checks()>>;
  const EllipsoidAxes& axes = config.axes;
  const Tolerances& tol = config.tolerances;
  std::vector<Task> tasks{{"zeta", [&] { return check_zeta(tol); }},
                          {"model", [&] { return check_model(tol); }}};
  for (BilliardKind kind : {BilliardKind::First, BilliardKind::Second}) {
    const std::string label = kind_label(kind);
    tasks.push_back({"taylor." + label, [&, kind] { return check_taylor(axes, kind, tol); }});
    tasks.push_back(
        {"cross_path." + label, [&, kind] { return check_cross_path(axes, kind, tol); }});
    tasks.push_back(
        {"certificate." + label, [&, kind] { return check_certificate(axes, kind, tol); }});
    tasks.push_back({"grid." + label,
                     [&, kind] { return check_sign_and_monotonicity(axes, kind, tol); }});
    tasks.push_back(
        {"simulator." + label, [&, kind] { return check_simulator(axes, kind, config); }});
  }

  std::vector<Checks> results(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), config.jobs, [&](int i) {
    try {
      results[i] = tasks[i].second();
    } catch (const std::exception& e) {
      CheckResult failed;
      failed.name = tasks[i].first;
      failed.value = INFINITY;
      failed.detail = e.what();
      results[i] = {failed};
    }
  });

  Checks all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  return all;
}

}  // namespace liouville::cli
