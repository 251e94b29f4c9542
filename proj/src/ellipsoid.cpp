#include "liouville/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "liouville/errors.hpp"
#include "liouville/quadrature.hpp"
#include "liouville/special_functions.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kAxesMargin = 1e-12;
constexpr int kMonotonicitySamples = 64;
constexpr double kMonotonicitySlack = 1e-10;

bool is_first(BilliardKind kind) { return kind == BilliardKind::First; }

std::string kind_name(BilliardKind kind) { return is_first(kind) ? "first" : "second"; }

// Distance from the real axis of the complex theta solving sin^2(theta) = rho,
// for rho outside [0, 1]. Used to size Gauss-Legendre panels.
double singularity_distance(double rho) {
  return rho < 0.0 ? std::asinh(std::sqrt(-rho)) : std::acosh(std::sqrt(rho));
}

}  // namespace

// ---------------------------------------------------------------------------

EllipsoidAxes::EllipsoidAxes(double a0, double a1, double a2) : a_{a0, a1, a2} {
  for (double a : a_) {
    if (!std::isfinite(a)) throw DomainError("axes must be finite");
  }
  const double margin = kAxesMargin * std::abs(a2);
  if (!(a0 > 0.0 && a1 - a0 > margin && a2 - a1 > margin)) {
    throw DomainError("axes must satisfy 0 < a0 < a1 < a2 (got " + std::to_string(a0) +
                      ", " + std::to_string(a1) + ", " + std::to_string(a2) + ")");
  }
}

std::pair<double, double> lambda_interval(const EllipsoidAxes& axes, BilliardKind kind) {
  return is_first(kind) ? std::pair{axes.a0(), axes.a1()} : std::pair{axes.a1(), axes.a2()};
}

void validate_selector(const EllipsoidAxes& axes, const BilliardSelector& selector) {
  const auto [lo, hi] = lambda_interval(axes, selector.kind);
  if (!(selector.lambda > lo && selector.lambda < hi)) {
    throw DomainError("lambda = " + std::to_string(selector.lambda) + " outside (" +
                      std::to_string(lo) + ", " + std::to_string(hi) + ") for a " +
                      kind_name(selector.kind) + "-type billiard");
  }
}

// ---------------------------------------------------------------------------

Eigen::Vector3d elliptic_to_cartesian(const EllipsoidAxes& axes, double u1, double u2,
                                      const OctantSigns& signs) {
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  if (!(a0 <= u1 && u1 <= a1 && a1 <= u2 && u2 <= a2)) {
    throw DomainError("elliptic coordinates must satisfy a0 <= u1 <= a1 <= u2 <= a2");
  }
  for (int s : signs) {
    if (s != 1 && s != -1) throw DomainError("octant signs must be +1 or -1");
  }
  const double x0 = std::sqrt(a0 * (u1 - a0) * (u2 - a0) / ((a1 - a0) * (a2 - a0)));
  const double x1 = std::sqrt(a1 * (a1 - u1) * (u2 - a1) / ((a1 - a0) * (a2 - a1)));
  const double x2 = std::sqrt(a2 * (a2 - u1) * (a2 - u2) / ((a2 - a0) * (a2 - a1)));
  return {signs[0] * x0, signs[1] * x1, signs[2] * x2};
}

std::pair<double, double> cartesian_to_elliptic(const EllipsoidAxes& axes,
                                                const Eigen::Vector3d& p) {
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  const double constraint = p[0] * p[0] / a0 + p[1] * p[1] / a1 + p[2] * p[2] / a2 - 1.0;
  if (!(std::abs(constraint) <= 1e-8)) {
    throw DomainError("cartesian_to_elliptic: point is off the ellipsoid (residual " +
                      std::to_string(constraint) + ")");
  }
  // Clearing denominators in sum p_i^2 / (a_i - u) = 1 leaves u times the
  // quadratic u^2 - (S - |p|^2) u + (e2 - sum p_i^2 (S - a_i)).
  const double s = a0 + a1 + a2;
  const double e2 = a0 * a1 + a0 * a2 + a1 * a2;
  const double sum = s - p.squaredNorm();
  const double product = e2 - p[0] * p[0] * (s - a0) - p[1] * p[1] * (s - a1) -
                         p[2] * p[2] * (s - a2);
  double disc = sum * sum - 4.0 * product;
  if (disc < 0.0) {
    if (disc < -1e-10 * a2 * a2) {
      throw DomainError("cartesian_to_elliptic: negative discriminant");
    }
    disc = 0.0;
  }
  const double u2 = 0.5 * (sum + std::sqrt(disc));
  const double u1 = u2 > 0.0 ? product / u2 : 0.5 * sum;
  return {std::clamp(u1, a0, a1), std::clamp(u2, a1, a2)};
}

// ---------------------------------------------------------------------------

// int_0^theta g for a smooth positive g on [0, pi/2], by composite 20-point
// Gauss-Legendre on equal panels; the cumulative values at panel edges are
// cached so each evaluation costs one panel.
class EllipticChart::ThetaIntegral {
 public:
  ThetaIntegral(std::function<double(double)> g, double singularity)
      : g_(std::move(g)) {
    const int panels = std::clamp(static_cast<int>(std::ceil(kHalfPi / singularity)), 2, 4096);
    width_ = kHalfPi / panels;
    cumulative_.assign(static_cast<std::size_t>(panels) + 1, 0.0);
    for (int k = 0; k < panels; ++k) {
      cumulative_[k + 1] = cumulative_[k] + panel(k * width_, (k + 1) * width_);
    }
  }

  double total() const { return cumulative_.back(); }

  double operator()(double theta) const {
    const int k = panel_index(theta);
    return cumulative_[k] + panel(k * width_, theta);
  }

  double derivative(double theta) const { return g_(theta); }

  double inverse(double value) const {
    if (value <= 0.0) return 0.0;
    if (value >= total()) return kHalfPi;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), value);
    const int k = static_cast<int>(it - cumulative_.begin()) - 1;
    double lo = k * width_;
    double hi = std::min(kHalfPi, (k + 1) * width_);
    double theta = lo + width_ * (value - cumulative_[k]) / (cumulative_[k + 1] - cumulative_[k]);
    constexpr int kMaxIterations = 60;
    for (int it_count = 0; it_count < kMaxIterations; ++it_count) {
      const double residual = cumulative_[k] + panel(k * width_, theta) - value;
      if (residual == 0.0) return theta;
      if (residual > 0.0) {
        hi = theta;
      } else {
        lo = theta;
      }
      double next = theta - residual / g_(theta);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - theta) <= 2.0 * std::numeric_limits<double>::epsilon() * kHalfPi ||
          hi - lo <= std::numeric_limits<double>::epsilon() * kHalfPi) {
        return next;
      }
      theta = next;
    }
    throw ConvergenceError("chart inversion did not converge");
  }

 private:
  int panel_index(double theta) const {
    const int last = static_cast<int>(cumulative_.size()) - 2;
    return std::clamp(static_cast<int>(theta / width_), 0, last);
  }

  double panel(double a, double b) const {
    if (b == a) return 0.0;
    return boost::math::quadrature::gauss<double, 20>::integrate(g_, a, b);
  }

  std::function<double(double)> g_;
  double width_ = 0.0;
  std::vector<double> cumulative_;
};

EllipticChart::EllipticChart(const EllipsoidAxes& axes, BilliardKind frame)
    : axes_(axes), frame_(frame) {
  if (is_first(frame)) {
    c_ = {axes.a0(), axes.a1(), axes.a2()};
    sigma_ = 1.0;
  } else {
    c_ = {-axes.a2(), -axes.a1(), -axes.a0()};
    sigma_ = -1.0;
  }
  const double c0 = c_[0], c1 = c_[1], c2 = c_[2], sigma = sigma_;

  // v = c1 + (c2 - c1) sin^2: dX/dtheta = sqrt(sigma v / (v - c0)).
  const double x_span = c2 - c1;
  auto gx = [=](double theta) {
    const double s = std::sin(theta);
    const double v = c1 + x_span * s * s;
    return std::sqrt(sigma * v / ((c1 - c0) + x_span * s * s));
  };
  const double dx = std::min(singularity_distance(-(c1 - c0) / x_span),
                             singularity_distance(-c1 / x_span));
  x_integral_ = std::make_unique<ThetaIntegral>(gx, dx);

  // v = c1 - (c1 - c0) sin^2: dY/dtheta = sqrt(sigma v / (c2 - v)).
  const double y_span = c1 - c0;
  auto gy = [=](double theta) {
    const double s = std::sin(theta);
    const double v = c1 - y_span * s * s;
    return std::sqrt(sigma * v / ((c2 - c1) + y_span * s * s));
  };
  const double dy = std::min(singularity_distance(-(c2 - c1) / y_span),
                             singularity_distance(c1 / y_span));
  y_integral_ = std::make_unique<ThetaIntegral>(gy, dy);
}

EllipticChart::~EllipticChart() = default;

double EllipticChart::X(double v) const {
  const double c1 = c_[1], c2 = c_[2];
  if (!(v >= c1 && v <= c2)) throw DomainError("chart X: argument outside [c1, c2]");
  return (*x_integral_)(std::atan2(std::sqrt(v - c1), std::sqrt(c2 - v)));
}

double EllipticChart::Y(double v) const {
  const double c0 = c_[0], c1 = c_[1];
  if (!(v >= c0 && v <= c1)) throw DomainError("chart Y: argument outside [c0, c1]");
  return (*y_integral_)(std::atan2(std::sqrt(c1 - v), std::sqrt(v - c0)));
}

double EllipticChart::quarter_period_x() const { return x_integral_->total(); }
double EllipticChart::quarter_period_y() const { return y_integral_->total(); }

double EllipticChart::f(double x) const {
  const double quarter = quarter_period_x();
  double r = std::fmod(std::abs(x), 2.0 * quarter);
  if (r > quarter) r = 2.0 * quarter - r;
  const double theta = x_integral_->inverse(r);
  const double span = c_[2] - c_[1];
  if (theta <= 0.5 * kHalfPi) {
    const double s = std::sin(theta);
    return c_[1] + span * s * s;
  }
  const double c = std::cos(theta);
  return c_[2] - span * c * c;
}

double EllipticChart::q(double y) const {
  const double quarter = quarter_period_y();
  const double r = std::abs(y);
  if (!(r <= quarter * (1.0 + 1e-12))) throw DomainError("chart q: |y| beyond omega2/4");
  const double theta = y_integral_->inverse(std::min(r, quarter));
  const double span = c_[1] - c_[0];
  if (theta <= 0.5 * kHalfPi) {
    const double s = std::sin(theta);
    return c_[1] - span * s * s;
  }
  const double c = std::cos(theta);
  return c_[0] + span * c * c;
}

double chart_X(const EllipsoidAxes& axes, double u2) {
  return EllipticChart(axes, BilliardKind::First).X(u2);
}

double chart_Y(const EllipsoidAxes& axes, double u1) {
  return EllipticChart(axes, BilliardKind::First).Y(u1);
}

LiouvilleProfile chart_profile(const EllipsoidAxes& axes, const BilliardSelector& selector) {
  validate_selector(axes, selector);
  auto chart = std::make_shared<const EllipticChart>(axes, selector.kind);
  const double frame_lambda = is_first(selector.kind) ? selector.lambda : -selector.lambda;
  LiouvilleProfile p;
  p.f = [chart](double x) { return chart->f(x); };
  p.q = [chart](double y) { return chart->q(y); };
  p.period = 4.0 * chart->quarter_period_x();
  p.half_width = chart->Y(frame_lambda);
  p.base = chart->c1();
  return p;
}

// ---------------------------------------------------------------------------

TaylorData taylor_closed_form(const EllipsoidAxes& axes, BilliardKind kind) {
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  if (is_first(kind)) {
    const double g = (a2 - a0) * (a2 - a1);
    return TaylorData::from_coefficients(a2, -g / a2,
                                         g * (a2 * a2 - a0 * a1) / (3.0 * a2 * a2 * a2));
  }
  const double g = (a2 - a0) * (a1 - a0);
  return TaylorData::from_coefficients(-a0, -g / a0,
                                       g * (a2 * a1 - a0 * a0) / (3.0 * a0 * a0 * a0));
}

namespace {

// The two integrals of the rotation/twist formulas with lambda allowed to sit
// on the interval ends (used for limits and root bracketing).
struct ClosedFormIntegrals {
  const EllipsoidAxes& axes;
  BilliardKind kind;
  TaylorData taylor;

  ClosedFormIntegrals(const EllipsoidAxes& a, BilliardKind k)
      : axes(a), kind(k), taylor(taylor_closed_form(a, k)) {}

  double rotation(double lambda) const {
    const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
    double integral = 0.0;
    if (is_first(kind)) {
      if (lambda >= a1) return 0.0;
      const double gap0 = lambda - a0;
      auto g = [=](double t, double from_lambda, double to_a1) {
        return std::sqrt(t) /
               (std::sqrt((gap0 + from_lambda) * to_a1) * ((a2 - a1) + to_a1));
      };
      integral = integrate_singular(g, lambda, a1).value;
    } else {
      if (lambda <= a1) return 0.0;
      const double gap2 = a2 - lambda;
      auto g = [=](double s, double from_a1, double to_lambda) {
        return std::sqrt(s) /
               (std::sqrt((gap2 + to_lambda) * from_a1) * ((a1 - a0) + from_a1));
      };
      integral = integrate_singular(g, a1, lambda).value;
    }
    return -std::sqrt(-taylor.alpha1) / kPi * integral;
  }

  double twist(double lambda) const {
    const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
    const double kappa = taylor.kappa;
    double integral = 0.0;
    if (is_first(kind)) {
      if (lambda >= a1) return 0.0;
      const double gap0 = lambda - a0;
      auto g = [=](double t, double from_lambda, double to_a1) {
        const double d2 = (a2 - a1) + to_a1;
        return std::sqrt(t) * (2.0 - kappa * d2) /
               (std::sqrt((gap0 + from_lambda) * to_a1) * d2 * d2);
      };
      integral = integrate_singular(g, lambda, a1).value;
    } else {
      if (lambda <= a1) return 0.0;
      const double gap2 = a2 - lambda;
      auto g = [=](double s, double from_a1, double to_lambda) {
        const double d0 = (a1 - a0) + from_a1;
        return std::sqrt(s) * (2.0 - kappa * d0) /
               (std::sqrt((gap2 + to_lambda) * from_a1) * d0 * d0);
      };
      integral = integrate_singular(g, a1, lambda).value;
    }
    return taylor.alpha1 / (4.0 * kPi * kPi) * integral;
  }

  double far_end() const { return is_first(kind) ? axes.a0() : axes.a2(); }
};

}  // namespace

double rotation_closed_form(const EllipsoidAxes& axes, const BilliardSelector& selector) {
  validate_selector(axes, selector);
  return ClosedFormIntegrals(axes, selector.kind).rotation(selector.lambda);
}

double twist_closed_form(const EllipsoidAxes& axes, const BilliardSelector& selector) {
  validate_selector(axes, selector);
  return ClosedFormIntegrals(axes, selector.kind).twist(selector.lambda);
}

double rotation_endpoint_limit(const EllipsoidAxes& axes, BilliardKind kind) {
  const ClosedFormIntegrals forms(axes, kind);
  return -forms.rotation(forms.far_end());
}

// ---------------------------------------------------------------------------

SignCertificate sign_certificate(const EllipsoidAxes& axes, BilliardKind kind,
                                 double relative_tolerance) {
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  SignCertificate cert;
  cert.kind = kind;
  if (!is_first(kind)) {
    cert.vanishing_point = a0 + 2.0 * a0 * (a2 - a0) * (a1 - a0) / (a2 * a1 - a0 * a0);
    if (!(cert.vanishing_point < a1)) {
      throw CertificateError("s* = " + std::to_string(cert.vanishing_point) +
                             " is not below a1");
    }
    cert.passed = true;
    return cert;
  }

  cert.vanishing_point = a2 - 2.0 * a2 * (a2 - a0) * (a2 - a1) / (a2 * a2 - a0 * a1);
  if (!(cert.vanishing_point < a1)) {
    throw CertificateError("t* = " + std::to_string(cert.vanishing_point) +
                           " is not below a1");
  }

  const double kappa = taylor_closed_form(axes, kind).kappa;
  auto g = [=](double t, double from_a0, double to_a1) {
    const double d2 = (a2 - a1) + to_a1;
    return std::sqrt(t) * (2.0 - kappa * d2) / (std::sqrt(from_a0 * to_a1) * d2 * d2);
  };
  cert.e1_quadrature = integrate_singular(g, a0, a1).value;

  cert.modulus = std::sqrt((a1 - a0) / a1);
  const double big_k = elliptic_K(cert.modulus);
  const double big_e = elliptic_E(cert.modulus);
  const double combination = (a2 / a0) * big_e - big_k;
  cert.e1_elliptic = 2.0 * a0 * std::sqrt(a1) / (a2 * (a2 - a0) * (a2 - a1)) * combination;
  cert.e1_relative_error =
      std::abs(cert.e1_quadrature - cert.e1_elliptic) / std::abs(cert.e1_elliptic);
  cert.zeta = zeta_Z(cert.modulus);

  if (!(cert.e1_relative_error <= relative_tolerance)) {
    throw CertificateError("twist integral over (a0, a1): quadrature and elliptic forms differ by " +
                           std::to_string(cert.e1_relative_error) + " (relative)");
  }
  if (!(cert.zeta > 0.0 && combination > cert.zeta && cert.e1_quadrature > 0.0)) {
    throw CertificateError("twist integral over (a0, a1) is not certified positive");
  }
  cert.passed = true;
  return cert;
}

RotationBounds rotation_bound(const EllipsoidAxes& axes, BilliardKind kind) {
  const double a0 = axes.a0(), a1 = axes.a1(), a2 = axes.a2();
  RotationBounds b;
  if (is_first(kind)) {
    b.supremum = std::sqrt(a1 / a2);
    return b;
  }
  b.supremum = std::sqrt(a2 * (a2 - a0) / (a0 * (a1 - a0)));
  b.right_limit_lower = std::sqrt(a1 * (a1 - a0) / (a0 * (a2 - a0)));
  b.has_right_limit_lower = true;
  return b;
}

// ---------------------------------------------------------------------------

std::vector<ExceptionalBilliard> exceptional_lambdas(const EllipsoidAxes& axes,
                                                     BilliardKind kind,
                                                     double residual_tolerance) {
  const ClosedFormIntegrals forms(axes, kind);
  const auto [lo, hi] = lambda_interval(axes, kind);
  const double sense = is_first(kind) ? -1.0 : 1.0;  // direction of -rotation in lambda

  // Root finding below relies on strict monotonicity; confirm it on a sample.
  const std::vector<double> grid = certification_grid(lo, hi, kMonotonicitySamples);
  double previous = -forms.rotation(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double current = -forms.rotation(grid[i]);
    if (sense * (current - previous) < -kMonotonicitySlack) {
      throw CertificateError("rotation is not monotone in lambda near " +
                             std::to_string(grid[i]));
    }
    previous = current;
  }

  const double limit = rotation_endpoint_limit(axes, kind);
  std::vector<ExceptionalBilliard> out;
  for (int whole = 0; whole < limit; ++whole) {
    for (double part : {0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75, 1.0}) {
      const double target = whole + part;
      if (!(target < limit)) continue;
      auto residual = [&](double lambda) { return -forms.rotation(lambda) - target; };
      double root = find_root_monotone(residual, lo, hi, 1e-15 * (hi - lo));
      root = std::clamp(root, std::nextafter(lo, hi), std::nextafter(hi, lo));

      ExceptionalBilliard e;
      e.lambda = root;
      e.target = target;
      e.rotation = rotation_closed_form(axes, {kind, root});
      e.residual = std::abs(e.rotation + target);
      e.integer_resonance = part == 1.0;
      if (!(e.residual < residual_tolerance)) {
        throw CertificateError("resonance root for target " + std::to_string(target) +
                               " fails its residual check (" + std::to_string(e.residual) +
                               ")");
      }
      out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ExceptionalBilliard& l, const ExceptionalBilliard& r) {
              return l.lambda < r.lambda;
            });
  return out;
}

// ---------------------------------------------------------------------------

TwistReport full_report(const EllipsoidAxes& axes, const BilliardSelector& selector,
                        double resonance_tolerance, double certificate_tolerance) {
  validate_selector(axes, selector);
  const ClosedFormIntegrals forms(axes, selector.kind);
  const double rotation = forms.rotation(selector.lambda);
  const double twist = forms.twist(selector.lambda);
  TwistReport report{axes,
                     selector,
                     forms.taylor,
                     rotation,
                     twist,
                     classify(rotation, twist, resonance_tolerance),
                     rotation_bound(axes, selector.kind),
                     sign_certificate(axes, selector.kind, certificate_tolerance)};

  if (!(rotation < 0.0 && -rotation < report.bound.supremum)) {
    throw CertificateError("rotation " + std::to_string(rotation) +
                           " violates 0 < -rotation < " +
                           std::to_string(report.bound.supremum));
  }
  const bool sign_ok = is_first(selector.kind) ? twist < 0.0 : twist > 0.0;
  if (!sign_ok) {
    throw CertificateError("twist " + std::to_string(twist) + " has the wrong sign for a " +
                           kind_name(selector.kind) + "-type billiard");
  }
  return report;
}

std::vector<double> certification_grid(double lo, double hi, int count, double shrink) {
  if (!(lo < hi) || count < 1 || !(shrink >= 0.0 && shrink < 0.5)) {
    throw DomainError("certification_grid: invalid arguments");
  }
  const double length = hi - lo;
  const double a = lo + shrink * length;
  const double b = hi - shrink * length;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    grid[j] = mid - half * std::cos(kPi * (2.0 * j + 1.0) / (2.0 * count));
  }
  return grid;
}

}  // namespace liouville
