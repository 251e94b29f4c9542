#include "liouville/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kAgmTolerance = 1e-16;
constexpr int kAgmMaxIterations = 32;
constexpr double kModulusAccuracyLimit = 1e-10;

// Result of running the Gauss AGM on (1, k') with c_0 = k.
//   agm        - the common limit M(1, k')
//   weighted   - sum_{n>=1} 2^(n-1) c_n^2   (the c_0 term is kept separate)
struct AgmSequence {
  double agm;
  double weighted;
};

AgmSequence run_agm(double k) {
  double a = 1.0;
  double b = std::sqrt((1.0 - k) * (1.0 + k));
  double weighted = 0.0;
  double power = 0.5;
  for (int n = 1; n <= kAgmMaxIterations; ++n) {
    const double c = 0.5 * (a - b);
    const double next_a = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = next_a;
    power *= 2.0;
    weighted += power * c * c;
    if (std::abs(a - b) <= kAgmTolerance * a) break;
  }
  return {0.5 * (a + b), weighted};
}

void require_modulus(double k, double upper, bool upper_inclusive,
                     const char* name) {
  const bool ok = std::isfinite(k) && k >= 0.0 &&
                  (upper_inclusive ? k <= upper : k < upper);
  if (!ok) {
    throw DomainError(std::string(name) + ": modulus " + std::to_string(k) +
                      " outside its domain");
  }
}

}  // namespace

double elliptic_K(double k) {
  require_modulus(k, 1.0, false, "elliptic_K");
  if (k > 1.0 - kModulusAccuracyLimit) {
    throw AccuracyError("elliptic_K: modulus too close to 1 for full accuracy");
  }
  return std::numbers::pi / (2.0 * run_agm(k).agm);
}

double elliptic_E(double k) {
  require_modulus(k, 1.0, true, "elliptic_E");
  if (k == 1.0) return 1.0;
  const AgmSequence seq = run_agm(k);
  const double K = std::numbers::pi / (2.0 * seq.agm);
  // E = K (1 - sum_{n>=0} 2^(n-1) c_n^2) with c_0 = k.
  return K * (1.0 - 0.5 * k * k - seq.weighted);
}

double zeta_Z(double k) {
  if (!(std::isfinite(k) && k > 0.0 && k < 1.0)) {
    throw DomainError("zeta_Z: modulus must lie in (0, 1)");
  }
  if (k > 1.0 - kModulusAccuracyLimit) {
    throw AccuracyError("zeta_Z: modulus too close to 1 for full accuracy");
  }
  const AgmSequence seq = run_agm(k);
  const double K = std::numbers::pi / (2.0 * seq.agm);
  // E/(1-k^2) - K = (k^2 K - (K - E)) / (1 - k^2) and K - E = K sum 2^(n-1) c_n^2.
  return K * (0.5 * k * k - seq.weighted) / ((1.0 - k) * (1.0 + k));
}

}  // namespace liouville
