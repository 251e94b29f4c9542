#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "liouville/ellipsoid.hpp"

namespace liouville::cli {

enum ExitCode : int { kExitSuccess = 0, kExitUsage = 1, kExitVerification = 2 };

/// Named tolerances with their defaults; `--tol NAME=VAL` overrides one.
class Tolerances {
 public:
  Tolerances();

  /// Parses NAME=VAL; throws DomainError on unknown names or VAL <= 0.
  void set_from_string(const std::string& assignment);
  double get(const std::string& name) const;
  const std::map<std::string, double>& all() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

struct LambdaGrid {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  /// Evenly spaced points including both ends.
  std::vector<double> points() const;
};

/// "A0,A1,A2" squared semi-axes.
EllipsoidAxes parse_axes(const std::string& text);
/// "I" or "II".
BilliardKind parse_kind(const std::string& text);
/// "LO:HI:N" with LO < HI and 2 <= N <= 10^4.
LambdaGrid parse_grid(const std::string& text);

std::string kind_label(BilliardKind kind);

/// Shortest-round-trip-safe rendering with 17 significant digits, '.' decimal.
std::string format_number(double value);

nlohmann::ordered_json report_to_json(const TwistReport& report);

/// Runs `body(i)` for i in [0, count) on `jobs` worker threads (0 means the
/// hardware concurrency). Exceptions are captured per index.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured discrepancy or the checked quantity
  double tolerance = 0.0;  // threshold applied to `value`
  std::string detail;
};

struct VerifyConfig {
  EllipsoidAxes axes;
  Tolerances tolerances;
  std::uint64_t seed = 20240601;
  int bounces = 1000;
  int jobs = 0;
};

/// Cross-oracle suite behind the `verify` subcommand.
std::vector<CheckResult> run_verification(const VerifyConfig& config);

/// Entry point shared by the executable and the tests. Writes results to
/// `out` (or to the --out file) and diagnostics to `err`; returns 0, 1 or 2.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liouville::cli
