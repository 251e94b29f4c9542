#include "liouville/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace liouville::detail {

namespace {

// Beyond t = 4.5 the complement is below 1e-60; even an inverse-square-root
// singularity contributes nothing measurable there.
constexpr double kMaxAbscissa = 4.5;

struct LevelStorage {
  std::vector<double> complement;
  std::vector<double> weight;
  bool has_center = false;
};

void push_node(LevelStorage& level, double t) {
  const double u = 0.5 * std::numbers::pi * std::sinh(t);
  const double cu = std::cosh(u);
  level.complement.push_back(std::exp(-u) / cu);  // 1 - tanh(u)
  level.weight.push_back(0.5 * std::numbers::pi * std::cosh(t) / (cu * cu));
}

std::array<LevelStorage, kMaxLevel + 1> build_tables() {
  std::array<LevelStorage, kMaxLevel + 1> tables;
  LevelStorage& zero = tables[0];
  zero.has_center = true;
  push_node(zero, 0.0);
  for (int j = 1; j <= static_cast<int>(kMaxAbscissa); ++j) push_node(zero, j);
  for (int level = 1; level <= kMaxLevel; ++level) {
    const double h = tanh_sinh_step(level);
    for (long j = 1;; j += 2) {
      const double t = j * h;
      if (t > kMaxAbscissa) break;
      push_node(tables[level], t);
    }
  }
  return tables;
}

}  // namespace

TanhSinhLevel tanh_sinh_level(int level) {
  static const std::array<LevelStorage, kMaxLevel + 1> tables = build_tables();
  const LevelStorage& storage = tables.at(static_cast<std::size_t>(level));
  return {storage.complement, storage.weight, storage.has_center};
}

}  // namespace liouville::detail
