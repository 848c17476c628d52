#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "iffd/errors.hpp"

namespace iffd {

struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  int size() const noexcept { return static_cast<int>(points.size()); }
};

inline constexpr int kMaxGaussPoints = 32;

/// q-point Gauss–Legendre rule on [0,1]; exact up to degree 2q-1.
inline QuadratureRule gauss_rule(int q) {
  if (q < 1 || q > kMaxGaussPoints)
    throw InvalidArgument("gauss_rule: point count must be in 1.." + std::to_string(kMaxGaussPoints));
  QuadratureRule rule{std::vector<double>(q), std::vector<double>(q)};
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= q; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = q * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= q; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = q * (x * p0 - p1) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1,1] -> [0,1], ascending order
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[q - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[q - 1 - i] = 0.5 * w;
  }
  if (q % 2 == 1) rule.points[q / 2] = 0.5;
  return rule;
}

}  // namespace iffd
