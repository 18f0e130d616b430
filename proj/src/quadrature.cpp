#include "tiered/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tiered/errors.hpp"

namespace tiered {

TimeGrid TimeGrid::covering(double t_max, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ValidationError("final time must be non-negative");
  const double r = t_max / dt;
  std::size_t steps = static_cast<std::size_t>(std::llround(r));
  if (static_cast<double>(steps) < r * (1.0 - 1e-12)) ++steps;
  return TimeGrid{dt, steps};
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ValidationError("quadrature needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

QuadratureRule trapezoid_weights(const std::vector<double>& x) {
  QuadratureRule rule;
  rule.nodes = x;
  rule.weights.assign(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double h = x[i + 1] - x[i];
    if (!(h > 0.0)) throw ValidationError("tabulated abscissae must be strictly increasing");
    rule.weights[i] += 0.5 * h;
    rule.weights[i + 1] += 0.5 * h;
  }
  return rule;
}

RVector cumulative_trapezoid(const RVector& y, double h) {
  RVector out(y.size());
  if (y.size() == 0) return out;
  out(0) = 0.0;
  for (Eigen::Index k = 1; k < y.size(); ++k) out(k) = out(k - 1) + 0.5 * h * (y(k - 1) + y(k));
  return out;
}

}  // namespace tiered
