#include "vcsurv/quadrature.hpp"

#include "vcsurv/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace vcsurv {

double QuadratureRule::integrate(const std::function<double(double)>& f, double a, double b) const {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
  return half * acc;
}

QuadratureRule gauss_legendre(int k) {
  if (k < 1 || k > 64) {
    throw Error(ErrorCode::config, "Gauss-Legendre order must lie in [1, 64]", "k=" + std::to_string(k));
  }
  QuadratureRule rule;
  rule.nodes.assign(static_cast<std::size_t>(k), 0.0);
  rule.weights.assign(static_cast<std::size_t>(k), 0.0);
  const int half = (k + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess for the i-th largest root, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= k; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double pk = k == 1 ? x : p1;
      const double pkm1 = k == 1 ? 1.0 : p0;
      dp = k * (x * pk - pkm1) / (x * x - 1.0);
      const double dx = pk / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int j = 2; j <= k; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    const double pk = k == 1 ? x : p1;
    const double pkm1 = k == 1 ? 1.0 : p0;
    dp = k * (x * pk - pkm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(k - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (k % 2 == 1) rule.nodes[static_cast<std::size_t>(k / 2)] = 0.0;
  return rule;
}

}  // namespace vcsurv
