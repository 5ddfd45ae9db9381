#pragma once

#include <functional>
#include <vector>

namespace vcsurv {

/// Nodes in (-1, 1), ascending, with positive weights summing to 2.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Integral of f over [a, b] by the affine map of this rule.
  [[nodiscard]] double integrate(const std::function<double(double)>& f, double a, double b) const;
};

/// k-point Gauss-Legendre rule, 1 <= k <= 64; exact through degree 2k - 1.
QuadratureRule gauss_legendre(int k);

}  // namespace vcsurv
