#pragma once

#include "vcsurv/bandwidth_pair.hpp"

#include <string_view>

namespace vcsurv {

/// Symmetric product kernels K(x, y) = k(x) k(y).
enum class KernelKind { epanechnikov, gaussian, uniform };

/// Accepts "epanechnikov" | "gaussian" | "uniform"; throws ErrorCode::config otherwise.
KernelKind parse_kernel_kind(std::string_view name);
std::string_view to_string(KernelKind kind);

/// Univariate factor k(x); each integrates to one.
[[nodiscard]] double kernel_marginal(KernelKind kind, double x) noexcept;

/// Radius outside which k vanishes (infinity for the gaussian).
[[nodiscard]] double kernel_support(KernelKind kind) noexcept;

[[nodiscard]] double kernel_value(KernelKind kind, double x, double y) noexcept;

/// K_{h1,h2}(dt, dr) = K(dt/h1, dr/h2) / (h1 h2).
[[nodiscard]] double scaled_kernel(KernelKind kind, double dt, double dr, const BandwidthPair& h);

/// k(d/h)/h, the univariate scaled factor.
[[nodiscard]] inline double scaled_marginal(KernelKind kind, double d, double h) noexcept {
  return kernel_marginal(kind, d / h) / h;
}

}  // namespace vcsurv
