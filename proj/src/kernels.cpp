#include "vcsurv/kernels.hpp"

#include "vcsurv/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace vcsurv {

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "epanechnikov") return KernelKind::epanechnikov;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "uniform") return KernelKind::uniform;
  throw Error(ErrorCode::config, "unknown kernel '" + std::string(name) + "'", "kernel");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::epanechnikov: return "epanechnikov";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::uniform: return "uniform";
  }
  return "unknown";
}

double kernel_marginal(KernelKind kind, double x) noexcept {
  switch (kind) {
    case KernelKind::epanechnikov:
      return std::abs(x) < 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
    case KernelKind::gaussian:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case KernelKind::uniform:
      return std::abs(x) <= 1.0 ? 0.5 : 0.0;
  }
  return 0.0;
}

double kernel_support(KernelKind kind) noexcept {
  return kind == KernelKind::gaussian ? std::numeric_limits<double>::infinity() : 1.0;
}

double kernel_value(KernelKind kind, double x, double y) noexcept {
  return kernel_marginal(kind, x) * kernel_marginal(kind, y);
}

double scaled_kernel(KernelKind kind, double dt, double dr, const BandwidthPair& h) {
  h.validate();
  return kernel_value(kind, dt / h.h1, dr / h.h2) / (h.h1 * h.h2);
}

}  // namespace vcsurv
