#pragma once

#include "vcsurv/data.hpp"
#include "vcsurv/estimator.hpp"
#include "vcsurv/kernels.hpp"
#include "vcsurv/quasi_newton.hpp"

#include <cstddef>
#include <vector>

namespace vcsurv {

/// Last-value-carried-forward local equation with a univariate kernel in event time:
///   U(beta) = n^-1 sum_i K_h1(X_i - s) delta_i [Z~_i(X_i) - Zbar(beta, X_i)],
/// where Z~_j(t) is subject j's last observation at or before t. Subjects with no
/// observation by t are left out of both the numerator and the risk set at t.
class LvcfEquation {
 public:
  LvcfEquation(const Dataset& data, double s, double h1, KernelKind kind,
               double eps_denom = 1e-12);

  [[nodiscard]] Vector value(const Vector& beta) const;
  [[nodiscard]] Matrix jacobian(const Vector& beta) const;
  /// Per contributing subject summands (pre n^-1), in event order.
  [[nodiscard]] Matrix contributions(const Vector& beta) const;
  [[nodiscard]] std::size_t effective_events() const noexcept { return weight_.size(); }

 private:
  template <class Visit>
  void for_each_event(const Vector& beta, bool second, Visit&& visit) const;

  std::size_t n_;
  std::size_t p_;
  double s_;
  double eps_denom_;
  Matrix z_;                                  // every observation, one row each
  std::vector<double> weight_;                // K_h1(X_i - s) per usable event
  std::vector<Eigen::Index> own_;             // row of Z~_i(X_i)
  std::vector<std::vector<Eigen::Index>> risk_;  // rows of Z~_j(X_i) over the risk set
};

SolveResult lvcf_fit(const Dataset& data, double s, double h1, const SolverConfig& cfg,
                     KernelKind kind = KernelKind::epanechnikov, const Vector& init = {});

/// Sandwich covariance of the LVCF estimate at a converged beta.
Matrix lvcf_covariance(const Dataset& data, double s, double h1, const Vector& beta,
                       KernelKind kind = KernelKind::epanechnikov, double eps_denom = 1e-12);

}  // namespace vcsurv
