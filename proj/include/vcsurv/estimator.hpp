#pragma once

#include "vcsurv/data.hpp"
#include "vcsurv/kernels.hpp"
#include "vcsurv/quasi_newton.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace vcsurv {

/// Kernel-weighted risk-set moments S^(0), S^(1), S^(2) at one (s, t).
struct WeightedMoments {
  double s0 = 0.0;
  Vector s1;
  Matrix s2;
};

/// Local view of a dataset around a target time s.
///
/// All supported kernels factor as k(dt/h1) k(dr/h2), so
///   S^(l)(t) = k_h1(t - s) * n^-1 * sum_{j: X_j >= t} sum_k k_h2(R_jk - s) Z^l e^{b'Z}.
/// Observations with k_h2 = 0 are dropped once at construction; the rest are
/// sorted by follow-up time (descending) so every risk set is a prefix and the
/// inner sums become prefix sums. Events with zero total kernel weight never
/// contribute and are dropped as well.
class LocalEquation {
 public:
  LocalEquation(const Dataset& data, double s, const BandwidthPair& h, KernelKind kind,
                double eps_denom = 1e-12);

  /// U_n(beta).
  [[nodiscard]] Vector value(const Vector& beta) const;
  /// dU_n/dbeta; symmetric negative semidefinite.
  [[nodiscard]] Matrix jacobian(const Vector& beta) const;
  /// Row r holds the summand of subject contributing_subjects()[r], so that
  /// U_n = n^-1 * column sums. Subjects not listed contribute zero.
  [[nodiscard]] Matrix contributions(const Vector& beta) const;
  [[nodiscard]] WeightedMoments moments(double t, const Vector& beta) const;

  [[nodiscard]] const std::vector<std::size_t>& contributing_subjects() const noexcept {
    return event_subject_;
  }
  [[nodiscard]] std::size_t effective_events() const noexcept { return event_subject_.size(); }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t p() const noexcept { return p_; }
  [[nodiscard]] double s() const noexcept { return s_; }

 private:
  struct Prefix {
    Vector c0;
    Matrix c1;  // m x p
    Matrix c2;  // m x p*p, row-major outer products
  };
  Prefix prefix(const Vector& beta, bool second) const;
  std::size_t risk_count(double t) const;
  void check_denominator(double s0, std::size_t e) const;

  std::size_t n_;
  std::size_t p_;
  double s_;
  BandwidthPair h_;
  KernelKind kind_;
  double eps_denom_;

  std::vector<double> follow_up_;  // descending
  Vector w2_;
  Matrix z_;                        // m x p

  std::vector<std::size_t> event_subject_;
  std::vector<double> event_time_;
  std::vector<double> event_w1_;
  std::vector<double> event_weight_;  // w1 * sum_k w2
  Matrix event_weighted_z_;           // rows: w1 * sum_k w2 Z
  std::vector<std::size_t> event_risk_;
};

[[nodiscard]] WeightedMoments weighted_moments(const Dataset& data, double s, double t,
                                               const Vector& beta, const BandwidthPair& h,
                                               KernelKind kind);

/// S^(1) / S^(0); throws ErrorCode::sparse_region when s0 < eps_denom.
[[nodiscard]] Vector zbar(const WeightedMoments& m, double eps_denom = 1e-12);

[[nodiscard]] Vector estimating_equation(const Dataset& data, double s, const Vector& beta,
                                         const BandwidthPair& h, KernelKind kind);

[[nodiscard]] Matrix jacobian(const Dataset& data, double s, const Vector& beta,
                              const BandwidthPair& h, KernelKind kind);

struct SolveResult {
  Vector beta;
  SolveDiagnostics diagnostics;
};

/// Root of U_n at s by Broyden iteration seeded with the analytic Jacobian.
SolveResult solve_beta(const Dataset& data, double s, const BandwidthPair& h, const Vector& init,
                       const SolverConfig& cfg, KernelKind kind);

enum class SweepDirection { forward, backward };

/// Solves at every grid point, warm-starting from the neighbouring solution in
/// the sweep direction. Failed points are flagged, not fatal; throws
/// ErrorCode::all_points_failed when nothing converges.
CoefficientCurve fit_curve(const Dataset& data, std::span<const double> grid,
                           const BandwidthPair& h, const SolverConfig& cfg, KernelKind kind,
                           SweepDirection direction = SweepDirection::forward);

/// n points equally spaced on [h, tau - h], h = max(h1, h2).
std::vector<double> interior_grid(double tau, const BandwidthPair& h, std::size_t n);

}  // namespace vcsurv
