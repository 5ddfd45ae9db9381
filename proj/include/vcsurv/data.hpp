#pragma once

#include "vcsurv/kernels.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vcsurv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One subject: follow-up X_i, event flag, and the sparse covariate record
/// Z_i(R_ik) at ascending observation times R_ik (row k of `covariates`).
struct SubjectRecord {
  std::string id;
  double follow_up_time = 0.0;
  bool event = false;
  std::vector<double> obs_times;
  Matrix covariates;

  [[nodiscard]] std::size_t num_obs() const noexcept { return obs_times.size(); }
};

/// Y_i(t) = I(X_i >= t).
[[nodiscard]] bool at_risk(const SubjectRecord& subject, double t) noexcept;

/// The single jump of N_i on [0, tau], if any.
[[nodiscard]] std::optional<double> event_time(const SubjectRecord& subject,
                                               double tau) noexcept;

/// Immutable collection of subjects with a study horizon and covariate dimension.
class Dataset {
 public:
  /// Validates every record; throws ErrorCode::invalid_data on violation.
  Dataset(std::vector<SubjectRecord> subjects, double tau, std::size_t p);

  [[nodiscard]] const std::vector<SubjectRecord>& subjects() const noexcept { return subjects_; }
  [[nodiscard]] const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return subjects_.size(); }
  [[nodiscard]] double tau() const noexcept { return tau_; }
  [[nodiscard]] std::size_t p() const noexcept { return p_; }

  /// Number of subjects whose event falls in [0, tau].
  [[nodiscard]] std::size_t event_count() const noexcept;
  [[nodiscard]] double max_follow_up() const noexcept;

  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
  [[nodiscard]] Dataset with_tau(double tau) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::vector<SubjectRecord> subjects_;
  double tau_;
  std::size_t p_;
};

struct SolveDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  std::size_t effective_events = 0;
  bool converged = false;
  std::string message;
};

/// Estimated beta(s) on a grid. Covariances are NaN until filled by
/// `estimate_covariance` and stay NaN at non-converged points.
struct CoefficientCurve {
  std::vector<double> grid;
  std::vector<Vector> beta;
  std::vector<Matrix> cov;
  std::vector<bool> converged;
  std::vector<SolveDiagnostics> diagnostics;
  BandwidthPair bandwidths;
  KernelKind kernel = KernelKind::epanechnikov;

  [[nodiscard]] std::size_t size() const noexcept { return grid.size(); }
  [[nodiscard]] std::size_t converged_count() const noexcept;
  /// Standard error of component j at grid index i (sqrt of the covariance diagonal).
  [[nodiscard]] double se(std::size_t i, std::size_t j) const;
};

}  // namespace vcsurv
