#pragma once

#include "vcsurv/data.hpp"
#include "vcsurv/quadrature.hpp"
#include "vcsurv/random.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace vcsurv {

enum class Beta0Shape {
  sine,        // 0.5 sin(2 pi t)
  quadratic,   // 3 (0.5 - t)^2 + 0.25
  exp_decay,   // exp(-2t - 0.5)
  constant,    // beta0_constant
};

enum class ObservationProcess {
  homogeneous,          // Pois(5) + 1 times, iid U(0, 1)
  quadratic_intensity,  // Poisson process with rate 8 (0.75 + (0.5 - t)^2)
};

Beta0Shape parse_beta0_shape(std::string_view name);
std::string_view to_string(Beta0Shape shape);
ObservationProcess parse_observation_process(std::string_view name);
std::string_view to_string(ObservationProcess process);

/// Data-generating scenario on the unit horizon (tau = 1), scalar covariate.
struct ScenarioConfig {
  std::size_t n = 400;
  Beta0Shape beta0 = Beta0Shape::sine;
  double beta0_constant = 0.0;
  double lambda0_intercept = 2.0;  // lambda0(t) = intercept + slope * t
  double lambda0_slope = 0.1;
  double censor_target = 0.15;
  ObservationProcess obs_process = ObservationProcess::homogeneous;
  int n_pieces = 20;
  int quadrature_order = 10;
  /// Drop observation times after the subject's follow-up time.
  bool truncate_at_follow_up = false;
  std::uint64_t seed = 20240601;
  std::size_t replications = 1000;

  void validate() const;
};

struct HazardModel {
  Beta0Shape shape = Beta0Shape::sine;
  double constant = 0.0;
  double lambda_intercept = 2.0;
  double lambda_slope = 0.1;

  static HazardModel from(const ScenarioConfig& cfg);
  [[nodiscard]] double beta0(double t) const noexcept;
  [[nodiscard]] double baseline(double t) const noexcept;
};

/// Piecewise-constant path: level i on [i/P, (i+1)/P), clamped outside [0, 1).
class CovariatePath {
 public:
  explicit CovariatePath(std::vector<double> levels);

  [[nodiscard]] double operator()(double t) const noexcept;
  [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }
  [[nodiscard]] std::size_t pieces() const noexcept { return levels_.size(); }

 private:
  std::vector<double> levels_;
};

/// Gaussian levels with mean -1 - 2(i/P - 1)^2 and covariance exp(-|i - j|/P),
/// sampled through a Cholesky factor computed once per model.
class CovariateModel {
 public:
  explicit CovariateModel(int pieces);
  CovariatePath sample(Rng& rng) const;
  [[nodiscard]] const Vector& mean() const noexcept { return mean_; }
  [[nodiscard]] const Matrix& covariance() const noexcept { return cov_; }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
};

CovariatePath gen_covariate_path(const ScenarioConfig& cfg, Rng& rng);

/// Lambda(t) = int_0^t lambda0(v) exp(beta0(v) Z(v)) dv, by the rule on every
/// covariate piece intersecting [0, t].
double cumulative_hazard(const CovariatePath& path, const HazardModel& model, double t,
                         const QuadratureRule& rule);

/// Solves Lambda(T) = -log(u) on [0, 1]; nullopt when T lies beyond the horizon.
std::optional<double> failure_time_from_uniform(const CovariatePath& path, const HazardModel& model,
                                                double u, const QuadratureRule& rule);
std::optional<double> gen_failure_time(const CovariatePath& path, const HazardModel& model,
                                       Rng& rng, const QuadratureRule& rule);

/// Ascending observation times in (0, 1).
std::vector<double> gen_observation_schedule(const ScenarioConfig& cfg, Rng& rng);

/// Fraction censored (delta = 0) for a given gamma, C* ~ U(gamma, 1.5), using
/// `subjects` simulated subjects from the calibration stream of `seed`.
double realized_censoring(const ScenarioConfig& cfg, double gamma, std::uint64_t seed,
                          std::size_t subjects = 20000);

/// Bisection for gamma in [-1.5, 1.5] hitting cfg.censor_target within 0.005
/// (common random numbers across gamma). Throws ErrorCode::calibration_failure.
double calibrate_gamma(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t subjects = 20000);

/// One synthetic dataset with tau = 1 and p = 1.
Dataset simulate_dataset(const ScenarioConfig& cfg, double gamma, Rng& rng);

}  // namespace vcsurv
