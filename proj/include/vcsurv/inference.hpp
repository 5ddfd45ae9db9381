#pragma once

#include "vcsurv/data.hpp"
#include "vcsurv/estimator.hpp"
#include "vcsurv/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace vcsurv {

enum class MultiplierKind { centered_exponential, rademacher, standard_normal };

MultiplierKind parse_multiplier_kind(std::string_view name);
std::string_view to_string(MultiplierKind kind);

enum class WeightMode { inverse_se, constant };

WeightMode parse_weight_mode(std::string_view name);
std::string_view to_string(WeightMode mode);

/// Sigma-hat = n^-2 sum_i c_i c_i^T over per-subject estimating-equation terms.
Matrix meat_matrix(const Dataset& data, double s, const Vector& beta_hat, const BandwidthPair& h,
                   KernelKind kind);
Matrix meat_matrix(const LocalEquation& eq, const Vector& beta_hat);

/// J^-1 Sigma J^-T.
Matrix sandwich_variance(const Matrix& jac, const Matrix& sigma);

/// Fills curve.cov with the sandwich variance at every converged point.
void estimate_covariance(const Dataset& data, CoefficientCurve& curve);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Normal-approximation intervals; result[i][j] is grid point i, component j.
std::vector<std::vector<Interval>> pointwise_ci(const CoefficientCurve& curve, double alpha);

/// Standard normal quantile.
double normal_quantile(double prob);

Vector draw_multipliers(MultiplierKind kind, std::size_t n, Rng& rng);

/// n^-1 sum_i xi_i c_i.
Vector perturbed_equation(const Dataset& data, double s, const Vector& beta_hat,
                          const BandwidthPair& h, const Vector& xi, KernelKind kind);

/// I(beta) = -dU_n/dbeta.
Matrix scb_information(const Dataset& data, double s, const Vector& beta_hat,
                       const BandwidthPair& h, KernelKind kind);

/// Order statistic ceil((1 - alpha) B) (1-based) of the sample.
double empirical_upper_quantile(std::vector<double> values, double alpha);

struct ScbOptions {
  double alpha = 0.05;
  std::size_t n_boot = 5000;
  MultiplierKind multiplier = MultiplierKind::centered_exponential;
  WeightMode weight_mode = WeightMode::inverse_se;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct ScbResult {
  double alpha = 0.05;
  double c_alpha = 0.0;
  std::vector<double> grid;
  std::vector<double> estimate;  // l^T beta-hat
  std::vector<double> weight;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t n_boot = 0;
  MultiplierKind multiplier = MultiplierKind::centered_exponential;
  Vector contrast;
  std::vector<double> sup_statistics;
};

/// Fills `xi` (length n) with the multipliers of bootstrap draw b.
using MultiplierDraw = std::function<void(std::size_t b, Eigen::Ref<Vector> xi)>;

/// Simultaneous band for l^T beta(s) over the curve grid by the multiplier
/// bootstrap. Requires every grid point converged with covariance attached
/// (see estimate_covariance) when weight_mode is inverse_se.
ScbResult scb(const Dataset& data, const CoefficientCurve& curve, const Vector& contrast,
              const ScbOptions& opts);

/// Same, drawing multipliers from a caller-supplied source.
ScbResult scb(const Dataset& data, const CoefficientCurve& curve, const Vector& contrast,
              const ScbOptions& opts, const MultiplierDraw& draw);

}  // namespace vcsurv
