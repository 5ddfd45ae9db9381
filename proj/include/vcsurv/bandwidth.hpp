#pragma once

#include "vcsurv/bandwidth_pair.hpp"
#include "vcsurv/data.hpp"
#include "vcsurv/kernels.hpp"
#include "vcsurv/quasi_newton.hpp"
#include "vcsurv/random.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vcsurv {

/// Candidate pairs plus the time points the integrated MSE is summed over.
struct BandwidthGrid {
  std::vector<BandwidthPair> pairs;
  std::vector<double> eval_times;

  /// At least 4 valid pairs and nonempty eval_times inside [h_max, tau - h_max].
  void validate(double tau) const;
  [[nodiscard]] double max_bandwidth() const;
};

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t per_axis = 8;
  std::size_t n_eval = 10;
  bool equal = false;  // h1 = h2 only
};

/// Log-spaced values on [lo, hi] per axis (full product, or the diagonal when
/// spec.equal), eval times equally spaced on [h_max, tau - h_max].
BandwidthGrid make_bandwidth_grid(const GridSpec& spec, double tau);

/// Range 9 IQR n^-1/2 .. 9 IQR n^-1/6 of the pooled observation times, with the
/// upper end capped at tau/4 (and the lower end kept below it) so that the
/// interior [h, tau - h] stays wide.
GridSpec default_grid_spec(const Dataset& data);

/// Least-squares slopes of beta-hat on (h1^2, h1 h2, h2^2) with an intercept,
/// one column per coefficient component. When every pair has h1 = h2 the three
/// regressors coincide, so the fit is on h^2 alone and reported in row 0.
/// Throws ErrorCode::degenerate_grid on any other rank deficiency.
Matrix bias_slope(std::span<const BandwidthPair> pairs, std::span<const Vector> estimates);

/// Bias C^T b(h) implied by the slopes.
Vector predicted_bias(const Matrix& slopes, const BandwidthPair& h);

/// (b1 - b2)^2 / 4 componentwise.
Vector half_variance(const Vector& b1, const Vector& b2);

/// Random halving of the subjects (first half gets floor(n/2)).
std::vector<std::size_t> draw_half(std::size_t n, Rng& rng);

/// Fits beta(t) on a random half and its complement; redraws the split up to 5
/// times when a half fails, then throws ErrorCode::split_failure.
Vector split_half_variance(const Dataset& data, const BandwidthPair& h, double t, Rng& rng,
                           const SolverConfig& cfg, KernelKind kind = KernelKind::epanechnikov);

struct BandwidthSelection {
  BandwidthPair chosen;
  std::vector<BandwidthPair> pairs;
  std::vector<double> mse;      // summed over eval times; NaN for infeasible pairs
  std::vector<double> bias_sq;  // squared-bias part of mse
  std::vector<double> variance; // split-half part of mse
  std::vector<bool> feasible;
};

struct SelectionOptions {
  KernelKind kind = KernelKind::epanechnikov;
  std::size_t splits = 1;  // independent splits averaged for V-hat
  unsigned threads = 1;
};

/// fits[a][j]: result for pair a at eval time j, nullopt when the fit failed.
using FitTable = std::vector<std::vector<std::optional<Vector>>>;

/// Scoring half of select_bandwidth on precomputed full-data estimates and
/// split-half variances.
BandwidthSelection score_bandwidths(std::span<const BandwidthPair> pairs,
                                    std::span<const double> eval_times, const FitTable& estimates,
                                    const FitTable& variances);

/// Minimizes sum_t [ |C-hat(t)^T b(h)|^2 + V-hat(h, t) ] over the grid. A pair is
/// infeasible if any of its fits fails at any eval time; ties go to the larger
/// h1 h2. Throws ErrorCode::selection_failure when no pair is feasible.
BandwidthSelection select_bandwidth(const Dataset& data, const BandwidthGrid& grid, Rng& rng,
                                    const SolverConfig& cfg, const SelectionOptions& opts = {});

}  // namespace vcsurv
