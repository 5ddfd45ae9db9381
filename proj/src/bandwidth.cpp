#include "vcsurv/bandwidth.hpp"

#include "vcsurv/errors.hpp"
#include "vcsurv/estimator.hpp"
#include "vcsurv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace vcsurv {

namespace {

constexpr int kMaxRedraws = 5;

std::vector<double> log_spaced(double lo, double hi, std::size_t k) {
  if (k == 1) return {std::sqrt(lo * hi)};
  std::vector<double> out(k);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(k - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

bool all_equal_pairs(std::span<const BandwidthPair> pairs) {
  return std::all_of(pairs.begin(), pairs.end(),
                     [](const BandwidthPair& h) { return h.h1 == h.h2; });
}

std::optional<Vector> try_solve(const Dataset& data, double t, const BandwidthPair& h,
                                const SolverConfig& cfg, KernelKind kind) {
  try {
    return solve_beta(data, t, h, Vector::Zero(static_cast<Eigen::Index>(data.p())), cfg, kind)
        .beta;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<Dataset> try_subset(const Dataset& data, std::span<const std::size_t> idx) {
  try {
    return data.subset(idx);
  } catch (const Error&) {
    return std::nullopt;  // a half without events
  }
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> half) {
  std::vector<bool> in(n, false);
  for (const auto i : half) in[i] = true;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

double BandwidthGrid::max_bandwidth() const {
  double m = 0.0;
  for (const auto& h : pairs) m = std::max(m, h.max());
  return m;
}

void BandwidthGrid::validate(double tau) const {
  if (pairs.size() < 4) {
    throw Error(ErrorCode::config, "bandwidth grid needs at least 4 candidate pairs");
  }
  for (const auto& h : pairs) h.validate();
  if (eval_times.empty()) throw Error(ErrorCode::config, "bandwidth grid has no eval times");
  const double hm = max_bandwidth();
  const double slack = 1e-9 * tau;
  for (const double t : eval_times) {
    if (t < hm - slack || t > tau - hm + slack) {
      throw Error(ErrorCode::config, "eval time outside [h_max, tau - h_max]",
                  "t=" + std::to_string(t));
    }
  }
}

BandwidthGrid make_bandwidth_grid(const GridSpec& spec, double tau) {
  if (!(spec.lo > 0.0) || !(spec.hi >= spec.lo) || !std::isfinite(spec.hi)) {
    throw Error(ErrorCode::config, "bandwidth range must satisfy 0 < lo <= hi");
  }
  if (spec.per_axis == 0 || spec.n_eval == 0) {
    throw Error(ErrorCode::config, "bandwidth grid sizes must be positive");
  }
  if (!(2.0 * spec.hi < tau)) {
    throw Error(ErrorCode::config, "largest bandwidth must stay below tau / 2");
  }
  BandwidthGrid grid;
  const auto axis = log_spaced(spec.lo, spec.hi, spec.per_axis);
  for (const double a : axis) {
    if (spec.equal) {
      grid.pairs.push_back({a, a});
      continue;
    }
    for (const double b : axis) grid.pairs.push_back({a, b});
  }
  grid.eval_times = interior_grid(tau, BandwidthPair{spec.hi, spec.hi}, spec.n_eval);
  return grid;
}

GridSpec default_grid_spec(const Dataset& data) {
  std::vector<double> times;
  for (const auto& subj : data.subjects()) {
    times.insert(times.end(), subj.obs_times.begin(), subj.obs_times.end());
  }
  if (times.size() < 4) throw Error(ErrorCode::config, "too few observation times for a grid");
  std::sort(times.begin(), times.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(times.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, times.size() - 1);
    return times[lo] + (pos - static_cast<double>(lo)) * (times[hi] - times[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  if (!(iqr > 0.0)) throw Error(ErrorCode::config, "observation times have zero spread");
  const double n = static_cast<double>(data.size());
  GridSpec spec;
  spec.hi = std::min(9.0 * iqr * std::pow(n, -1.0 / 6.0), data.tau() / 4.0);
  spec.lo = std::min(9.0 * iqr * std::pow(n, -0.5), spec.hi * std::pow(n, -1.0 / 3.0));
  return spec;
}

Matrix bias_slope(std::span<const BandwidthPair> pairs, std::span<const Vector> estimates) {
  if (pairs.size() != estimates.size() || pairs.empty()) {
    throw Error(ErrorCode::config, "bias regression needs one estimate per pair");
  }
  const auto k = static_cast<Eigen::Index>(pairs.size());
  const Eigen::Index p = estimates.front().size();
  Matrix y(k, p);
  for (Eigen::Index r = 0; r < k; ++r) y.row(r) = estimates[static_cast<std::size_t>(r)].transpose();

  const bool reduced = all_equal_pairs(pairs);
  const Eigen::Index cols = reduced ? 2 : 4;
  if (k < cols) throw Error(ErrorCode::degenerate_grid, "too few pairs for the bias regression");
  Matrix x(k, cols);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto& h = pairs[static_cast<std::size_t>(r)];
    x(r, 0) = 1.0;
    if (reduced) {
      x(r, 1) = h.h1 * h.h1;
    } else {
      x(r, 1) = h.h1 * h.h1;
      x(r, 2) = h.h1 * h.h2;
      x(r, 3) = h.h2 * h.h2;
    }
  }
  // Column scaling keeps the rank decision independent of the bandwidth units.
  const Vector scale = x.colwise().norm().transpose();
  if ((scale.array() <= 0.0).any()) throw Error(ErrorCode::degenerate_grid, "zero regressor");
  const Matrix xs = x * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Matrix> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    throw Error(ErrorCode::degenerate_grid, "bandwidth grid gives a rank-deficient bias design");
  }
  const Matrix coef = scale.cwiseInverse().asDiagonal() * qr.solve(y);
  Matrix slopes = Matrix::Zero(3, p);
  if (reduced) {
    slopes.row(0) = coef.row(1);
  } else {
    slopes = coef.bottomRows(3);
  }
  return slopes;
}

Vector predicted_bias(const Matrix& slopes, const BandwidthPair& h) {
  const Eigen::Vector3d b(h.h1 * h.h1, h.h1 * h.h2, h.h2 * h.h2);
  return slopes.transpose() * b;
}

Vector half_variance(const Vector& b1, const Vector& b2) {
  return (b1 - b2).array().square() / 4.0;
}

std::vector<std::size_t> draw_half(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n / 2);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vector split_half_variance(const Dataset& data, const BandwidthPair& h, double t, Rng& rng,
                           const SolverConfig& cfg, KernelKind kind) {
  if (data.size() < 2 * static_cast<std::size_t>(cfg.min_effective_events)) {
    throw Error(ErrorCode::split_failure, "too few subjects to split");
  }
  for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
    const auto first = draw_half(data.size(), rng);
    const auto second = complement(data.size(), first);
    const auto d1 = try_subset(data, first);
    const auto d2 = try_subset(data, second);
    if (!d1 || !d2) continue;
    const auto b1 = try_solve(*d1, t, h, cfg, kind);
    if (!b1) continue;
    const auto b2 = try_solve(*d2, t, h, cfg, kind);
    if (!b2) continue;
    return half_variance(*b1, *b2);
  }
  throw Error(ErrorCode::split_failure, "half-sample fit failed after redrawing the split",
              "t=" + std::to_string(t));
}

BandwidthSelection score_bandwidths(std::span<const BandwidthPair> pairs,
                                    std::span<const double> eval_times, const FitTable& estimates,
                                    const FitTable& variances) {
  const std::size_t k = pairs.size();
  const std::size_t m = eval_times.size();
  if (estimates.size() != k || variances.size() != k) {
    throw Error(ErrorCode::config, "fit table does not match the pair list");
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (estimates[a].size() != m || variances[a].size() != m) {
      throw Error(ErrorCode::config, "fit table does not match the eval times");
    }
  }
  BandwidthSelection out;
  out.pairs.assign(pairs.begin(), pairs.end());
  out.feasible.assign(k, true);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!estimates[a][j] || !variances[a][j]) out.feasible[a] = false;
    }
  }
  std::vector<BandwidthPair> ok_pairs;
  std::vector<std::size_t> ok_index;
  for (std::size_t a = 0; a < k; ++a) {
    if (out.feasible[a]) {
      ok_pairs.push_back(pairs[a]);
      ok_index.push_back(a);
    }
  }
  if (ok_pairs.empty()) {
    throw Error(ErrorCode::selection_failure, "no candidate bandwidth pair is feasible");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.mse.assign(k, nan);
  out.bias_sq.assign(k, nan);
  out.variance.assign(k, nan);
  for (const auto a : ok_index) {
    out.bias_sq[a] = 0.0;
    out.variance[a] = 0.0;
  }
  if (ok_pairs.size() == 1) {
    for (std::size_t j = 0; j < m; ++j) out.variance[ok_index[0]] += variances[ok_index[0]][j]->sum();
  } else {
    std::vector<Vector> est(ok_pairs.size());
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t q = 0; q < ok_index.size(); ++q) est[q] = *estimates[ok_index[q]][j];
      Matrix slopes;
      try {
        slopes = bias_slope(ok_pairs, est);
      } catch (const Error& e) {
        throw Error(ErrorCode::selection_failure, e.what(), "t=" + std::to_string(eval_times[j]));
      }
      for (const auto a : ok_index) {
        out.bias_sq[a] += predicted_bias(slopes, pairs[a]).squaredNorm();
        out.variance[a] += variances[a][j]->sum();
      }
    }
  }

  std::size_t best = ok_index.front();
  for (const auto a : ok_index) {
    out.mse[a] = out.bias_sq[a] + out.variance[a];
  }
  for (const auto a : ok_index) {
    const double diff = out.mse[a] - out.mse[best];
    const double tol = 1e-12 * std::max(std::abs(out.mse[a]), std::abs(out.mse[best]));
    const double area_a = pairs[a].h1 * pairs[a].h2;
    const double area_b = pairs[best].h1 * pairs[best].h2;
    if (diff < -tol || (std::abs(diff) <= tol && area_a > area_b)) best = a;
  }
  out.chosen = pairs[best];
  return out;
}

BandwidthSelection select_bandwidth(const Dataset& data, const BandwidthGrid& grid, Rng& rng,
                                    const SolverConfig& cfg, const SelectionOptions& opts) {
  BandwidthSelection out;
  out.pairs = grid.pairs;
  const std::size_t k = grid.pairs.size();
  if (k == 1) {
    grid.pairs.front().validate();
    out.chosen = grid.pairs.front();
    out.mse.assign(1, 0.0);
    out.bias_sq.assign(1, 0.0);
    out.variance.assign(1, 0.0);
    out.feasible.assign(1, true);
    return out;
  }
  grid.validate(data.tau());
  cfg.validate();
  if (opts.splits == 0) throw Error(ErrorCode::config, "need at least one split");

  // Splits are fixed before any fitting so the selection is a function of the seed.
  std::vector<std::optional<Dataset>> halves;
  for (std::size_t r = 0; r < opts.splits; ++r) {
    const auto first = draw_half(data.size(), rng);
    halves.push_back(try_subset(data, first));
    halves.push_back(try_subset(data, complement(data.size(), first)));
  }

  const std::size_t m = grid.eval_times.size();
  const auto p = static_cast<Eigen::Index>(data.p());
  // full[pair][time], var[pair][time]
  FitTable full(k, std::vector<std::optional<Vector>>(m));
  FitTable var(k, std::vector<std::optional<Vector>>(m));

  parallel_for(k * m, opts.threads, [&](std::size_t task) {
    const std::size_t a = task / m;
    const std::size_t j = task % m;
    const double t = grid.eval_times[j];
    const auto& h = grid.pairs[a];
    full[a][j] = try_solve(data, t, h, cfg, opts.kind);
    if (!full[a][j]) return;
    Vector acc = Vector::Zero(p);
    for (std::size_t r = 0; r < opts.splits; ++r) {
      if (!halves[2 * r] || !halves[2 * r + 1]) return;
      const auto b1 = try_solve(*halves[2 * r], t, h, cfg, opts.kind);
      if (!b1) return;
      const auto b2 = try_solve(*halves[2 * r + 1], t, h, cfg, opts.kind);
      if (!b2) return;
      acc += half_variance(*b1, *b2);
    }
    var[a][j] = acc / static_cast<double>(opts.splits);
  });

  return score_bandwidths(grid.pairs, grid.eval_times, full, var);
}

}  // namespace vcsurv
