#include "vcsurv/inference.hpp"

#include "vcsurv/errors.hpp"
#include "vcsurv/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vcsurv {

MultiplierKind parse_multiplier_kind(std::string_view name) {
  if (name == "centered-exponential") return MultiplierKind::centered_exponential;
  if (name == "rademacher") return MultiplierKind::rademacher;
  if (name == "standard-normal") return MultiplierKind::standard_normal;
  throw Error(ErrorCode::config, "unknown multiplier '" + std::string(name) + "'", "multiplier");
}

std::string_view to_string(MultiplierKind kind) {
  switch (kind) {
    case MultiplierKind::centered_exponential: return "centered-exponential";
    case MultiplierKind::rademacher: return "rademacher";
    case MultiplierKind::standard_normal: return "standard-normal";
  }
  return "unknown";
}

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "inverse-se") return WeightMode::inverse_se;
  if (name == "constant") return WeightMode::constant;
  throw Error(ErrorCode::config, "unknown weight mode '" + std::string(name) + "'", "weight_mode");
}

std::string_view to_string(WeightMode mode) {
  return mode == WeightMode::inverse_se ? "inverse-se" : "constant";
}

Matrix meat_matrix(const LocalEquation& eq, const Vector& beta_hat) {
  const Matrix c = eq.contributions(beta_hat);
  const double n = static_cast<double>(eq.n());
  Matrix meat = (c.transpose() * c) / (n * n);
  return 0.5 * (meat + meat.transpose());
}

Matrix meat_matrix(const Dataset& data, double s, const Vector& beta_hat, const BandwidthPair& h,
                   KernelKind kind) {
  return meat_matrix(LocalEquation(data, s, h, kind), beta_hat);
}

Matrix sandwich_variance(const Matrix& jac, const Matrix& sigma) {
  const Matrix inv = checked_inverse(jac, "sandwich");
  Matrix v = inv * sigma * inv.transpose();
  return 0.5 * (v + v.transpose());
}

void estimate_covariance(const Dataset& data, CoefficientCurve& curve) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!curve.converged[i]) continue;
    const LocalEquation eq(data, curve.grid[i], curve.bandwidths, curve.kernel);
    try {
      curve.cov[i] = sandwich_variance(eq.jacobian(curve.beta[i]), meat_matrix(eq, curve.beta[i]));
    } catch (const Error& e) {
      curve.diagnostics[i].message = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
}

double normal_quantile(double prob) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

std::vector<std::vector<Interval>> pointwise_ci(const CoefficientCurve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  std::vector<std::vector<Interval>> out(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto p = static_cast<std::size_t>(curve.beta[i].size());
    out[i].resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double b = curve.beta[i](static_cast<Eigen::Index>(j));
      const double half = z * curve.se(i, j);
      out[i][j] = {b - half, b + half};
    }
  }
  return out;
}

Vector draw_multipliers(MultiplierKind kind, std::size_t n, Rng& rng) {
  Vector xi(static_cast<Eigen::Index>(n));
  switch (kind) {
    case MultiplierKind::centered_exponential: {
      std::exponential_distribution<double> d(1.0);
      for (auto& x : xi) x = d(rng) - 1.0;
      break;
    }
    case MultiplierKind::rademacher: {
      std::bernoulli_distribution d(0.5);
      for (auto& x : xi) x = d(rng) ? 1.0 : -1.0;
      break;
    }
    case MultiplierKind::standard_normal: {
      std::normal_distribution<double> d(0.0, 1.0);
      for (auto& x : xi) x = d(rng);
      break;
    }
  }
  return xi;
}

Vector perturbed_equation(const Dataset& data, double s, const Vector& beta_hat,
                          const BandwidthPair& h, const Vector& xi, KernelKind kind) {
  if (xi.size() != static_cast<Eigen::Index>(data.size())) {
    throw Error(ErrorCode::config, "multiplier vector length differs from n");
  }
  const LocalEquation eq(data, s, h, kind);
  const Matrix c = eq.contributions(beta_hat);
  Vector u = Vector::Zero(static_cast<Eigen::Index>(data.p()));
  const auto& subjects = eq.contributing_subjects();
  for (std::size_t r = 0; r < subjects.size(); ++r) {
    u += xi(static_cast<Eigen::Index>(subjects[r])) * c.row(static_cast<Eigen::Index>(r)).transpose();
  }
  return u / static_cast<double>(data.size());
}

Matrix scb_information(const Dataset& data, double s, const Vector& beta_hat,
                       const BandwidthPair& h, KernelKind kind) {
  return -jacobian(data, s, beta_hat, h, kind);
}

double empirical_upper_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw Error(ErrorCode::config, "empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)");
  const double b = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

void ScbOptions::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)", "alpha");
  if (n_boot < 100) throw Error(ErrorCode::config, "at least 100 bootstrap draws are required", "B");
}

ScbResult scb(const Dataset& data, const CoefficientCurve& curve, const Vector& contrast,
              const ScbOptions& opts) {
  const std::size_t n = data.size();
  const MultiplierKind kind = opts.multiplier;
  const std::uint64_t seed = opts.seed;
  return scb(data, curve, contrast, opts, [n, kind, seed](std::size_t b, Eigen::Ref<Vector> xi) {
    Rng rng = make_rng(seed, streams::multipliers, b);
    xi = draw_multipliers(kind, n, rng);
  });
}

ScbResult scb(const Dataset& data, const CoefficientCurve& curve, const Vector& contrast,
              const ScbOptions& opts, const MultiplierDraw& draw) {
  opts.validate();
  const auto p = static_cast<Eigen::Index>(data.p());
  if (contrast.size() != p) throw Error(ErrorCode::config, "contrast has wrong dimension", "contrast");
  const std::size_t m = curve.size();

  ScbResult out;
  out.alpha = opts.alpha;
  out.n_boot = opts.n_boot;
  out.multiplier = opts.multiplier;
  out.contrast = contrast;
  out.grid = curve.grid;
  out.estimate.resize(m);
  out.weight.resize(m);

  // Per grid point: scalar score g_r = l^T I^-1 c_r / n for each contributing subject.
  std::vector<std::vector<std::size_t>> subjects(m);
  std::vector<Vector> scores(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::string where = "s=" + std::to_string(curve.grid[j]);
    if (!curve.converged[j]) throw Error(ErrorCode::config, "curve not converged", where);
    const LocalEquation eq(data, curve.grid[j], curve.bandwidths, curve.kernel);
    const Matrix info = -eq.jacobian(curve.beta[j]);
    const Vector direction = checked_inverse(info, where).transpose() * contrast;
    scores[j] = eq.contributions(curve.beta[j]) * direction / static_cast<double>(data.size());
    subjects[j] = eq.contributing_subjects();
    out.estimate[j] = contrast.dot(curve.beta[j]);
    if (opts.weight_mode == WeightMode::inverse_se) {
      const double var = contrast.dot(curve.cov[j] * contrast);
      if (!(var > 0.0) || !std::isfinite(var)) {
        throw Error(ErrorCode::config, "standard error unavailable for inverse-se weighting", where);
      }
      out.weight[j] = 1.0 / std::sqrt(var);
    } else {
      out.weight[j] = 1.0;
    }
  }

  out.sup_statistics.assign(opts.n_boot, 0.0);
  const std::size_t n = data.size();
  parallel_for(opts.n_boot, opts.threads, [&](std::size_t b) {
    thread_local Vector xi;
    xi.resize(static_cast<Eigen::Index>(n));
    draw(b, xi);
    double sup = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      const auto& subj = subjects[j];
      for (std::size_t r = 0; r < subj.size(); ++r) {
        acc += xi(static_cast<Eigen::Index>(subj[r])) * scores[j](static_cast<Eigen::Index>(r));
      }
      sup = std::max(sup, out.weight[j] * std::abs(acc));
    }
    out.sup_statistics[b] = sup;
  });

  out.c_alpha = empirical_upper_quantile(out.sup_statistics, opts.alpha);
  out.lower.resize(m);
  out.upper.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double half = out.c_alpha / out.weight[j];
    out.lower[j] = out.estimate[j] - half;
    out.upper[j] = out.estimate[j] + half;
  }
  return out;
}

}  // namespace vcsurv
