#include "vcsurv/estimator.hpp"

#include "vcsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace vcsurv {

namespace {

// exp overflow clamp on the linear predictor.
constexpr double kMaxEta = 700.0;

std::string time_context(double t) { return "t=" + std::to_string(t); }

}  // namespace

LocalEquation::LocalEquation(const Dataset& data, double s, const BandwidthPair& h,
                             KernelKind kind, double eps_denom)
    : n_(data.size()), p_(data.p()), s_(s), h_(h), kind_(kind), eps_denom_(eps_denom) {
  h.validate();
  if (!std::isfinite(s)) throw Error(ErrorCode::config, "target time must be finite");

  struct Entry {
    double x;
    double w2;
    std::size_t subject;
    Eigen::Index row;
  };
  std::vector<Entry> entries;
  for (std::size_t j = 0; j < n_; ++j) {
    const auto& subj = data[j];
    for (std::size_t k = 0; k < subj.num_obs(); ++k) {
      const double w2 = scaled_marginal(kind, subj.obs_times[k] - s, h.h2);
      if (w2 > 0.0) entries.push_back({subj.follow_up_time, w2, j, static_cast<Eigen::Index>(k)});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.x > b.x; });

  const auto m = static_cast<Eigen::Index>(entries.size());
  const auto p = static_cast<Eigen::Index>(p_);
  follow_up_.reserve(entries.size());
  w2_.resize(m);
  z_.resize(m, p);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& e = entries[static_cast<std::size_t>(r)];
    follow_up_.push_back(e.x);
    w2_(r) = e.w2;
    z_.row(r) = data[e.subject].covariates.row(e.row);
  }

  std::vector<Vector> weighted;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto& subj = data[i];
    const auto t = event_time(subj, data.tau());
    if (!t) continue;
    const double w1 = scaled_marginal(kind, *t - s, h.h1);
    if (!(w1 > 0.0)) continue;
    double sum_w2 = 0.0;
    Vector sum_wz = Vector::Zero(p);
    for (std::size_t k = 0; k < subj.num_obs(); ++k) {
      const double w2 = scaled_marginal(kind, subj.obs_times[k] - s, h.h2);
      if (w2 > 0.0) {
        sum_w2 += w2;
        sum_wz += w2 * subj.covariates.row(static_cast<Eigen::Index>(k)).transpose();
      }
    }
    const double weight = w1 * sum_w2;
    if (!(weight > 0.0)) continue;
    event_subject_.push_back(i);
    event_time_.push_back(*t);
    event_w1_.push_back(w1);
    event_weight_.push_back(weight);
    weighted.push_back(w1 * sum_wz);
    event_risk_.push_back(risk_count(*t));
  }
  event_weighted_z_.resize(static_cast<Eigen::Index>(weighted.size()), p);
  for (std::size_t e = 0; e < weighted.size(); ++e) {
    event_weighted_z_.row(static_cast<Eigen::Index>(e)) = weighted[e].transpose();
  }
}

std::size_t LocalEquation::risk_count(double t) const {
  // follow_up_ is descending, so {X_j >= t} is a prefix.
  const auto it = std::partition_point(follow_up_.begin(), follow_up_.end(),
                                       [t](double x) { return x >= t; });
  return static_cast<std::size_t>(it - follow_up_.begin());
}

LocalEquation::Prefix LocalEquation::prefix(const Vector& beta, bool second) const {
  if (beta.size() != static_cast<Eigen::Index>(p_)) {
    throw Error(ErrorCode::config, "beta has wrong dimension");
  }
  if (!beta.allFinite()) throw Error(ErrorCode::nonfinite_moment, "beta is not finite");
  const Eigen::Index m = z_.rows();
  const auto p = static_cast<Eigen::Index>(p_);
  const Vector eta = z_ * beta;
  if (m > 0 && !(eta.maxCoeff() <= kMaxEta)) {
    throw Error(ErrorCode::nonfinite_moment, "linear predictor exceeds exp overflow clamp");
  }

  Prefix out;
  out.c0.resize(m);
  out.c1.resize(m, p);
  if (second) out.c2.resize(m, p * p);
  double run0 = 0.0;
  Vector run1 = Vector::Zero(p);
  Matrix run2 = Matrix::Zero(p, p);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double w = w2_(r) * std::exp(eta(r));
    run0 += w;
    run1 += w * z_.row(r).transpose();
    out.c0(r) = run0;
    out.c1.row(r) = run1.transpose();
    if (second) {
      run2.noalias() += w * z_.row(r).transpose() * z_.row(r);
      for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = 0; b < p; ++b) out.c2(r, a * p + b) = run2(a, b);
      }
    }
  }
  return out;
}

void LocalEquation::check_denominator(double s0, std::size_t e) const {
  if (!(s0 >= eps_denom_)) {
    throw Error(ErrorCode::sparse_region, "risk-set denominator S0 vanishes at an event time",
                time_context(event_time_[e]));
  }
}

Vector LocalEquation::value(const Vector& beta) const {
  const auto p = static_cast<Eigen::Index>(p_);
  Vector u = Vector::Zero(p);
  if (event_subject_.empty()) return u;
  const Prefix pre = prefix(beta, false);
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t e = 0; e < event_subject_.size(); ++e) {
    const auto k = static_cast<Eigen::Index>(event_risk_[e] - 1);
    const double c0 = pre.c0(k);
    check_denominator(event_w1_[e] * c0 * inv_n, e);
    u += event_weighted_z_.row(static_cast<Eigen::Index>(e)).transpose() -
         (event_weight_[e] / c0) * pre.c1.row(k).transpose();
  }
  return u / static_cast<double>(n_);
}

Matrix LocalEquation::contributions(const Vector& beta) const {
  const auto p = static_cast<Eigen::Index>(p_);
  Matrix out(static_cast<Eigen::Index>(event_subject_.size()), p);
  if (event_subject_.empty()) return out;
  const Prefix pre = prefix(beta, false);
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t e = 0; e < event_subject_.size(); ++e) {
    const auto k = static_cast<Eigen::Index>(event_risk_[e] - 1);
    const double c0 = pre.c0(k);
    check_denominator(event_w1_[e] * c0 * inv_n, e);
    out.row(static_cast<Eigen::Index>(e)) =
        event_weighted_z_.row(static_cast<Eigen::Index>(e)) - (event_weight_[e] / c0) * pre.c1.row(k);
  }
  return out;
}

Matrix LocalEquation::jacobian(const Vector& beta) const {
  const auto p = static_cast<Eigen::Index>(p_);
  Matrix jac = Matrix::Zero(p, p);
  if (event_subject_.empty()) return jac;
  const Prefix pre = prefix(beta, true);
  const double inv_n = 1.0 / static_cast<double>(n_);
  Matrix bracket(p, p);
  for (std::size_t e = 0; e < event_subject_.size(); ++e) {
    const auto k = static_cast<Eigen::Index>(event_risk_[e] - 1);
    const double c0 = pre.c0(k);
    check_denominator(event_w1_[e] * c0 * inv_n, e);
    const Vector zb = pre.c1.row(k).transpose() / c0;
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index b = 0; b < p; ++b) bracket(a, b) = pre.c2(k, a * p + b) / c0;
    }
    bracket.noalias() -= zb * zb.transpose();
    jac -= event_weight_[e] * bracket;
  }
  jac *= inv_n;
  return 0.5 * (jac + jac.transpose());
}

WeightedMoments LocalEquation::moments(double t, const Vector& beta) const {
  const auto p = static_cast<Eigen::Index>(p_);
  WeightedMoments out{0.0, Vector::Zero(p), Matrix::Zero(p, p)};
  const std::size_t rc = risk_count(t);
  const double w1 = scaled_marginal(kind_, t - s_, h_.h1);
  if (rc == 0 || !(w1 > 0.0)) return out;
  const Prefix pre = prefix(beta, true);
  const auto k = static_cast<Eigen::Index>(rc - 1);
  const double scale = w1 / static_cast<double>(n_);
  out.s0 = scale * pre.c0(k);
  out.s1 = scale * pre.c1.row(k).transpose();
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) out.s2(a, b) = scale * pre.c2(k, a * p + b);
  }
  if (!std::isfinite(out.s0) || !out.s1.allFinite() || !out.s2.allFinite()) {
    throw Error(ErrorCode::nonfinite_moment, "weighted moments overflow", time_context(t));
  }
  return out;
}

WeightedMoments weighted_moments(const Dataset& data, double s, double t, const Vector& beta,
                                 const BandwidthPair& h, KernelKind kind) {
  return LocalEquation(data, s, h, kind).moments(t, beta);
}

Vector zbar(const WeightedMoments& m, double eps_denom) {
  if (!(m.s0 >= eps_denom) || m.s0 == 0.0) {
    throw Error(ErrorCode::sparse_region, "S0 below the sparse-region guard");
  }
  return m.s1 / m.s0;
}

Vector estimating_equation(const Dataset& data, double s, const Vector& beta,
                           const BandwidthPair& h, KernelKind kind) {
  return LocalEquation(data, s, h, kind).value(beta);
}

Matrix jacobian(const Dataset& data, double s, const Vector& beta, const BandwidthPair& h,
                KernelKind kind) {
  return LocalEquation(data, s, h, kind).jacobian(beta);
}

SolveResult solve_beta(const Dataset& data, double s, const BandwidthPair& h, const Vector& init,
                       const SolverConfig& cfg, KernelKind kind) {
  cfg.validate();
  if (init.size() != static_cast<Eigen::Index>(data.p())) {
    throw Error(ErrorCode::config, "initial value has wrong dimension");
  }
  const LocalEquation eq(data, s, h, kind, cfg.eps_denom);
  if (eq.effective_events() < static_cast<std::size_t>(cfg.min_effective_events)) {
    throw Error(ErrorCode::insufficient_data,
                "only " + std::to_string(eq.effective_events()) + " events carry kernel weight",
                "s=" + std::to_string(s));
  }
  const RootProblem problem{[&eq](const Vector& b) { return eq.value(b); },
                            [&eq](const Vector& b) { return eq.jacobian(b); }};
  RootResult root;
  try {
    root = broyden_solve(problem, init, cfg);
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), "s=" + std::to_string(s));
  }
  SolveResult out;
  out.beta = std::move(root.x);
  out.diagnostics.iterations = root.iterations;
  out.diagnostics.residual = root.residual;
  out.diagnostics.effective_events = eq.effective_events();
  out.diagnostics.converged = true;
  return out;
}

std::vector<double> interior_grid(double tau, const BandwidthPair& h, std::size_t n) {
  const double lo = h.max();
  const double hi = tau - h.max();
  if (n == 0) return {};
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return grid;
}

CoefficientCurve fit_curve(const Dataset& data, std::span<const double> grid,
                           const BandwidthPair& h, const SolverConfig& cfg, KernelKind kind,
                           SweepDirection direction) {
  h.validate();
  cfg.validate();
  if (grid.empty()) throw Error(ErrorCode::config, "empty grid");
  const double slack = 1e-9 * data.tau();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw Error(ErrorCode::config, "grid must be strictly ascending");
    }
    if (grid[i] < h.max() - slack || grid[i] > data.tau() - h.max() + slack) {
      throw Error(ErrorCode::config, "grid point outside [h, tau - h]",
                  "s=" + std::to_string(grid[i]));
    }
  }

  const auto p = static_cast<Eigen::Index>(data.p());
  const std::size_t m = grid.size();
  CoefficientCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.beta.assign(m, Vector::Constant(p, std::numeric_limits<double>::quiet_NaN()));
  curve.cov.assign(m, Matrix::Constant(p, p, std::numeric_limits<double>::quiet_NaN()));
  curve.converged.assign(m, false);
  curve.diagnostics.assign(m, SolveDiagnostics{});
  curve.bandwidths = h;
  curve.kernel = kind;

  Vector warm = Vector::Zero(p);
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t i = direction == SweepDirection::forward ? step : m - 1 - step;
    try {
      SolveResult r;
      try {
        r = solve_beta(data, grid[i], h, warm, cfg, kind);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::no_convergence || warm.isZero(0.0)) throw;
        r = solve_beta(data, grid[i], h, Vector::Zero(p), cfg, kind);
      }
      curve.beta[i] = r.beta;
      curve.diagnostics[i] = r.diagnostics;
      curve.converged[i] = true;
      warm = r.beta;
    } catch (const Error& e) {
      curve.diagnostics[i].converged = false;
      curve.diagnostics[i].message = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
  if (curve.converged_count() == 0) {
    throw Error(ErrorCode::all_points_failed, "no grid point converged",
                curve.diagnostics.front().message);
  }
  return curve;
}

}  // namespace vcsurv
