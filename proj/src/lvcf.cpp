#include "vcsurv/lvcf.hpp"

#include "vcsurv/errors.hpp"
#include "vcsurv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vcsurv {

namespace {

constexpr double kMaxEta = 700.0;

}  // namespace

LvcfEquation::LvcfEquation(const Dataset& data, double s, double h1, KernelKind kind,
                           double eps_denom)
    : n_(data.size()), p_(data.p()), s_(s), eps_denom_(eps_denom) {
  if (!(h1 > 0.0) || !std::isfinite(h1)) {
    throw Error(ErrorCode::invalid_bandwidth, "h1 must be positive and finite");
  }
  std::vector<Eigen::Index> first_row(n_ + 1, 0);
  for (std::size_t j = 0; j < n_; ++j) {
    first_row[j + 1] = first_row[j] + static_cast<Eigen::Index>(data[j].num_obs());
  }
  z_.resize(first_row[n_], static_cast<Eigen::Index>(p_));
  for (std::size_t j = 0; j < n_; ++j) {
    if (data[j].num_obs() > 0) {
      z_.middleRows(first_row[j], static_cast<Eigen::Index>(data[j].num_obs())) =
          data[j].covariates;
    }
  }

  // Row index of the last observation of subject j at or before t, or -1.
  auto carried = [&](std::size_t j, double t) -> Eigen::Index {
    const auto& times = data[j].obs_times;
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return -1;
    return first_row[j] + static_cast<Eigen::Index>(it - times.begin() - 1);
  };

  for (std::size_t i = 0; i < n_; ++i) {
    const auto t = event_time(data[i], data.tau());
    if (!t) continue;
    const double w = scaled_marginal(kind, *t - s, h1);
    if (w <= 0.0) continue;
    const Eigen::Index own = carried(i, *t);
    if (own < 0) continue;
    std::vector<Eigen::Index> risk;
    for (std::size_t j = 0; j < n_; ++j) {
      if (!at_risk(data[j], *t)) continue;
      const Eigen::Index r = carried(j, *t);
      if (r >= 0) risk.push_back(r);
    }
    weight_.push_back(w);
    own_.push_back(own);
    risk_.push_back(std::move(risk));
  }
}

template <class Visit>
void LvcfEquation::for_each_event(const Vector& beta, bool second, Visit&& visit) const {
  if (!beta.allFinite()) throw Error(ErrorCode::nonfinite_moment, "non-finite coefficient");
  const Vector eta = z_ * beta;
  if (eta.size() > 0 && eta.maxCoeff() > kMaxEta) {
    throw Error(ErrorCode::nonfinite_moment, "linear predictor exceeds exp range");
  }
  const Vector ex = eta.array().exp();
  const auto p = static_cast<Eigen::Index>(p_);
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t e = 0; e < weight_.size(); ++e) {
    double s0 = 0.0;
    Vector s1 = Vector::Zero(p);
    Matrix s2 = Matrix::Zero(p, second ? p : 0);
    for (const Eigen::Index r : risk_[e]) {
      s0 += ex(r);
      s1.noalias() += ex(r) * z_.row(r).transpose();
      if (second) s2.noalias() += ex(r) * z_.row(r).transpose() * z_.row(r);
    }
    if (s0 * inv_n < eps_denom_ || s0 == 0.0) {
      throw Error(ErrorCode::sparse_region, "empty carried-forward risk set",
                  "s=" + std::to_string(s_));
    }
    visit(e, s0, s1, s2);
  }
}

Vector LvcfEquation::value(const Vector& beta) const {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(p_));
  for_each_event(beta, false, [&](std::size_t e, double s0, const Vector& s1, const Matrix&) {
    u.noalias() += weight_[e] * (z_.row(own_[e]).transpose() - s1 / s0);
  });
  return u / static_cast<double>(n_);
}

Matrix LvcfEquation::jacobian(const Vector& beta) const {
  const auto p = static_cast<Eigen::Index>(p_);
  Matrix jac = Matrix::Zero(p, p);
  for_each_event(beta, true, [&](std::size_t e, double s0, const Vector& s1, const Matrix& s2) {
    const Vector zbar = s1 / s0;
    jac.noalias() -= weight_[e] * (s2 / s0 - zbar * zbar.transpose());
  });
  jac /= static_cast<double>(n_);
  return 0.5 * (jac + jac.transpose());
}

Matrix LvcfEquation::contributions(const Vector& beta) const {
  Matrix c(static_cast<Eigen::Index>(weight_.size()), static_cast<Eigen::Index>(p_));
  for_each_event(beta, false, [&](std::size_t e, double s0, const Vector& s1, const Matrix&) {
    c.row(static_cast<Eigen::Index>(e)) =
        weight_[e] * (z_.row(own_[e]) - s1.transpose() / s0);
  });
  return c;
}

SolveResult lvcf_fit(const Dataset& data, double s, double h1, const SolverConfig& cfg,
                     KernelKind kind, const Vector& init) {
  cfg.validate();
  const auto p = static_cast<Eigen::Index>(data.p());
  const Vector start = init.size() == 0 ? Vector::Zero(p) : init;
  if (start.size() != p) throw Error(ErrorCode::config, "initial value has wrong dimension");
  const LvcfEquation eq(data, s, h1, kind, cfg.eps_denom);
  if (eq.effective_events() < static_cast<std::size_t>(cfg.min_effective_events)) {
    throw Error(ErrorCode::insufficient_data,
                "only " + std::to_string(eq.effective_events()) + " events carry kernel weight",
                "s=" + std::to_string(s));
  }
  const RootProblem problem{[&eq](const Vector& b) { return eq.value(b); },
                            [&eq](const Vector& b) { return eq.jacobian(b); }};
  RootResult root;
  try {
    root = broyden_solve(problem, start, cfg);
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

Matrix lvcf_covariance(const Dataset& data, double s, double h1, const Vector& beta,
                       KernelKind kind, double eps_denom) {
  const LvcfEquation eq(data, s, h1, kind, eps_denom);
  const Matrix c = eq.contributions(beta);
  const double n = static_cast<double>(data.size());
  const Matrix meat = c.transpose() * c / (n * n);
  return sandwich_variance(eq.jacobian(beta), meat);
}

}  // namespace vcsurv
