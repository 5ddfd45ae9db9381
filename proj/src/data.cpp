#include "vcsurv/data.hpp"

#include "vcsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace vcsurv {

void BandwidthPair::validate() const {
  if (!(std::isfinite(h1) && std::isfinite(h2) && h1 > 0.0 && h2 > 0.0)) {
    throw Error(ErrorCode::invalid_bandwidth,
                "bandwidths must be positive and finite (h1=" + std::to_string(h1) +
                    ", h2=" + std::to_string(h2) + ")");
  }
}

bool at_risk(const SubjectRecord& subject, double t) noexcept {
  return subject.follow_up_time >= t;
}

std::optional<double> event_time(const SubjectRecord& subject, double tau) noexcept {
  if (subject.event && subject.follow_up_time <= tau) return subject.follow_up_time;
  return std::nullopt;
}

namespace {

void validate_subject(const SubjectRecord& s, std::size_t p) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::invalid_data, what, "subject " + s.id);
  };
  if (!std::isfinite(s.follow_up_time) || s.follow_up_time < 0.0) {
    fail("follow-up time must be finite and nonnegative");
  }
  if (static_cast<std::size_t>(s.covariates.rows()) != s.obs_times.size()) {
    fail("covariate rows do not match the number of observation times");
  }
  if (!s.obs_times.empty() && static_cast<std::size_t>(s.covariates.cols()) != p) {
    fail("covariate column count differs from p=" + std::to_string(p));
  }
  for (std::size_t k = 0; k < s.obs_times.size(); ++k) {
    if (!std::isfinite(s.obs_times[k]) || s.obs_times[k] < 0.0) {
      fail("observation times must be finite and nonnegative");
    }
    if (k > 0 && !(s.obs_times[k] > s.obs_times[k - 1])) {
      fail("observation times must be strictly ascending");
    }
  }
  if (!s.covariates.allFinite()) fail("covariate entries must be finite");
}

}  // namespace

Dataset::Dataset(std::vector<SubjectRecord> subjects, double tau, std::size_t p)
    : subjects_(std::move(subjects)), tau_(tau), p_(p) {
  if (!(std::isfinite(tau_) && tau_ > 0.0)) {
    throw Error(ErrorCode::invalid_data, "tau must be positive and finite");
  }
  if (p_ == 0) throw Error(ErrorCode::invalid_data, "covariate dimension must be positive");
  bool any_event = false;
  for (auto& s : subjects_) {
    validate_subject(s, p_);
    if (s.obs_times.empty()) s.covariates.resize(0, static_cast<Eigen::Index>(p_));
    any_event = any_event || s.event;
  }
  if (!any_event) throw Error(ErrorCode::invalid_data, "dataset contains no events");
}

std::size_t Dataset::event_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      subjects_.begin(), subjects_.end(),
      [this](const SubjectRecord& s) { return event_time(s, tau_).has_value(); }));
}

double Dataset::max_follow_up() const noexcept {
  double m = 0.0;
  for (const auto& s : subjects_) m = std::max(m, s.follow_up_time);
  return m;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<SubjectRecord> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(subjects_.at(i));
  return Dataset(std::move(picked), tau_, p_);
}

Dataset Dataset::with_tau(double tau) const { return Dataset(subjects_, tau, p_); }

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.tau_ != b.tau_ || a.p_ != b.p_ || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.subjects_[i];
    const auto& y = b.subjects_[i];
    if (x.id != y.id || x.follow_up_time != y.follow_up_time || x.event != y.event ||
        x.obs_times != y.obs_times || x.covariates.rows() != y.covariates.rows() ||
        x.covariates.cols() != y.covariates.cols() || x.covariates != y.covariates) {
      return false;
    }
  }
  return true;
}

std::size_t CoefficientCurve::converged_count() const noexcept {
  return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), true));
}

double CoefficientCurve::se(std::size_t i, std::size_t j) const {
  const double v = cov.at(i)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  return v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace vcsurv
