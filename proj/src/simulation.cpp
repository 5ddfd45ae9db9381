#include "vcsurv/simulation.hpp"

#include "vcsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vcsurv {

Beta0Shape parse_beta0_shape(std::string_view name) {
  if (name == "sin") return Beta0Shape::sine;
  if (name == "quad") return Beta0Shape::quadratic;
  if (name == "exp-decay") return Beta0Shape::exp_decay;
  if (name == "constant") return Beta0Shape::constant;
  throw Error(ErrorCode::config, "unknown beta0 shape '" + std::string(name) + "'", "beta0");
}

std::string_view to_string(Beta0Shape shape) {
  switch (shape) {
    case Beta0Shape::sine: return "sin";
    case Beta0Shape::quadratic: return "quad";
    case Beta0Shape::exp_decay: return "exp-decay";
    case Beta0Shape::constant: return "constant";
  }
  return "unknown";
}

ObservationProcess parse_observation_process(std::string_view name) {
  if (name == "homogeneous") return ObservationProcess::homogeneous;
  if (name == "intensity-8-quadratic") return ObservationProcess::quadratic_intensity;
  throw Error(ErrorCode::config, "unknown observation process '" + std::string(name) + "'",
              "obs_process");
}

std::string_view to_string(ObservationProcess process) {
  return process == ObservationProcess::homogeneous ? "homogeneous" : "intensity-8-quadratic";
}

void ScenarioConfig::validate() const {
  if (n < 50) throw Error(ErrorCode::config, "scenarios need n >= 50", "n");
  if (!(censor_target > 0.0 && censor_target < 1.0)) {
    throw Error(ErrorCode::config, "censor target must lie in (0, 1)", "censor");
  }
  if (n_pieces < 1) throw Error(ErrorCode::config, "n_pieces must be positive", "n_pieces");
}

HazardModel HazardModel::from(const ScenarioConfig& cfg) {
  return {cfg.beta0, cfg.beta0_constant, cfg.lambda0_intercept, cfg.lambda0_slope};
}

double HazardModel::beta0(double t) const noexcept {
  switch (shape) {
    case Beta0Shape::sine: return 0.5 * std::sin(2.0 * std::numbers::pi * t);
    case Beta0Shape::quadratic: return 3.0 * (0.5 - t) * (0.5 - t) + 0.25;
    case Beta0Shape::exp_decay: return std::exp(-2.0 * t - 0.5);
    case Beta0Shape::constant: return constant;
  }
  return 0.0;
}

double HazardModel::baseline(double t) const noexcept { return lambda_intercept + lambda_slope * t; }

CovariatePath::CovariatePath(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw Error(ErrorCode::config, "covariate path needs at least one level");
}

double CovariatePath::operator()(double t) const noexcept {
  const auto pieces = static_cast<double>(levels_.size());
  const double pos = std::floor(t * pieces);
  const auto idx = static_cast<std::ptrdiff_t>(std::clamp(pos, 0.0, pieces - 1.0));
  return levels_[static_cast<std::size_t>(idx)];
}

CovariateModel::CovariateModel(int pieces) {
  const auto p = static_cast<Eigen::Index>(pieces);
  mean_.resize(p);
  cov_.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double u = static_cast<double>(i) / pieces - 1.0;
    mean_(i) = -1.0 - 2.0 * u * u;
    for (Eigen::Index j = 0; j < p; ++j) {
      cov_(i, j) = std::exp(-std::abs(static_cast<double>(i - j)) / pieces);
    }
  }
  Eigen::LLT<Matrix> llt(cov_);
  // exp(-|i-j|/P) is strictly positive definite (an AR(1) correlation matrix).
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::config, "covariate covariance is not positive definite");
  }
  chol_ = llt.matrixL();
}

CovariatePath CovariateModel::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector e(mean_.size());
  for (auto& x : e) x = normal(rng);
  const Vector z = mean_ + chol_ * e;
  return CovariatePath(std::vector<double>(z.begin(), z.end()));
}

CovariatePath gen_covariate_path(const ScenarioConfig& cfg, Rng& rng) {
  return CovariateModel(cfg.n_pieces).sample(rng);
}

namespace {

double piece_integral(const CovariatePath& path, const HazardModel& model, std::size_t piece,
                      double a, double b, const QuadratureRule& rule) {
  const double z = path.levels()[piece];
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = mid + half * rule.nodes[i];
    acc += rule.weights[i] * model.baseline(v) * std::exp(model.beta0(v) * z);
  }
  return half * acc;
}

double piece_start(std::size_t i, std::size_t pieces) {
  return static_cast<double>(i) / static_cast<double>(pieces);
}

}  // namespace

double cumulative_hazard(const CovariatePath& path, const HazardModel& model, double t,
                         const QuadratureRule& rule) {
  if (t <= 0.0) return 0.0;
  const std::size_t pieces = path.pieces();
  double total = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double a = piece_start(i, pieces);
    if (a >= t) break;
    const double b = std::min(piece_start(i + 1, pieces), t);
    total += piece_integral(path, model, i, a, b, rule);
  }
  return total;
}

std::optional<double> failure_time_from_uniform(const CovariatePath& path, const HazardModel& model,
                                                double u, const QuadratureRule& rule) {
  const double target = -std::log(u);
  if (!(target > 0.0)) return 0.0;
  const std::size_t pieces = path.pieces();
  double before = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double a = piece_start(i, pieces);
    const double b = piece_start(i + 1, pieces);
    const double whole = piece_integral(path, model, i, a, b, rule);
    if (before + whole < target) {
      before += whole;
      continue;
    }
    // Lambda is increasing, so bisection on this piece brackets the root.
    double lo = a;
    double hi = b;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (before + piece_integral(path, model, i, a, mid, rule) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

std::optional<double> gen_failure_time(const CovariatePath& path, const HazardModel& model,
                                       Rng& rng, const QuadratureRule& rule) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return failure_time_from_uniform(path, model, u, rule);
}

std::vector<double> gen_observation_schedule(const ScenarioConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto open_uniform = [&] {
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    return u;
  };
  std::vector<double> times;
  if (cfg.obs_process == ObservationProcess::homogeneous) {
    std::poisson_distribution<int> count(5.0);
    const int m = count(rng) + 1;
    for (int k = 0; k < m; ++k) times.push_back(open_uniform());
  } else {
    // Thinning of a rate-8 process; the intensity peaks at 8 on [0, 1].
    std::poisson_distribution<int> count(8.0);
    const int m = count(rng);
    for (int k = 0; k < m; ++k) {
      const double t = open_uniform();
      const double rate = 8.0 * (0.75 + (0.5 - t) * (0.5 - t));
      if (unif(rng) * 8.0 < rate) times.push_back(t);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

namespace {

struct CalibrationDraw {
  std::optional<double> failure;
  double v;  // C* = gamma + (1.5 - gamma) v
};

std::vector<CalibrationDraw> calibration_sample(const ScenarioConfig& cfg, std::uint64_t seed,
                                                std::size_t subjects) {
  const CovariateModel covariates(cfg.n_pieces);
  const HazardModel model = HazardModel::from(cfg);
  const QuadratureRule rule = gauss_legendre(cfg.quadrature_order);
  Rng rng = make_rng(seed, streams::calibration, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<CalibrationDraw> out(subjects);
  for (auto& d : out) {
    const CovariatePath path = covariates.sample(rng);
    d.failure = gen_failure_time(path, model, rng, rule);
    d.v = unif(rng);
  }
  return out;
}

double censor_time(double gamma, double v) {
  return std::max(0.0, std::min(1.0, gamma + (1.5 - gamma) * v));
}

double censored_fraction(const std::vector<CalibrationDraw>& draws, double gamma) {
  std::size_t censored = 0;
  for (const auto& d : draws) {
    const bool event = d.failure && *d.failure <= censor_time(gamma, d.v);
    if (!event) ++censored;
  }
  return static_cast<double>(censored) / static_cast<double>(draws.size());
}

}  // namespace

double realized_censoring(const ScenarioConfig& cfg, double gamma, std::uint64_t seed,
                          std::size_t subjects) {
  return censored_fraction(calibration_sample(cfg, seed, subjects), gamma);
}

double calibrate_gamma(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t subjects) {
  cfg.validate();
  const auto draws = calibration_sample(cfg, seed, subjects);
  const double target = cfg.censor_target;
  constexpr double kTol = 0.005;
  double lo = -1.5;  // most censoring
  double hi = 1.5;   // least censoring: only T > 1
  const double f_lo = censored_fraction(draws, lo);
  const double f_hi = censored_fraction(draws, hi);
  if (target < f_hi - kTol || target > f_lo + kTol) {
    throw Error(ErrorCode::calibration_failure,
                "censoring target " + std::to_string(target) + " outside attainable range [" +
                    std::to_string(f_hi) + ", " + std::to_string(f_lo) + "]",
                "censor");
  }
  if (std::abs(f_hi - target) <= kTol && target <= f_hi) return hi;
  double best = hi;
  double best_err = std::abs(f_hi - target);
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = censored_fraction(draws, mid);
    if (std::abs(f - target) < best_err) {
      best = mid;
      best_err = std::abs(f - target);
    }
    if (best_err <= 1e-4) break;
    if (f > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (best_err > kTol) {
    throw Error(ErrorCode::calibration_failure, "bisection did not reach the censoring target",
                "censor");
  }
  return best;
}

Dataset simulate_dataset(const ScenarioConfig& cfg, double gamma, Rng& rng) {
  cfg.validate();
  const CovariateModel covariates(cfg.n_pieces);
  const HazardModel model = HazardModel::from(cfg);
  const QuadratureRule rule = gauss_legendre(cfg.quadrature_order);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<SubjectRecord> subjects;
  subjects.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const CovariatePath path = covariates.sample(rng);
    std::vector<double> schedule = gen_observation_schedule(cfg, rng);
    const std::optional<double> failure = gen_failure_time(path, model, rng, rule);
    const double censor = censor_time(gamma, unif(rng));

    SubjectRecord rec;
    rec.id = std::to_string(i + 1);
    rec.event = failure && *failure <= censor;
    rec.follow_up_time = rec.event ? *failure : censor;
    if (cfg.truncate_at_follow_up) {
      std::erase_if(schedule, [&](double r) { return r > rec.follow_up_time; });
    }
    rec.covariates.resize(static_cast<Eigen::Index>(schedule.size()), 1);
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      rec.covariates(static_cast<Eigen::Index>(k), 0) = path(schedule[k]);
    }
    rec.obs_times = std::move(schedule);
    subjects.push_back(std::move(rec));
  }
  return Dataset(std::move(subjects), 1.0, 1);
}

}  // namespace vcsurv
