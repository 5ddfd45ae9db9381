#include "vcsurv/study.hpp"

#include "vcsurv/errors.hpp"
#include "vcsurv/estimator.hpp"
#include "vcsurv/lvcf.hpp"
#include "vcsurv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vcsurv {

Method parse_method(std::string_view name) {
  if (name == "proposed") return Method::proposed;
  if (name == "lvcf") return Method::lvcf;
  throw Error(ErrorCode::config, "unknown method '" + std::string(name) + "'", "method");
}

std::string_view to_string(Method method) {
  return method == Method::proposed ? "proposed" : "lvcf";
}

void StudyConfig::validate() const {
  scenario.validate();
  solver.validate();
  if (scenario.replications == 0) throw Error(ErrorCode::config, "replications must be positive");
  if (!auto_bandwidth) bandwidths.validate();
  if (auto_bandwidth && method == Method::lvcf) {
    throw Error(ErrorCode::config, "automatic selection is only available for the proposed method");
  }
  if (eval_points.empty() && !scb) throw Error(ErrorCode::config, "nothing to evaluate");
  if (scb && method == Method::lvcf) {
    throw Error(ErrorCode::config, "confidence bands are only available for the proposed method");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)");
}

namespace {

GridSpec simulation_grid(const StudyConfig& cfg) {
  if (cfg.auto_grid) return *cfg.auto_grid;
  GridSpec spec;
  spec.lo = std::pow(static_cast<double>(cfg.scenario.n), -0.5);
  spec.hi = 0.2;
  return spec;
}

}  // namespace

ReplicationRecord run_replication(const StudyConfig& cfg, double gamma, std::size_t index) {
  ReplicationRecord rec;
  const HazardModel model = HazardModel::from(cfg.scenario);
  try {
    Rng rng = make_rng(cfg.scenario.seed, streams::dataset, index);
    const Dataset data = simulate_dataset(cfg.scenario, gamma, rng);
    rec.censored_fraction =
        1.0 - static_cast<double>(data.event_count()) / static_cast<double>(data.size());

    BandwidthPair h = cfg.bandwidths;
    if (cfg.auto_bandwidth) {
      Rng split = make_rng(cfg.scenario.seed, streams::split, index);
      const BandwidthGrid grid = make_bandwidth_grid(simulation_grid(cfg), data.tau());
      SelectionOptions opts;
      opts.kind = cfg.kernel;
      opts.splits = cfg.selection_splits;
      h = select_bandwidth(data, grid, split, cfg.solver, opts).chosen;
    }
    rec.bandwidths = h;

    const Vector zero = Vector::Zero(1);
    for (const double s : cfg.eval_points) {
      if (cfg.method == Method::proposed) {
        const SolveResult r = solve_beta(data, s, h, zero, cfg.solver, cfg.kernel);
        const LocalEquation eq(data, s, h, cfg.kernel, cfg.solver.eps_denom);
        const Matrix cov = sandwich_variance(eq.jacobian(r.beta), meat_matrix(eq, r.beta));
        rec.estimate.push_back(r.beta(0));
        rec.se.push_back(std::sqrt(cov(0, 0)));
      } else {
        const SolveResult r = lvcf_fit(data, s, h.h1, cfg.solver, cfg.kernel);
        const Matrix cov = lvcf_covariance(data, s, h.h1, r.beta, cfg.kernel, cfg.solver.eps_denom);
        rec.estimate.push_back(r.beta(0));
        rec.se.push_back(std::sqrt(cov(0, 0)));
      }
    }

    if (cfg.scb) {
      const auto grid = interior_grid(data.tau(), h, cfg.scb_grid_points);
      CoefficientCurve curve = fit_curve(data, grid, h, cfg.solver, cfg.kernel);
      if (curve.converged_count() != curve.size()) {
        throw Error(ErrorCode::no_convergence, "curve has non-converged grid points");
      }
      estimate_covariance(data, curve);
      ScbOptions opts;
      opts.alpha = cfg.alpha;
      opts.n_boot = cfg.n_boot;
      opts.multiplier = cfg.multiplier;
      opts.seed = derive_seed(cfg.scenario.seed, streams::multipliers, index);
      const ScbResult band = scb(data, curve, Vector::Unit(1, 0), opts);
      rec.c_alpha = band.c_alpha;
      const double z = normal_quantile(1.0 - cfg.alpha / 2.0);
      rec.scb_covered = true;
      rec.pointwise_covered = true;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double truth = model.beta0(grid[j]);
        if (truth < band.lower[j] || truth > band.upper[j]) rec.scb_covered = false;
        const double half = z * curve.se(j, 0);
        if (std::abs(curve.beta[j](0) - truth) > half) rec.pointwise_covered = false;
      }
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.failure = std::string(to_string(e.code())) + ": " + e.what();
  }
  return rec;
}

StudyResult summarize(const StudyConfig& cfg, double gamma, std::vector<ReplicationRecord> records) {
  StudyResult out;
  out.config = cfg;
  out.gamma = gamma;
  out.replications = records.size();
  const HazardModel model = HazardModel::from(cfg.scenario);
  const double z = normal_quantile(1.0 - cfg.alpha / 2.0);

  std::size_t ok = 0;
  double cens = 0.0;
  std::size_t scb_hits = 0;
  std::size_t pw_hits = 0;
  const std::size_t k = cfg.eval_points.size();
  std::vector<double> sum(k, 0.0);
  std::vector<double> sum_sq(k, 0.0);
  std::vector<double> se_sum(k, 0.0);
  std::vector<std::size_t> covered(k, 0);
  for (const auto& r : records) {
    if (!r.ok) {
      ++out.failures;
      continue;
    }
    ++ok;
    cens += r.censored_fraction;
    if (r.scb_covered) ++scb_hits;
    if (r.pointwise_covered) ++pw_hits;
    for (std::size_t i = 0; i < k; ++i) {
      const double truth = model.beta0(cfg.eval_points[i]);
      sum[i] += r.estimate[i];
      sum_sq[i] += r.estimate[i] * r.estimate[i];
      se_sum[i] += r.se[i];
      if (std::abs(r.estimate[i] - truth) <= z * r.se[i]) ++covered[i];
    }
  }
  if (ok > 0) {
    const double m = static_cast<double>(ok);
    out.mean_censoring = cens / m;
    for (std::size_t i = 0; i < k; ++i) {
      PointSummary ps;
      ps.s = cfg.eval_points[i];
      ps.truth = model.beta0(ps.s);
      const double mean = sum[i] / m;
      ps.bias = mean - ps.truth;
      ps.sd = ok > 1 ? std::sqrt(std::max(0.0, (sum_sq[i] - m * mean * mean) / (m - 1.0))) : 0.0;
      ps.se = se_sum[i] / m;
      ps.cp = 100.0 * static_cast<double>(covered[i]) / m;
      out.points.push_back(ps);
    }
    if (cfg.scb) {
      out.scb_coverage = 100.0 * static_cast<double>(scb_hits) / m;
      out.pointwise_coverage = 100.0 * static_cast<double>(pw_hits) / m;
    }
  }
  out.records = std::move(records);
  return out;
}

StudyResult monte_carlo_study(const StudyConfig& cfg) {
  cfg.validate();
  const double gamma = cfg.gamma ? *cfg.gamma : calibrate_gamma(cfg.scenario, cfg.scenario.seed);
  std::vector<ReplicationRecord> records(cfg.scenario.replications);
  parallel_for(records.size(), cfg.threads,
               [&](std::size_t r) { records[r] = run_replication(cfg, gamma, r); });
  StudyResult out = summarize(cfg, gamma, std::move(records));
  const double rate = static_cast<double>(out.failures) / static_cast<double>(out.replications);
  if (rate > cfg.max_failure_rate) {
    std::string first;
    for (const auto& r : out.records) {
      if (!r.ok) {
        first = r.failure;
        break;
      }
    }
    throw Error(ErrorCode::study_invalid,
                std::to_string(out.failures) + " of " + std::to_string(out.replications) +
                    " replications failed",
                first);
  }
  return out;
}

}  // namespace vcsurv
