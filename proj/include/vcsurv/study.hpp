#pragma once

#include "vcsurv/bandwidth.hpp"
#include "vcsurv/inference.hpp"
#include "vcsurv/quasi_newton.hpp"
#include "vcsurv/simulation.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vcsurv {

enum class Method { proposed, lvcf };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

struct StudyConfig {
  ScenarioConfig scenario;
  Method method = Method::proposed;
  BandwidthPair bandwidths{0.1, 0.1};  // lvcf uses h1 only
  bool auto_bandwidth = false;
  /// Candidate range for automatic selection; by default n^-1/2 .. 0.2 on both axes.
  std::optional<GridSpec> auto_grid;
  std::size_t selection_splits = 1;
  std::vector<double> eval_points{0.2, 0.4, 0.6, 0.8};

  bool scb = false;  // SCB and pointwise-CI uniform coverage on an interior grid
  std::size_t scb_grid_points = 50;
  std::size_t n_boot = 1000;
  MultiplierKind multiplier = MultiplierKind::centered_exponential;
  double alpha = 0.05;

  /// Censoring parameter; calibrated to scenario.censor_target when absent.
  std::optional<double> gamma;
  SolverConfig solver;
  KernelKind kernel = KernelKind::epanechnikov;
  unsigned threads = 1;
  double max_failure_rate = 0.05;

  void validate() const;
};

struct ReplicationRecord {
  bool ok = false;
  std::string failure;
  BandwidthPair bandwidths;
  double censored_fraction = 0.0;
  std::vector<double> estimate;  // per eval point, first component
  std::vector<double> se;
  bool scb_covered = false;
  bool pointwise_covered = false;
  double c_alpha = 0.0;
};

struct PointSummary {
  double s = 0.0;
  double truth = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double se = 0.0;
  double cp = 0.0;  // percent
};

struct StudyResult {
  StudyConfig config;
  double gamma = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  double mean_censoring = 0.0;
  std::vector<PointSummary> points;
  std::optional<double> scb_coverage;        // percent
  std::optional<double> pointwise_coverage;  // percent, uniform over the grid
  std::vector<ReplicationRecord> records;
};

/// One replication; a pure function of (cfg, gamma, index).
ReplicationRecord run_replication(const StudyConfig& cfg, double gamma, std::size_t index);

/// Runs cfg.scenario.replications replications with per-replication substreams,
/// so the table does not depend on cfg.threads. Throws ErrorCode::study_invalid
/// when more than cfg.max_failure_rate of them fail.
StudyResult monte_carlo_study(const StudyConfig& cfg);

StudyResult summarize(const StudyConfig& cfg, double gamma, std::vector<ReplicationRecord> records);

}  // namespace vcsurv
