// vcsurv: command-line front end for fitting, confidence bands, bandwidth
// selection, synthetic data, and Monte Carlo replication.

#include "vcsurv/bandwidth.hpp"
#include "vcsurv/errors.hpp"
#include "vcsurv/estimator.hpp"
#include "vcsurv/inference.hpp"
#include "vcsurv/io.hpp"
#include "vcsurv/simulation.hpp"
#include "vcsurv/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace vcsurv;

namespace {

struct Common {
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  std::string out_dir = ".";
  std::string kernel = "epanechnikov";
};

struct DataArgs {
  std::string subjects;
  std::string longitudinal;
  std::optional<double> tau;
  std::optional<double> h1;
  std::optional<double> h2;
  bool auto_bandwidth = false;
  std::size_t grid_points = 50;
  double alpha = 0.05;
};

struct ScbArgs {
  std::size_t n_boot = 5000;
  std::string multiplier = "centered-exponential";
  std::string weight_mode = "inverse-se";
  std::size_t contrast = 1;
};

struct SelectArgs {
  std::optional<double> h_min;
  std::optional<double> h_max;
  std::size_t per_axis = 8;
  std::size_t eval_points = 10;
  bool equal = false;
  std::size_t splits = 1;
};

struct SimArgs {
  std::size_t n = 400;
  std::string beta0 = "sin";
  double censor = 0.15;
  std::string obs_process = "homogeneous";
  std::optional<double> gamma;
};

struct ReplicateArgs {
  std::string target = "table1";
  std::size_t n = 400;
  double censor = 0.15;
  std::size_t reps = 1000;
  std::string method = "proposed";
  std::optional<std::string> beta0;
  std::optional<std::string> obs_process;
  std::optional<double> h1_rate;
  std::optional<double> h2_rate;
  std::optional<double> h1;
  std::optional<double> h2;
  bool auto_bandwidth = false;
  std::vector<double> eval_points;
  std::size_t grid_points = 50;
  std::size_t n_boot = 5000;
  std::string multiplier = "centered-exponential";
  double alpha = 0.05;
  std::optional<double> gamma;
  std::string calibrate_on = "default";
};

// --grid-points -> VCSURV_GRID_POINTS
std::string env_name(const std::string& flag) {
  std::string out = "VCSURV_";
  for (const char ch : flag) {
    if (ch == '-') {
      if (out.back() != '_') out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
  }
  return out;
}

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& flag, T& target, const std::string& help) {
  return app->add_option("--" + flag, target, help)->envname(env_name(flag));
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
  return app->add_flag("--" + name, target, help)->envname(env_name(name));
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

fs::path prepare_out_dir(const Common& common) {
  fs::path dir(common.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::config, "cannot create output directory", dir.string());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::config, "cannot write output file", path.string());
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    json results) {
  json doc;
  doc["command"] = command;
  doc["config"] = config;
  doc["config_hash"] = hex(fnv1a(config.dump()));
  doc["results"] = std::move(results);
  auto out = open_out(dir / "manifest.json");
  out << doc.dump(2) << '\n';
}

json common_json(const Common& common) {
  return {{"seed", common.seed}, {"threads", common.threads}, {"kernel", common.kernel}};
}

Dataset load(const DataArgs& args) {
  if (args.subjects.empty() || args.longitudinal.empty()) {
    throw Error(ErrorCode::config, "--subjects and --longitudinal are required");
  }
  return ingest(args.subjects, args.longitudinal, args.tau);
}

struct ChosenBandwidth {
  BandwidthPair h;
  json info;
};

ChosenBandwidth choose_bandwidth(const Dataset& data, const DataArgs& args, const Common& common,
                                 KernelKind kind) {
  if (args.auto_bandwidth) {
    if (args.h1 || args.h2) throw Error(ErrorCode::config, "--auto-bandwidth excludes --h1/--h2");
    const BandwidthGrid grid = make_bandwidth_grid(default_grid_spec(data), data.tau());
    Rng rng = make_rng(common.seed, streams::split, 0);
    SelectionOptions opts;
    opts.kind = kind;
    opts.threads = common.threads;
    const auto sel = select_bandwidth(data, grid, rng, SolverConfig{}, opts);
    return {sel.chosen, {{"mode", "auto"}, {"h1", sel.chosen.h1}, {"h2", sel.chosen.h2}}};
  }
  if (!args.h1 || !args.h2) {
    throw Error(ErrorCode::config, "give --h1 and --h2, or --auto-bandwidth");
  }
  const BandwidthPair h{*args.h1, *args.h2};
  h.validate();
  return {h, {{"mode", "fixed"}, {"h1", h.h1}, {"h2", h.h2}}};
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)", "alpha");
}

json data_json(const DataArgs& args) {
  json j{{"subjects", args.subjects}, {"longitudinal", args.longitudinal},
         {"grid_points", args.grid_points}, {"alpha", args.alpha},
         {"auto_bandwidth", args.auto_bandwidth}};
  j["tau"] = args.tau ? json(*args.tau) : json(nullptr);
  j["h1"] = args.h1 ? json(*args.h1) : json(nullptr);
  j["h2"] = args.h2 ? json(*args.h2) : json(nullptr);
  return j;
}

CoefficientCurve fit_with_covariance(const Dataset& data, const BandwidthPair& h,
                                     std::size_t grid_points, KernelKind kind) {
  const auto grid = interior_grid(data.tau(), h, grid_points);
  CoefficientCurve curve = fit_curve(data, grid, h, SolverConfig{}, kind);
  estimate_covariance(data, curve);
  return curve;
}

int run_fit(const Common& common, const DataArgs& args) {
  check_alpha(args.alpha);
  const KernelKind kind = parse_kernel_kind(common.kernel);
  const Dataset data = load(args);
  const auto bw = choose_bandwidth(data, args, common, kind);
  const CoefficientCurve curve = fit_with_covariance(data, bw.h, args.grid_points, kind);
  const auto ci = pointwise_ci(curve, args.alpha);

  const fs::path dir = prepare_out_dir(common);
  auto out = open_out(dir / "fit.csv");
  out << "s";
  for (std::size_t j = 1; j <= data.p(); ++j) {
    out << ",beta_" << j << ",se_" << j << ",ci_lo_" << j << ",ci_hi_" << j;
  }
  out << '\n';
  json failed = json::array();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << format_value(curve.grid[i]);
    for (std::size_t j = 0; j < data.p(); ++j) {
      out << ',' << format_value(curve.beta[i](static_cast<Eigen::Index>(j))) << ','
          << format_value(curve.se(i, j)) << ',' << format_value(ci[i][j].lower) << ','
          << format_value(ci[i][j].upper);
    }
    out << '\n';
    if (!curve.converged[i] || !curve.diagnostics[i].message.empty()) {
      failed.push_back({{"s", curve.grid[i]}, {"message", curve.diagnostics[i].message}});
    }
  }
  json config = common_json(common);
  config["data"] = data_json(args);
  write_manifest(dir, "fit", config,
                 {{"bandwidth", bw.info},
                  {"n", data.size()},
                  {"p", data.p()},
                  {"tau", data.tau()},
                  {"events", data.event_count()},
                  {"converged_points", curve.converged_count()},
                  {"grid_points", curve.size()},
                  {"issues", failed}});
  std::cout << "wrote " << (dir / "fit.csv").string() << '\n';
  return 0;
}

int run_scb(const Common& common, const DataArgs& args, const ScbArgs& sargs) {
  check_alpha(args.alpha);
  const KernelKind kind = parse_kernel_kind(common.kernel);
  const Dataset data = load(args);
  if (sargs.contrast < 1 || sargs.contrast > data.p()) {
    throw Error(ErrorCode::config, "contrast must name a covariate between 1 and p", "contrast");
  }
  const auto bw = choose_bandwidth(data, args, common, kind);
  const CoefficientCurve curve = fit_with_covariance(data, bw.h, args.grid_points, kind);
  if (curve.converged_count() != curve.size()) {
    throw Error(ErrorCode::no_convergence, "confidence bands need every grid point to converge");
  }
  ScbOptions opts;
  opts.alpha = args.alpha;
  opts.n_boot = sargs.n_boot;
  opts.multiplier = parse_multiplier_kind(sargs.multiplier);
  opts.weight_mode = parse_weight_mode(sargs.weight_mode);
  opts.seed = derive_seed(common.seed, streams::multipliers, 0);
  opts.threads = common.threads;
  const Vector l = Vector::Unit(static_cast<Eigen::Index>(data.p()),
                                static_cast<Eigen::Index>(sargs.contrast - 1));
  const ScbResult band = scb(data, curve, l, opts);
  const auto ci = pointwise_ci(curve, args.alpha);

  const fs::path dir = prepare_out_dir(common);
  auto out = open_out(dir / "band.csv");
  out << "s,estimate,scb_lo,scb_hi,ci_lo,ci_hi\n";
  const std::size_t j = sargs.contrast - 1;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << format_value(band.grid[i]) << ',' << format_value(band.estimate[i]) << ','
        << format_value(band.lower[i]) << ',' << format_value(band.upper[i]) << ','
        << format_value(ci[i][j].lower) << ',' << format_value(ci[i][j].upper) << '\n';
  }
  json config = common_json(common);
  config["data"] = data_json(args);
  config["scb"] = {{"B", sargs.n_boot},
                   {"multiplier", sargs.multiplier},
                   {"weight_mode", sargs.weight_mode},
                   {"contrast", sargs.contrast}};
  write_manifest(dir, "scb", config,
                 {{"bandwidth", bw.info},
                  {"c_alpha", band.c_alpha},
                  {"alpha", band.alpha},
                  {"n_boot", band.n_boot}});
  std::cout << "c_alpha " << format_value(band.c_alpha) << '\n';
  return 0;
}

int run_select(const Common& common, const DataArgs& args, const SelectArgs& sel_args) {
  const KernelKind kind = parse_kernel_kind(common.kernel);
  const Dataset data = load(args);
  GridSpec spec = default_grid_spec(data);
  if (sel_args.h_min) spec.lo = *sel_args.h_min;
  if (sel_args.h_max) spec.hi = *sel_args.h_max;
  spec.per_axis = sel_args.per_axis;
  spec.n_eval = sel_args.eval_points;
  spec.equal = sel_args.equal;
  const BandwidthGrid grid = make_bandwidth_grid(spec, data.tau());
  Rng rng = make_rng(common.seed, streams::split, 0);
  SelectionOptions opts;
  opts.kind = kind;
  opts.splits = sel_args.splits;
  opts.threads = common.threads;
  const auto sel = select_bandwidth(data, grid, rng, SolverConfig{}, opts);

  const fs::path dir = prepare_out_dir(common);
  auto out = open_out(dir / "bandwidth.csv");
  out << "h1,h2,bias_sq,variance,mse,feasible\n";
  for (std::size_t a = 0; a < sel.pairs.size(); ++a) {
    out << format_value(sel.pairs[a].h1) << ',' << format_value(sel.pairs[a].h2) << ','
        << format_value(sel.bias_sq[a]) << ',' << format_value(sel.variance[a]) << ','
        << format_value(sel.mse[a]) << ',' << (sel.feasible[a] ? 1 : 0) << '\n';
  }
  json config = common_json(common);
  config["data"] = data_json(args);
  config["grid"] = {{"h_min", spec.lo}, {"h_max", spec.hi}, {"per_axis", spec.per_axis},
                    {"eval_points", spec.n_eval}, {"equal", spec.equal}, {"splits", sel_args.splits}};
  write_manifest(dir, "select-bandwidth", config,
                 {{"h1", sel.chosen.h1}, {"h2", sel.chosen.h2}, {"eval_times", grid.eval_times}});
  std::cout << "h1 " << format_value(sel.chosen.h1) << " h2 " << format_value(sel.chosen.h2) << '\n';
  return 0;
}

ScenarioConfig scenario_from(std::size_t n, const std::string& beta0, double censor,
                             const std::string& obs, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.beta0 = parse_beta0_shape(beta0);
  cfg.censor_target = censor;
  cfg.obs_process = parse_observation_process(obs);
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

int run_simulate(const Common& common, const SimArgs& args) {
  const ScenarioConfig cfg =
      scenario_from(args.n, args.beta0, args.censor, args.obs_process, common.seed);
  const double gamma = args.gamma ? *args.gamma : calibrate_gamma(cfg, common.seed);
  Rng rng = make_rng(common.seed, streams::dataset, 0);
  const Dataset data = simulate_dataset(cfg, gamma, rng);
  const fs::path dir = prepare_out_dir(common);
  write_dataset(data, dir / "subjects.csv", dir / "longitudinal.csv");
  json config = common_json(common);
  config["scenario"] = {{"n", args.n}, {"beta0", args.beta0}, {"censor", args.censor},
                        {"obs_process", args.obs_process}};
  const double censored =
      1.0 - static_cast<double>(data.event_count()) / static_cast<double>(data.size());
  write_manifest(dir, "simulate", config, {{"gamma", gamma}, {"censored_fraction", censored}});
  std::cout << "wrote " << data.size() << " subjects, gamma " << format_value(gamma) << '\n';
  return 0;
}

int run_replicate(const Common& common, const ReplicateArgs& args) {
  check_alpha(args.alpha);
  const bool table3 = args.target == "table3";
  const bool supp = args.target == "supp";
  if (!table3 && !supp && args.target != "table1") {
    throw Error(ErrorCode::config, "replicate target must be table1, table3, or supp", "target");
  }
  const std::string beta0 = args.beta0.value_or(supp ? "quad" : "sin");
  const std::string obs = args.obs_process.value_or(supp ? "intensity-8-quadratic" : "homogeneous");

  StudyConfig cfg;
  cfg.scenario = scenario_from(args.n, beta0, args.censor, obs, common.seed);
  cfg.scenario.replications = args.reps;
  cfg.method = parse_method(args.method);
  cfg.kernel = parse_kernel_kind(common.kernel);
  cfg.threads = common.threads;
  cfg.alpha = args.alpha;
  const double n = static_cast<double>(args.n);
  const double r1 = args.h1_rate.value_or(0.35);
  const double r2 = args.h2_rate.value_or(supp ? 0.25 : 0.35);
  cfg.bandwidths = {args.h1.value_or(std::pow(n, -r1)), args.h2.value_or(std::pow(n, -r2))};
  cfg.auto_bandwidth = args.auto_bandwidth;
  cfg.eval_points = args.eval_points.empty() ? std::vector<double>{0.2, 0.4, 0.6, 0.8}
                                             : args.eval_points;
  if (table3) {
    cfg.scb = true;
    cfg.eval_points.clear();
    cfg.scb_grid_points = args.grid_points;
    cfg.n_boot = args.n_boot;
    cfg.multiplier = parse_multiplier_kind(args.multiplier);
  }

  // The supplementary scenarios cannot reach low censoring targets (many
  // subjects survive past t = 1), so by default they reuse the censoring
  // distribution calibrated on the main scenario.
  std::string calibrate_on = args.calibrate_on;
  if (calibrate_on == "default") calibrate_on = supp ? "main" : "scenario";
  if (args.gamma) {
    cfg.gamma = *args.gamma;
  } else if (calibrate_on == "main") {
    ScenarioConfig main = cfg.scenario;
    main.beta0 = Beta0Shape::sine;
    main.obs_process = ObservationProcess::homogeneous;
    cfg.gamma = calibrate_gamma(main, common.seed);
  } else if (calibrate_on != "scenario") {
    throw Error(ErrorCode::config, "--calibrate-on must be main or scenario", "calibrate_on");
  }

  const StudyResult res = monte_carlo_study(cfg);

  const fs::path dir = prepare_out_dir(common);
  auto out = open_out(dir / "study.csv");
  out << "s,n,h1,h2,censor,method,bias,sd,se,cp,scb_cp\n";
  const std::string h1 = cfg.auto_bandwidth ? "auto" : format_value(cfg.bandwidths.h1);
  const std::string h2 = cfg.auto_bandwidth ? "auto"
                         : cfg.method == Method::lvcf ? "NA"
                                                      : format_value(cfg.bandwidths.h2);
  const std::string prefix_n = std::to_string(args.n);
  for (const auto& p : res.points) {
    out << format_value(p.s) << ',' << prefix_n << ',' << h1 << ',' << h2 << ','
        << format_value(args.censor) << ',' << to_string(cfg.method) << ','
        << format_value(p.bias) << ',' << format_value(p.sd) << ',' << format_value(p.se) << ','
        << format_value(p.cp) << ",NA\n";
  }
  if (res.scb_coverage) {
    out << "grid," << prefix_n << ',' << h1 << ',' << h2 << ',' << format_value(args.censor) << ','
        << to_string(cfg.method) << ",NA,NA,NA," << format_value(*res.pointwise_coverage) << ','
        << format_value(*res.scb_coverage) << '\n';
  }

  json config = common_json(common);
  config["study"] = {{"target", args.target}, {"n", args.n}, {"censor", args.censor},
                     {"reps", args.reps}, {"method", args.method}, {"beta0", beta0},
                     {"obs_process", obs}, {"h1", cfg.bandwidths.h1}, {"h2", cfg.bandwidths.h2},
                     {"auto_bandwidth", cfg.auto_bandwidth}, {"eval_points", cfg.eval_points},
                     {"grid_points", args.grid_points}, {"B", args.n_boot},
                     {"multiplier", args.multiplier}, {"alpha", args.alpha},
                     {"calibrate_on", calibrate_on}};
  json failures = json::array();
  for (std::size_t r = 0; r < res.records.size(); ++r) {
    if (!res.records[r].ok) failures.push_back({{"replication", r}, {"error", res.records[r].failure}});
  }
  json results{{"gamma", res.gamma},
               {"replications", res.replications},
               {"failure_count", res.failures},
               {"failures", failures},
               {"mean_censoring", res.mean_censoring}};
  if (res.scb_coverage) {
    results["scb_coverage"] = *res.scb_coverage;
    results["pointwise_uniform_coverage"] = *res.pointwise_coverage;
  }
  write_manifest(dir, "replicate", config, results);

  std::cout << "gamma " << format_value(res.gamma) << ", censoring "
            << format_value(res.mean_censoring) << ", failures " << res.failures << '\n';
  for (const auto& p : res.points) {
    std::cout << "s=" << format_value(p.s) << " bias " << format_value(p.bias) << " se "
              << format_value(p.se) << " sd " << format_value(p.sd) << " cp " << format_value(p.cp)
              << '\n';
  }
  if (res.scb_coverage) {
    std::cout << "scb coverage " << format_value(*res.scb_coverage) << ", pointwise "
              << format_value(*res.pointwise_coverage) << '\n';
  }
  return 0;
}

void print_error(const std::string& code, const std::string& message, const std::string& context) {
  std::cerr << json{{"code", code}, {"message", message}, {"context", context}}.dump() << '\n';
}

void add_data_options(CLI::App* cmd, DataArgs& args) {
  opt(cmd, "subjects", args.subjects, "Subjects CSV (id,time,event)");
  opt(cmd, "longitudinal", args.longitudinal, "Longitudinal CSV (id,obs_time,z1..zp)");
  opt(cmd, "tau", args.tau, "Study horizon (default: largest follow-up time)");
  opt(cmd, "h1", args.h1, "Event-time bandwidth");
  opt(cmd, "h2", args.h2, "Observation-time bandwidth");
  flag(cmd, "auto-bandwidth", args.auto_bandwidth, "Select (h1, h2) from the data");
  opt(cmd, "grid-points", args.grid_points, "Grid size on [h, tau - h]")->capture_default_str();
  opt(cmd, "alpha", args.alpha, "1 - confidence level")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying coefficient hazards regression with sparse longitudinal covariates"};
  app.require_subcommand(1);
  Common common;
  opt(&app, "seed", common.seed, "Random seed")->capture_default_str();
  opt(&app, "threads", common.threads, "Worker threads")->capture_default_str();
  opt(&app, "out-dir", common.out_dir, "Output directory")->capture_default_str();
  opt(&app, "kernel", common.kernel, "epanechnikov | gaussian | uniform")->capture_default_str();

  DataArgs data_args;
  auto* fit = app.add_subcommand("fit", "Estimate beta(s) on a grid with pointwise intervals");
  add_data_options(fit, data_args);

  ScbArgs scb_args;
  auto* scb_cmd = app.add_subcommand("scb", "Simultaneous confidence band");
  add_data_options(scb_cmd, data_args);
  opt(scb_cmd, "B", scb_args.n_boot, "Multiplier bootstrap draws")->capture_default_str();
  opt(scb_cmd, "multiplier", scb_args.multiplier,
      "centered-exponential | rademacher | standard-normal")->capture_default_str();
  opt(scb_cmd, "weight-mode", scb_args.weight_mode, "inverse-se | constant")->capture_default_str();
  opt(scb_cmd, "contrast", scb_args.contrast, "Covariate index (1-based)")->capture_default_str();

  SelectArgs sel_args;
  auto* select = app.add_subcommand("select-bandwidth", "Choose (h1, h2) by estimated integrated MSE");
  opt(select, "subjects", data_args.subjects, "Subjects CSV");
  opt(select, "longitudinal", data_args.longitudinal, "Longitudinal CSV");
  opt(select, "tau", data_args.tau, "Study horizon");
  opt(select, "h-min", sel_args.h_min, "Smallest candidate bandwidth");
  opt(select, "h-max", sel_args.h_max, "Largest candidate bandwidth");
  opt(select, "per-axis", sel_args.per_axis, "Candidates per axis")->capture_default_str();
  opt(select, "eval-points", sel_args.eval_points, "Time points in the MSE sum")->capture_default_str();
  flag(select, "equal-bandwidths", sel_args.equal, "Restrict to h1 = h2");
  opt(select, "splits", sel_args.splits, "Random halvings averaged for the variance")->capture_default_str();

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  opt(simulate, "n", sim_args.n, "Subjects")->capture_default_str();
  opt(simulate, "beta0", sim_args.beta0, "sin | quad | exp-decay")->capture_default_str();
  opt(simulate, "censor", sim_args.censor, "Target censoring fraction")->capture_default_str();
  opt(simulate, "obs-process", sim_args.obs_process, "homogeneous | intensity-8-quadratic")
      ->capture_default_str();
  opt(simulate, "gamma", sim_args.gamma, "Censoring parameter (skips calibration)");

  ReplicateArgs rep;
  auto* replicate = app.add_subcommand("replicate", "Monte Carlo study");
  replicate->add_option("target", rep.target, "table1 | table3 | supp")->required();
  opt(replicate, "n", rep.n, "Subjects per dataset")->capture_default_str();
  opt(replicate, "censor", rep.censor, "Target censoring fraction")->capture_default_str();
  opt(replicate, "reps", rep.reps, "Replications")->capture_default_str();
  opt(replicate, "method", rep.method, "proposed | lvcf")->capture_default_str();
  opt(replicate, "beta0", rep.beta0, "Override the coefficient function");
  opt(replicate, "obs-process", rep.obs_process, "Override the observation process");
  opt(replicate, "h1-rate", rep.h1_rate, "h1 = n^-rate (default 0.35)");
  opt(replicate, "h2-rate", rep.h2_rate, "h2 = n^-rate (default 0.35, supp 0.25)");
  opt(replicate, "h1", rep.h1, "Explicit h1");
  opt(replicate, "h2", rep.h2, "Explicit h2");
  flag(replicate, "auto-bandwidth", rep.auto_bandwidth, "Select bandwidths per replication");
  opt(replicate, "eval-points", rep.eval_points, "Target times (default 0.2 0.4 0.6 0.8)");
  opt(replicate, "grid-points", rep.grid_points, "Band grid size")->capture_default_str();
  opt(replicate, "B", rep.n_boot, "Multiplier bootstrap draws")->capture_default_str();
  opt(replicate, "multiplier", rep.multiplier, "Multiplier law")->capture_default_str();
  opt(replicate, "alpha", rep.alpha, "1 - confidence level")->capture_default_str();
  opt(replicate, "gamma", rep.gamma, "Censoring parameter (skips calibration)");
  opt(replicate, "calibrate-on", rep.calibrate_on, "main | scenario")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("config", e.what(), "arguments");
    return 2;
  }

  try {
    if (*fit) return run_fit(common, data_args);
    if (*scb_cmd) return run_scb(common, data_args, scb_args);
    if (*select) return run_select(common, data_args, sel_args);
    if (*simulate) return run_simulate(common, sim_args);
    if (*replicate) return run_replicate(common, rep);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what(), e.context());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), "");
    return 1;
  }
  return 0;
}
