// Acceptance run: each criterion prints its measurements followed by a single
// PASS/FAIL line. Exit status is the number of failed criteria.

#include "vcsurv/errors.hpp"
#include "vcsurv/estimator.hpp"
#include "vcsurv/inference.hpp"
#include "vcsurv/quadrature.hpp"
#include "vcsurv/simulation.hpp"
#include "vcsurv/study.hpp"

#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

using namespace vcsurv;

namespace {

struct Context {
  unsigned threads = 1;
  std::uint64_t seed = 20240601;
  double gamma = 0.0;  // calibrated once for the main scenario
  std::optional<StudyResult> table1;
};

struct Check {
  bool ok = true;

  [[gnu::format(printf, 3, 4)]] void expect(bool cond, const char* fmt, ...) {
    std::printf("    %s ", cond ? "ok  " : "MISS");
    va_list args;
    va_start(args, fmt);
    std::vprintf(fmt, args);
    va_end(args);
    std::printf("\n");
    ok = ok && cond;
  }
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

StudyConfig main_scenario(const Context& ctx, std::size_t n) {
  StudyConfig cfg;
  cfg.scenario.n = n;
  cfg.scenario.replications = 500;
  cfg.scenario.seed = ctx.seed;
  const double h = std::pow(static_cast<double>(n), -0.35);
  cfg.bandwidths = {h, h};
  cfg.gamma = ctx.gamma;
  cfg.threads = ctx.threads;
  return cfg;
}

void print_points(const StudyResult& r) {
  std::printf("    gamma %.4f, censoring %.3f, failed replications %zu of %zu\n", r.gamma,
              r.mean_censoring, r.failures, r.replications);
  for (const auto& p : r.points) {
    std::printf("    s=%.1f  bias %+.3f  se %.3f  sd %.3f  cp %.1f\n", p.s, p.bias, p.se, p.sd, p.cp);
  }
}

// 1: fixed-bandwidth table for the proposed estimator.
bool table1(Context& ctx) {
  StudyConfig cfg = main_scenario(ctx, 400);
  const StudyResult r = monte_carlo_study(cfg);
  print_points(r);
  struct Paper {
    double bias, se, sd, cp;
  };
  const Paper paper[] = {{-0.072, 0.171, 0.169, 91.6},
                         {-0.056, 0.156, 0.153, 92.0},
                         {0.039, 0.133, 0.129, 93.0},
                         {0.038, 0.201, 0.189, 91.3}};
  Check c;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& p = r.points[i];
    c.expect(std::abs(p.bias - paper[i].bias) <= 0.025, "s=%.1f |bias - (%+.3f)| = %.3f <= 0.025",
             p.s, paper[i].bias, std::abs(p.bias - paper[i].bias));
    c.expect(std::abs(p.se / p.sd - 1.0) <= 0.10, "s=%.1f |se/sd - 1| = %.3f <= 0.10", p.s,
             std::abs(p.se / p.sd - 1.0));
    c.expect(std::abs(p.cp - paper[i].cp) <= 3.5, "s=%.1f |cp - %.1f| = %.1f <= 3.5", p.s,
             paper[i].cp, std::abs(p.cp - paper[i].cp));
  }
  ctx.table1 = r;
  return c.ok;
}

// 2: LVCF bias does not shrink with n while the proposed estimator's does.
bool lvcf(Context& ctx) {
  if (!ctx.table1) table1(ctx);
  Check c;
  double lvcf_bias[2] = {0, 0};
  double lvcf_cp900 = 0;
  const std::size_t sizes[] = {400, 900};
  for (int k = 0; k < 2; ++k) {
    StudyConfig cfg = main_scenario(ctx, sizes[k]);
    cfg.method = Method::lvcf;
    cfg.eval_points = {0.6};
    const StudyResult r = monte_carlo_study(cfg);
    std::printf("    lvcf n=%zu (h1 %.4f): ", sizes[k], cfg.bandwidths.h1);
    std::printf("bias %+.3f se %.3f sd %.3f cp %.1f, failed %zu\n", r.points[0].bias,
                r.points[0].se, r.points[0].sd, r.points[0].cp, r.failures);
    lvcf_bias[k] = r.points[0].bias;
    if (k == 1) lvcf_cp900 = r.points[0].cp;
  }
  StudyConfig big = main_scenario(ctx, 900);
  big.eval_points = {0.6};
  const StudyResult r900 = monte_carlo_study(big);
  const double b400 = ctx.table1->points[2].bias;
  const double b900 = r900.points[0].bias;
  std::printf("    proposed s=0.6: bias n=400 %+.3f, n=900 %+.3f\n", b400, b900);
  c.expect(lvcf_bias[0] >= 0.06 && lvcf_bias[0] <= 0.12, "lvcf n=400 bias %.3f in [0.06, 0.12]",
           lvcf_bias[0]);
  c.expect(lvcf_bias[1] >= 0.06 && lvcf_bias[1] <= 0.12, "lvcf n=900 bias %.3f in [0.06, 0.12]",
           lvcf_bias[1]);
  c.expect(lvcf_cp900 <= 88.0, "lvcf n=900 cp %.1f <= 88", lvcf_cp900);
  const double shrink = 1.0 - std::abs(b900) / std::abs(b400);
  c.expect(shrink >= 0.20, "proposed |bias| shrinks by %.0f%% >= 20%%", 100.0 * shrink);
  return c.ok;
}

// 3: simultaneous band coverage against pointwise intervals.
bool table3(Context& ctx) {
  StudyConfig cfg = main_scenario(ctx, 400);
  cfg.eval_points.clear();
  cfg.scb = true;
  cfg.scb_grid_points = 50;
  cfg.n_boot = 1000;
  const StudyResult r = monte_carlo_study(cfg);
  std::printf("    band coverage %.1f, pointwise uniform coverage %.1f, failed %zu\n",
              *r.scb_coverage, *r.pointwise_coverage, r.failures);
  Check c;
  c.expect(*r.scb_coverage >= 87.0 && *r.scb_coverage <= 95.0, "band coverage %.1f in [87, 95]",
           *r.scb_coverage);
  c.expect(*r.pointwise_coverage <= 45.0, "pointwise uniform coverage %.1f <= 45",
           *r.pointwise_coverage);
  return c.ok;
}

// 4: quadratic coefficient with the non-homogeneous observation process.
bool supplement(Context& ctx) {
  StudyConfig cfg = main_scenario(ctx, 400);
  cfg.scenario.beta0 = Beta0Shape::quadratic;
  cfg.scenario.obs_process = ObservationProcess::quadratic_intensity;
  cfg.bandwidths = {std::pow(400.0, -0.35), std::pow(400.0, -0.25)};
  cfg.eval_points = {0.4};
  const StudyResult r = monte_carlo_study(cfg);
  print_points(r);
  const auto& p = r.points[0];
  Check c;
  c.expect(std::abs(p.bias + 0.022) <= 0.03, "|bias - (-0.022)| = %.3f <= 0.03",
           std::abs(p.bias + 0.022));
  c.expect(std::abs(p.cp - 94.6) <= 3.5, "|cp - 94.6| = %.1f <= 3.5", std::abs(p.cp - 94.6));
  return c.ok;
}

// 5: library against the nested-loop reference implementations.
bool oracles(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(515);
  const KernelKind kinds[] = {KernelKind::epanechnikov, KernelKind::gaussian, KernelKind::uniform};
  double worst_u = 0, worst_j = 0, worst_m = 0, worst_fd = 0;
  int compared = 0;
  int skipped = 0;
  while (compared < 50) {
    const Dataset d = oracle::random_dataset(rng, {2, 10, 4, compared % 3 == 2 ? 2u : 1u, 0.8});
    const auto kind = kinds[compared % 3];
    std::uniform_real_distribution<double> unif(0.25, 0.75);
    const double s = unif(rng);
    const BandwidthPair h{unif(rng) * 0.6, unif(rng) * 0.6};
    const Vector b = Vector::Random(static_cast<Eigen::Index>(d.p())) * 0.8;
    try {
      const Vector u = estimating_equation(d, s, b, h, kind);
      const Matrix j = jacobian(d, s, b, h, kind);
      const Matrix m = meat_matrix(d, s, b, h, kind);
      worst_u = std::max(worst_u, (u - oracle::estimating_equation(d, s, b, h, kind)).cwiseAbs().maxCoeff());
      worst_j = std::max(worst_j, (j - oracle::jacobian(d, s, b, h, kind)).cwiseAbs().maxCoeff());
      worst_m = std::max(worst_m, (m - oracle::meat(d, s, b, h, kind)).cwiseAbs().maxCoeff());
      worst_fd = std::max(worst_fd, (j - oracle::fd_jacobian(d, s, b, h, kind)).cwiseAbs().maxCoeff());
      ++compared;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::sparse_region) throw;
      ++skipped;
    }
  }

  // Root finding against plain Newton on the reference equation.
  double worst_root = 0;
  int roots = 0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    ScenarioConfig sc;
    sc.n = 60 + 20 * k;
    Rng r = make_rng(516, streams::dataset, k);
    const Dataset d = simulate_dataset(sc, 0.68, r);
    const BandwidthPair h{0.2, 0.2};
    const double s = 0.3 + 0.04 * static_cast<double>(k);
    const auto ref = oracle::dense_newton(d, s, h, KernelKind::epanechnikov, Vector::Zero(1));
    if (!ref) continue;
    const auto got = solve_beta(d, s, h, Vector::Zero(1), SolverConfig{}, KernelKind::epanechnikov);
    worst_root = std::max(worst_root, (got.beta - *ref).cwiseAbs().maxCoeff());
    ++roots;
  }
  const double secs = elapsed(t0);
  std::printf("    %d datasets compared (%d sparse draws skipped), %d roots, %.1f s\n", compared,
              skipped, roots, secs);
  Check c;
  c.expect(worst_u <= 1e-12, "estimating equation max error %.2e <= 1e-12", worst_u);
  c.expect(worst_j <= 1e-12, "jacobian max error %.2e <= 1e-12", worst_j);
  c.expect(worst_m <= 1e-12, "meat max error %.2e <= 1e-12", worst_m);
  c.expect(worst_fd <= 1e-5, "jacobian vs finite differences %.2e <= 1e-5", worst_fd);
  c.expect(roots >= 8 && worst_root <= 1e-6, "root vs dense Newton %.2e <= 1e-6 (%d roots)",
           worst_root, roots);
  c.expect(secs <= 30.0, "runtime %.1f s <= 30", secs);
  return c.ok;
}

// 6: properties of the multiplier-perturbed equation.
bool resampling(Context&) {
  ScenarioConfig sc;
  sc.n = 200;
  Rng data_rng = make_rng(606, streams::dataset, 0);
  const Dataset d = simulate_dataset(sc, 0.68, data_rng);
  const BandwidthPair h{0.2, 0.2};
  const double s = 0.5;
  const Vector b = solve_beta(d, s, h, Vector::Zero(1), SolverConfig{}, KernelKind::epanechnikov).beta;

  Rng rng = make_rng(607);
  Vector total = Vector::Zero(1);
  for (int k = 0; k < 500; ++k) {
    const Vector xi = draw_multipliers(MultiplierKind::rademacher, d.size(), rng);
    total += perturbed_equation(d, s, b, h, xi, KernelKind::epanechnikov);
    total += perturbed_equation(d, s, b, h, -xi, KernelKind::epanechnikov);
  }
  const double antithetic = total.cwiseAbs().maxCoeff();

  const LocalEquation eq(d, s, h, KernelKind::epanechnikov);
  const Matrix contrib = eq.contributions(b);
  const auto& who = eq.contributing_subjects();
  const int draws = 100'000;
  Matrix acc = Matrix::Zero(1, 1);
  Vector xi(static_cast<Eigen::Index>(d.size()));
  for (int k = 0; k < draws; ++k) {
    xi = draw_multipliers(MultiplierKind::centered_exponential, d.size(), rng);
    Vector u = Vector::Zero(1);
    for (std::size_t r = 0; r < who.size(); ++r) {
      u += xi(static_cast<Eigen::Index>(who[r])) * contrib.row(static_cast<Eigen::Index>(r)).transpose();
    }
    u /= static_cast<double>(d.size());
    acc += u * u.transpose();
  }
  acc /= static_cast<double>(draws);
  const Matrix meat = meat_matrix(d, s, b, h, KernelKind::epanechnikov);
  const double rel = (acc - meat).norm() / meat.norm();
  Check c;
  c.expect(antithetic == 0.0, "antithetic rademacher sum %.1e == 0", antithetic);
  c.expect(rel <= 0.05, "conditional covariance vs meat, relative Frobenius error %.4f <= 0.05", rel);
  return c.ok;
}

// 7: simulation engine.
bool engine(Context& ctx) {
  Check c;
  double worst_gl = 0;
  for (int k = 1; k <= 20; ++k) {
    const auto rule = gauss_legendre(k);
    for (int deg = 0; deg <= 2 * k - 1; ++deg) {
      const double got = rule.integrate([deg](double x) { return std::pow(x, deg); }, -1, 1);
      const double want = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
      worst_gl = std::max(worst_gl, std::abs(got - want));
    }
  }
  c.expect(worst_gl <= 1e-12, "gauss-legendre k<=20 max monomial error %.2e <= 1e-12", worst_gl);

  const auto rule = gauss_legendre(10);
  const CovariatePath flat(std::vector<double>(20, 0.0));
  HazardModel two;
  two.shape = Beta0Shape::constant;
  two.lambda_slope = 0.0;
  double worst_exp = 0;
  Rng urng = make_rng(701);
  std::uniform_real_distribution<double> unif(std::exp(-2.0), 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double u = unif(urng);
    const auto t = failure_time_from_uniform(flat, two, u, rule);
    worst_exp = std::max(worst_exp, t ? std::abs(*t + std::log(u) / 2.0) : 1.0);
  }
  c.expect(worst_exp <= 1e-9, "exponential inverse transform max error %.2e <= 1e-9", worst_exp);

  const CovariateModel model(20);
  Rng grng = make_rng(702);
  double s1 = 0, s2 = 0, t1 = 0, t2 = 0, st = 0;
  const int paths = 100'000;
  for (int i = 0; i < paths; ++i) {
    const auto p = model.sample(grng);
    const double a = p.levels()[0];
    const double b = p.levels()[1];
    s1 += a;
    s2 += a * a;
    t1 += b;
    t2 += b * b;
    st += a * b;
  }
  const double ma = s1 / paths, mb = t1 / paths;
  const double va = s2 / paths - ma * ma, vb = t2 / paths - mb * mb;
  const double corr = (st / paths - ma * mb) / std::sqrt(va * vb);
  c.expect(std::abs(ma + 3.0) <= 0.02, "z1 mean %.4f within 0.02 of -3", ma);
  c.expect(std::abs(va - 1.0) <= 0.02, "z1 variance %.4f within 0.02 of 1", va);
  c.expect(std::abs(corr - std::exp(-0.05)) <= 0.02, "lag-1 correlation %.4f within 0.02 of %.4f",
           corr, std::exp(-0.05));

  ScenarioConfig sc;
  for (const double target : {0.15, 0.35}) {
    sc.censor_target = target;
    const double g = calibrate_gamma(sc, ctx.seed);
    const double held = realized_censoring(sc, g, ctx.seed + 1);
    c.expect(std::abs(held - target) <= 0.01, "target %.2f: gamma %.4f, hold-out censoring %.4f",
             target, g, held);
  }

  ScenarioConfig small;
  small.n = 200;
  Rng a = make_rng(703);
  Rng b = make_rng(703);
  c.expect(simulate_dataset(small, 0.68, a) == simulate_dataset(small, 0.68, b),
           "same seed, identical dataset");
  StudyConfig st_cfg;
  st_cfg.scenario.n = 200;
  st_cfg.scenario.replications = 100;
  st_cfg.scenario.seed = 704;
  st_cfg.bandwidths = {0.2, 0.2};
  st_cfg.eval_points = {0.4, 0.6};
  st_cfg.gamma = ctx.gamma;
  st_cfg.threads = 1;
  const StudyResult serial = monte_carlo_study(st_cfg);
  st_cfg.threads = std::max(2u, ctx.threads);
  const StudyResult parallel = monte_carlo_study(st_cfg);
  bool same = serial.records.size() == parallel.records.size();
  for (std::size_t i = 0; same && i < serial.records.size(); ++i) {
    same = serial.records[i].estimate == parallel.records[i].estimate &&
           serial.records[i].se == parallel.records[i].se;
  }
  c.expect(same, "study with %u threads identical to serial", st_cfg.threads);
  return c.ok;
}

// 8: automatic bandwidth selection inside the study loop.
bool auto_bandwidth(Context& ctx) {
  StudyConfig cfg = main_scenario(ctx, 400);
  cfg.auto_bandwidth = true;
  cfg.eval_points = {0.2};
  const StudyResult r = monte_carlo_study(cfg);
  print_points(r);
  std::set<std::pair<double, double>> chosen;
  for (const auto& rec : r.records) chosen.insert({rec.bandwidths.h1, rec.bandwidths.h2});
  std::printf("    %zu distinct bandwidth pairs selected\n", chosen.size());
  const auto& p = r.points[0];
  Check c;
  c.expect(std::abs(p.bias + 0.058) <= 0.025, "|bias - (-0.058)| = %.3f <= 0.025",
           std::abs(p.bias + 0.058));
  c.expect(std::abs(p.cp - 93.3) <= 3.5, "|cp - 93.3| = %.1f <= 3.5", std::abs(p.cp - 93.3));
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Context ctx;
  ctx.threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<int> only;
  app.add_option("--threads", ctx.threads, "Worker threads");
  app.add_option("--seed", ctx.seed, "Study seed")->capture_default_str();
  app.add_option("--only", only, "Run just these criteria");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(Context&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "fixed-bandwidth estimator table (n=400, 500 reps)", table1},
      {2, "LVCF bias does not vanish with n", lvcf},
      {3, "simultaneous band coverage (n=400, 500 reps, B=1000)", table3},
      {4, "quadratic coefficient, non-homogeneous visits", supplement},
      {5, "reference-implementation equivalence", oracles},
      {6, "multiplier resampling properties", resampling},
      {7, "simulation engine", engine},
      {8, "automatic bandwidth end to end", auto_bandwidth},
  };

  ScenarioConfig main_cfg;
  ctx.gamma = calibrate_gamma(main_cfg, ctx.seed);
  std::printf("threads %u, seed %llu, main-scenario gamma %.4f\n", ctx.threads,
              static_cast<unsigned long long>(ctx.seed), ctx.gamma);

  int failed = 0;
  int ran = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
    std::printf("criterion %d: %s\n", cr.id, cr.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = cr.run(ctx);
    } catch (const std::exception& e) {
      std::printf("    error: %s\n", e.what());
    }
    ++ran;
    if (!ok) ++failed;
    std::printf("[%s] criterion %d (%.1f s)\n", ok ? "PASS" : "FAIL", cr.id, elapsed(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed;
}
