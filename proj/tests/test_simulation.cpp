#include "vcsurv/errors.hpp"
#include "vcsurv/quadrature.hpp"
#include "vcsurv/simulation.hpp"
#include "vcsurv/study.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace vcsurv;

namespace {

// Piecewise trapezoid rule aligned with the covariate pieces.
double trapezoid_hazard(const CovariatePath& path, const HazardModel& model, double t,
                        std::size_t panels) {
  const std::size_t pieces = path.pieces();
  const std::size_t per_piece = panels / pieces;
  double total = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(pieces);
    const double b = std::min(t, static_cast<double>(i + 1) / static_cast<double>(pieces));
    if (b <= a) break;
    const double z = path.levels()[i];
    auto f = [&](double v) { return model.baseline(v) * std::exp(model.beta0(v) * z); };
    const double step = (b - a) / static_cast<double>(per_piece);
    double sum = 0.5 * (f(a) + f(b));
    for (std::size_t k = 1; k < per_piece; ++k) sum += f(a + step * static_cast<double>(k));
    total += sum * step;
  }
  return total;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("gauss-legendre rules") {
    const auto one = gauss_legendre(1);
    CHECK(one.nodes == std::vector<double>{0.0});
    CHECK(one.weights[0] == doctest::Approx(2.0));
    const auto two = gauss_legendre(2);
    CHECK(two.nodes[0] == doctest::Approx(-0.5773502692).epsilon(1e-10));
    CHECK(two.nodes[1] == doctest::Approx(0.5773502692).epsilon(1e-10));
    CHECK(two.weights[0] == doctest::Approx(1.0));
    const auto five = gauss_legendre(5);
    CHECK(std::abs(five.integrate([](double x) { return std::pow(x, 8); }, -1, 1) - 2.0 / 9.0) <
          1e-13);

    for (int k = 1; k <= 20; ++k) {
      const auto rule = gauss_legendre(k);
      double wsum = 0.0;
      for (const double w : rule.weights) wsum += w;
      CHECK(std::abs(wsum - 2.0) < 1e-12);
      CHECK(std::is_sorted(rule.nodes.begin(), rule.nodes.end()));
      for (int d = 0; d <= 2 * k - 1; ++d) {
        const double got = rule.integrate([d](double x) { return std::pow(x, d); }, -1, 1);
        const double want = d % 2 == 1 ? 0.0 : 2.0 / (d + 1);
        CHECK(std::abs(got - want) < 1e-12);
      }
    }
    CHECK_THROWS_AS(gauss_legendre(0), Error);
    CHECK_THROWS_AS(gauss_legendre(65), Error);
  }

  TEST_CASE("covariate process moments") {
    const CovariateModel model(20);
    CHECK(model.mean()(0) == doctest::Approx(-3.0));
    Rng rng = make_rng(5);
    const int paths = 100'000;
    double s1 = 0, s2 = 0, s12 = 0, t1 = 0, t2 = 0;
    for (int i = 0; i < paths; ++i) {
      const auto p = model.sample(rng);
      const double a = p.levels()[0];
      const double b = p.levels()[1];
      s1 += a;
      s2 += a * a;
      t1 += b;
      t2 += b * b;
      s12 += a * b;
    }
    const double n = paths;
    const double ma = s1 / n;
    const double mb = t1 / n;
    const double va = s2 / n - ma * ma;
    const double vb = t2 / n - mb * mb;
    const double corr = (s12 / n - ma * mb) / std::sqrt(va * vb);
    CHECK(std::abs(ma + 3.0) < 0.02);
    CHECK(std::abs(va - 1.0) < 0.02);
    CHECK(std::abs(corr - std::exp(-1.0 / 20.0)) < 0.02);

    std::vector<double> levels(20);
    for (int i = 0; i < 20; ++i) levels[i] = i + 1.0;
    const CovariatePath path(levels);
    CHECK(path(0.07) == 2.0);
    CHECK(path(0.0) == 1.0);
    CHECK(path(1.0) == 20.0);
  }

  TEST_CASE("cumulative hazard") {
    const auto rule = gauss_legendre(10);
    const CovariatePath flat(std::vector<double>(20, 0.0));
    HazardModel zero;
    zero.shape = Beta0Shape::constant;
    CHECK(cumulative_hazard(flat, zero, 0.0, rule) == 0.0);
    CHECK(cumulative_hazard(flat, zero, 1.0, rule) == doctest::Approx(2.05).epsilon(1e-14));

    const HazardModel model;
    const CovariateModel cov(20);
    Rng rng = make_rng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int r = 0; r < 4; ++r) {
      const auto path = cov.sample(rng);
      const double t = unif(rng);
      const double gl = cumulative_hazard(path, model, t, rule);
      const double tr = trapezoid_hazard(path, model, t, 1'000'000);
      CHECK(std::abs(gl - tr) / tr < 1e-9);
      double prev = 0.0;
      for (int k = 0; k <= 50; ++k) {
        const double v = cumulative_hazard(path, model, k / 50.0, rule);
        CHECK(v >= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("failure times") {
    const auto rule = gauss_legendre(10);
    const CovariatePath flat(std::vector<double>(20, 0.0));
    HazardModel two;
    two.shape = Beta0Shape::constant;
    two.lambda_slope = 0.0;
    CHECK(*failure_time_from_uniform(flat, two, 1.0, rule) == 0.0);
    for (const double u : {0.9, 0.5, 0.2, 0.14}) {
      const auto t = failure_time_from_uniform(flat, two, u, rule);
      REQUIRE(t.has_value());
      CHECK(std::abs(*t + std::log(u) / 2.0) < 1e-10);
    }
    CHECK_FALSE(failure_time_from_uniform(flat, two, 0.1, rule).has_value());

    // Empirical survivor function against exp(-Lambda).
    const HazardModel model;
    Rng rng = make_rng(13);
    const auto path = CovariateModel(20).sample(rng);
    const int draws = 100'000;
    std::vector<double> times;
    times.reserve(draws);
    for (int i = 0; i < draws; ++i) {
      const auto t = gen_failure_time(path, model, rng, rule);
      times.push_back(t ? *t : 2.0);
    }
    std::sort(times.begin(), times.end());
    double sup = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double t = k / 200.0;
      const auto above = times.end() - std::upper_bound(times.begin(), times.end(), t);
      const double emp = static_cast<double>(above) / draws;
      sup = std::max(sup, std::abs(emp - std::exp(-cumulative_hazard(path, model, t, rule))));
    }
    CHECK(sup <= 0.01);
  }

  TEST_CASE("observation schedules") {
    ScenarioConfig cfg;
    Rng rng = make_rng(17);
    const int reps = 100'000;
    double count = 0.0;
    bool ordered = true;
    for (int i = 0; i < reps; ++i) {
      const auto s = gen_observation_schedule(cfg, rng);
      count += static_cast<double>(s.size());
      ordered = ordered && !s.empty() && std::is_sorted(s.begin(), s.end()) && s.front() > 0.0 &&
                s.back() < 1.0;
    }
    CHECK(ordered);
    CHECK(std::abs(count / reps - 6.0) < 0.05);

    cfg.obs_process = ObservationProcess::quadratic_intensity;
    count = 0.0;
    for (int i = 0; i < reps; ++i) {
      const auto s = gen_observation_schedule(cfg, rng);
      count += static_cast<double>(s.size());
      ordered = ordered && std::is_sorted(s.begin(), s.end()) &&
                std::all_of(s.begin(), s.end(), [](double t) { return t > 0.0 && t < 1.0; });
    }
    CHECK(ordered);
    CHECK(std::abs(count / reps - 20.0 / 3.0) < 0.1);
  }

  TEST_CASE("censoring calibration") {
    ScenarioConfig cfg;
    const double gamma = calibrate_gamma(cfg, 1);
    CHECK(std::abs(realized_censoring(cfg, gamma, 2) - 0.15) < 0.01);

    cfg.censor_target = 0.35;
    const double g35 = calibrate_gamma(cfg, 1);
    CHECK(g35 < gamma);
    CHECK(std::abs(realized_censoring(cfg, g35, 3) - 0.35) < 0.01);

    double prev = 1.0;
    for (const double g : {-1.5, -0.75, 0.0, 0.75, 1.5}) {
      const double f = realized_censoring(cfg, g, 4);
      CHECK(f <= prev);
      prev = f;
    }

    // gamma = 1.5 censors at the horizon only: the censored fraction is P(T > 1).
    const auto rule = gauss_legendre(10);
    const HazardModel model = HazardModel::from(cfg);
    const CovariateModel cov(20);
    Rng rng = make_rng(6);
    double survive = 0.0;
    const int paths = 20'000;
    for (int i = 0; i < paths; ++i) {
      survive += std::exp(-cumulative_hazard(cov.sample(rng), model, 1.0, rule));
    }
    CHECK(std::abs(realized_censoring(cfg, 1.5, 5) - survive / paths) < 0.01);

    cfg.beta0 = Beta0Shape::quadratic;
    cfg.censor_target = 0.15;
    try {
      static_cast<void>(calibrate_gamma(cfg, 1));
      FAIL("expected calibration_failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::calibration_failure);
    }
  }

  TEST_CASE("simulated datasets") {
    ScenarioConfig cfg;
    cfg.n = 1000;
    Rng a = make_rng(21);
    const Dataset d = simulate_dataset(cfg, 0.68, a);
    Rng b = make_rng(21);
    CHECK(d == simulate_dataset(cfg, 0.68, b));
    CHECK(d.tau() == 1.0);
    std::size_t censored = 0;
    for (const auto& s : d.subjects()) {
      CHECK(s.follow_up_time <= 1.0);
      CHECK(s.follow_up_time >= 0.0);
      if (!s.event) ++censored;
      for (const double r : s.obs_times) {
        CHECK(r > 0.0);
        CHECK(r < 1.0);
      }
    }
    CHECK(std::abs(static_cast<double>(censored) / 1000.0 - 0.15) < 0.03);

    cfg.n = 10;
    CHECK_THROWS_AS(simulate_dataset(cfg, 0.68, a), Error);
  }

  TEST_CASE("study tables do not depend on the thread count") {
    StudyConfig cfg;
    cfg.scenario.n = 200;
    cfg.scenario.replications = 100;
    cfg.scenario.seed = 3;
    cfg.bandwidths = {0.2, 0.2};
    cfg.eval_points = {0.5};
    cfg.gamma = 0.68;
    const StudyResult serial = monte_carlo_study(cfg);
    cfg.threads = 4;
    const StudyResult parallel = monte_carlo_study(cfg);
    REQUIRE(serial.records.size() == parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
      CHECK(serial.records[i].estimate == parallel.records[i].estimate);
      CHECK(serial.records[i].se == parallel.records[i].se);
    }
    CHECK(serial.points[0].bias == parallel.points[0].bias);
    CHECK(serial.points[0].cp == parallel.points[0].cp);

    const ReplicationRecord again = run_replication(cfg, 0.68, 7);
    CHECK(again.estimate == serial.records[7].estimate);
  }

  TEST_CASE("constant coefficient is recovered") {
    StudyConfig cfg;
    cfg.scenario.n = 1500;
    cfg.scenario.beta0 = Beta0Shape::constant;
    cfg.scenario.beta0_constant = -0.3;
    cfg.scenario.censor_target = 0.25;
    cfg.scenario.replications = 100;
    cfg.bandwidths = {0.15, 0.15};
    cfg.eval_points = {0.5};
    cfg.threads = 4;
    const StudyResult r = monte_carlo_study(cfg);
    const double mc_error = r.points[0].sd / std::sqrt(static_cast<double>(r.replications));
    CHECK(std::abs(r.points[0].bias) < 4.0 * mc_error);
  }
}
