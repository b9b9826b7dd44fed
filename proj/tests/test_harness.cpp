#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gridwatch/csv_output.hpp"
#include "gridwatch/errors.hpp"
#include "gridwatch/harness.hpp"
#include "support.hpp"

using namespace gridwatch;

namespace {

Experiment small_experiment(const std::string& name, std::size_t trials = 6, std::int64_t horizon = 400) {
  auto cfg = load_experiment_config(testsupport::config_path(name));
  cfg.trials = trials;
  cfg.horizon = horizon;
  cfg.benchmarks.baseline_cache.clear();
  cfg.benchmarks.baseline_samples = 2000;
  cfg.threads = 1;
  return prepare_experiment(cfg);
}

std::string trials_csv(const std::vector<TrialResult>& results) {
  std::ostringstream out;
  std::vector<DetectorId> ds(kAllDetectors.begin(), kAllDetectors.end());
  write_trials_csv(out, results, ds);
  return out.str();
}

}  // namespace

TEST_CASE("detector names round-trip") {
  for (auto d : kAllDetectors) CHECK(parse_detector(detector_name(d)) == d);
  CHECK_THROWS(parse_detector("oracle"));
}

TEST_CASE("trial determinism and paired measurements") {
  auto exp = small_experiment("case3_hybrid.cfg");
  const auto a = run_trial(exp, 2);
  const auto b = run_trial(exp, 2);
  CHECK(a.stops == b.stops);
  CHECK(a.measurement_hash == b.measurement_hash);
  CHECK(a.tau_hat == b.tau_hat);
  CHECK(run_trial(exp, 3).measurement_hash != a.measurement_hash);

  SUBCASE("thresholds do not change the measurements") {
    TrialOptions full;
    full.stop_early = false;
    const auto base = run_trial(exp, 1, full);
    auto other = exp;
    other.plan.of(DetectorId::algorithm1) = {1.0, 100.0};
    other.plan.of(DetectorId::euclidean).clear();
    const auto alt = run_trial(other, 1, full);
    CHECK(alt.measurement_hash == base.measurement_hash);
    CHECK(alt.steps == base.steps);
    CHECK(alt.stop(DetectorId::algorithm1, 0) <= alt.stop(DetectorId::algorithm1, 1));
  }
  SUBCASE("algorithm 2 is the minimum of its sub-detectors") {
    for (std::size_t trial = 0; trial < 6; ++trial) {
      const auto r = run_trial(exp, trial);
      const auto t2 = r.stop(DetectorId::algorithm2);
      CHECK(t2 == std::min({r.stop(DetectorId::algorithm1), r.stop(DetectorId::shewhart), r.stop(DetectorId::chi2)}));
      CHECK(t2 <= r.stop(DetectorId::algorithm1));
      if (t2 != kNever) CHECK(r.fired.any());
    }
  }
  SUBCASE("threads do not change results") {
    const auto serial = run_trials(exp, 6, {}, 1);
    const auto parallel = run_trials(exp, 6, {}, 3);
    CHECK(trials_csv(serial) == trials_csv(parallel));
  }
}

TEST_CASE("no attack with unreachable thresholds never stops") {
  auto exp = small_experiment("case1_fdi.cfg", 3, 300);
  for (auto d : kAllDetectors) {
    if (exp.plan.enabled(d)) exp.plan.of(d) = {d == DetectorId::cosine ? -2.0 : 1e12};
  }
  TrialOptions quiet;
  quiet.attack_enabled = false;
  for (const auto& r : run_trials(exp, 3, quiet)) {
    for (auto d : kAllDetectors)
      if (!r.stops[index_of(d)].empty()) CHECK(r.stop(d) == kNever);
    CHECK(r.steps == 300);
    CHECK_FALSE(r.fired.any());
  }
  const auto fa = estimate_false_alarm_period(std::vector<std::int64_t>(4, kNever), 300);
  CHECK(fa.censored == 4);
  CHECK(fa.period.mean == 300.0);
}

TEST_CASE("step log and mse") {
  auto exp = small_experiment("fig8_mse.cfg", 4, 150);
  TrialOptions opts;
  opts.log_steps = true;
  const auto results = run_trials(exp, 4, opts);
  for (const auto& r : results) {
    REQUIRE(r.log.size() == 150);
    for (const auto& rec : r.log) CHECK(rec.g >= 0.0);
  }
  const auto curve = mse_curves(results);
  CHECK(curve.t.size() == 150);
  std::ostringstream out;
  write_mse_csv(out, curve);
  CHECK(out.str().rfind("t,mse0,mse1\n", 0) == 0);
  std::ostringstream log;
  write_trial_log_csv(log, results[0].log);
  CHECK(log.str().rfind("t,g,beta,chi,mse0,mse1\n", 0) == 0);
}

TEST_CASE("metrics") {
  SUBCASE("delay") {
    const std::vector<std::int64_t> stops = {102, 105, 103};
    const auto d = estimate_delay(stops, 100, 1000);
    CHECK(d.delay.mean == doctest::Approx(10.0 / 3.0));
    CHECK(d.false_alarms == 0);

    const std::vector<std::int64_t> mixed = {90, 110, kNever, 5000};
    const auto m = estimate_delay(mixed, 100, 1000);
    CHECK(m.false_alarms == 1);
    CHECK(m.misses == 2);
    CHECK(m.delay.n == 1);
    CHECK(m.delay.mean == 10.0);

    const auto none = estimate_delay(std::vector<std::int64_t>(3, kNever), 100, 1000);
    CHECK(none.misses == 3);
    CHECK(none.delay.n == 0);
    CHECK(std::isnan(none.delay.mean));
    CHECK_THROWS_AS(estimate_delay(std::vector<std::int64_t>{}, 100, 1000), ContractError);
  }
  SUBCASE("confidence interval") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const auto ci = mean_ci(xs);
    CHECK(ci.mean == 2.5);
    // t_{0.975,3} = 3.182446
    CHECK(ci.ci == doctest::Approx(3.182446 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-5));
  }
  SUBCASE("miss ratio") {
    CHECK(missed_detection_ratio(std::vector<std::int64_t>(5, 100), 100, 50) == 0.0);
    CHECK(missed_detection_ratio(std::vector<std::int64_t>(5, kNever), 100, 50) == 1.0);
    const std::vector<std::int64_t> log = {99, 100, 120, 149, 150, 151, kNever, 130, 101, 10};
    CHECK(missed_detection_ratio(log, 100, 50) == doctest::Approx(0.5));
  }
  SUBCASE("first detector") {
    std::vector<std::vector<std::int64_t>> runs = {{5, kNever}, {5, kNever}};
    CHECK(first_detector_ratio(runs) == std::vector<double>{1.0, 0.0});
    runs = {{7, 7}, {3, 3}};
    CHECK(first_detector_ratio(runs) == std::vector<double>{1.0, 1.0});
    runs = {{1, 2, 3}, {4, 2, 9}, {kNever, kNever, kNever}, {5, 5, 6}, {8, 9, 7}};
    const auto r = first_detector_ratio(runs);
    CHECK(r[0] == doctest::Approx(0.4));
    CHECK(r[1] == doctest::Approx(0.4));
    CHECK(r[2] == doctest::Approx(0.2));
  }
  SUBCASE("geometric false-alarm period") {
    // A Shewhart test on a synthetic beta stream fires with probability p per step.
    RandomStream rng(6);
    const double p = 0.01;
    const ShewhartConfig cfg{1.0};
    std::vector<std::int64_t> stops;
    for (int run = 0; run < 4000; ++run) {
      std::int64_t t = 1;
      while (!shewhart_step(rng.bernoulli(p) ? 2.0 : 0.0, cfg)) ++t;
      stops.push_back(t);
    }
    const auto fa = estimate_false_alarm_period(stops, 1000000);
    CHECK(fa.period.mean == doctest::Approx(1.0 / p).epsilon(0.1));
  }
}

TEST_CASE("tradeoff sweep") {
  auto exp = small_experiment("case1_fdi.cfg", 8, 600);
  const auto curve = sweep_tradeoff(exp, DetectorId::algorithm1, {1.0, 4.0, 16.0});
  REQUIRE(curve.size() == 3);
  for (std::size_t j = 1; j < curve.size(); ++j) CHECK(curve[j].fap.period.mean >= curve[j - 1].fap.period.mean);
  // Mean delay is taken over the runs without a false alarm, so it is not
  // monotone by construction; the per-run stopping time is.
  exp.plan.of(DetectorId::algorithm1) = {1.0, 4.0, 16.0};
  for (const auto& r : run_trials(exp, 8)) {
    CHECK(r.stop(DetectorId::algorithm1, 0) <= r.stop(DetectorId::algorithm1, 1));
    CHECK(r.stop(DetectorId::algorithm1, 1) <= r.stop(DetectorId::algorithm1, 2));
  }
  std::ostringstream a, b;
  write_tradeoff_csv(a, curve);
  write_tradeoff_csv(b, sweep_tradeoff(exp, DetectorId::algorithm1, {1.0, 4.0, 16.0}));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("h,fap,fap_ci,delay,delay_ci,miss_ratio", 0) == 0);
  CHECK_THROWS_AS(sweep_tradeoff(exp, DetectorId::algorithm1, {}), ContractError);
}
