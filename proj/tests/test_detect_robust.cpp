#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "gridwatch/detect_robust.hpp"
#include "gridwatch/errors.hpp"
#include "oracle/chi2_tail.hpp"
#include "support.hpp"

using namespace gridwatch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Chi2Config paper_bins() { return Chi2Config::equiprobable(115.0, 5, 80, 25.0133); }

std::vector<std::size_t> recount(const Chi2Config& cfg, const std::vector<double>& window) {
  std::vector<std::size_t> counts(cfg.bins(), 0);
  for (double c : window) ++counts[cfg.bin_of(c)];
  return counts;
}

}  // namespace

TEST_CASE("shewhart") {
  ShewhartConfig cfg{10.0};
  CHECK_FALSE(shewhart_step(0.0, cfg));
  CHECK(shewhart_step(10.0, cfg));
  CHECK_FALSE(shewhart_step(std::nextafter(10.0, 0.0), cfg));
  CHECK_THROWS_AS((ShewhartConfig{0.0}.validate()), ValidationError);
}

TEST_CASE("chi-squared bins") {
  SUBCASE("equiprobable edges at 115 degrees of freedom") {
    const auto cfg = paper_bins();
    REQUIRE(cfg.edges.size() == 6);
    CHECK(cfg.edges[0] == 0.0);
    CHECK(cfg.edges[1] == doctest::Approx(102.081).epsilon(1e-5));
    CHECK(cfg.edges[2] == doctest::Approx(110.547).epsilon(1e-5));
    CHECK(cfg.edges[3] == doctest::Approx(118.206).epsilon(1e-5));
    CHECK(cfg.edges[4] == doctest::Approx(127.531).epsilon(1e-5));
    CHECK(std::isinf(cfg.edges[5]));
    for (double p : cfg.probabilities) CHECK(p == doctest::Approx(0.2));
  }
  SUBCASE("half-open intervals") {
    const auto cfg = paper_bins();
    CHECK(cfg.bin_of(0.0) == 0);
    CHECK(cfg.bin_of(cfg.edges[1]) == 1);
    CHECK(cfg.bin_of(std::nextafter(cfg.edges[1], 0.0)) == 0);
    CHECK(cfg.bin_of(1e9) == 4);
  }
  SUBCASE("threshold is the 5e-5 upper quantile with 4 degrees of freedom") {
    CHECK(chi2_upper_quantile(4.0, 5e-5) == doctest::Approx(25.0133).epsilon(1e-5));
    CHECK(oracle::chi2_4_tail(25.0133) == doctest::Approx(5e-5).epsilon(1e-4));
    CHECK(chi2_quantile(2.0, 0.5) == doctest::Approx(2.0 * std::log(2.0)));
  }
  SUBCASE("invalid configurations") {
    auto cfg = paper_bins();
    cfg.probabilities[0] = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_THROWS_AS(Chi2Config::equiprobable(115.0, 1, 80, 25.0), ValidationError);
    CHECK_THROWS_AS(Chi2Config::equiprobable(115.0, 5, 0, 25.0), ValidationError);
  }
}

TEST_CASE("pearson statistic") {
  const auto cfg = paper_bins();
  auto fill = [&](std::vector<std::size_t> per_bin) {
    std::vector<double> w;
    for (std::size_t j = 0; j < per_bin.size(); ++j) {
      const double mid = j + 1 < cfg.edges.size() - 1 ? 0.5 * (cfg.edges[j] + cfg.edges[j + 1]) : cfg.edges[j] + 10;
      w.insert(w.end(), per_bin[j], mid);
    }
    return Chi2State(cfg, w);
  };
  CHECK(fill({16, 16, 16, 16, 16}).statistic() == doctest::Approx(0.0));
  CHECK(fill({80, 0, 0, 0, 0}).statistic() == doctest::Approx(320.0));
  CHECK_THROWS_AS(Chi2State(cfg, std::vector<double>(79, 1.0)), ContractError);

  SUBCASE("ring buffer counts match a recount") {
    RandomStream rng(8);
    auto st = make_chi2_state(cfg, 115.0, rng);
    for (int i = 0; i < 100000; ++i) {
      const double c = rng.chi_squared(rng.bernoulli(0.1) ? 150.0 : 115.0);
      const auto r = pearson_step(st, c);
      if (i % 997 == 0) {
        CHECK(st.counts() == recount(cfg, st.window()));
        CHECK(r.chi == doctest::Approx(st.statistic()));
        CHECK(st.window().back() == c);
      }
    }
    CHECK(st.counts() == recount(cfg, st.window()));
  }
}

TEST_CASE("normalized innovation") {
  RowMatrix rows(1, 1);
  rows << 1.0;
  const auto model = model_from_rows(rows, 1, 0.0, 1.0);
  KalmanState ks = initial_kalman_state(Eigen::VectorXd::Zero(1), 1.0);
  CHECK(chi2_sample(model, ks, MeasurementBatch{1, 1, Eigen::VectorXd::Zero(1)}) == doctest::Approx(0.0));
  CHECK(chi2_sample(model, ks, MeasurementBatch{1, 1, Eigen::VectorXd::Constant(1, 3.0)}) == doctest::Approx(4.5));

  SUBCASE("mean over a no-attack run is the measurement dimension") {
    const auto m = testsupport::ieee14_model();
    RandomStream sim(21);
    SimState st{0, Eigen::VectorXd::Zero(13)};
    KalmanState pre = initial_kalman_state(st.x, 1e-4);
    double sum = 0.0;
    const int steps = 4000;
    for (int t = 1; t <= steps; ++t) {
      auto [next, y] = simulate_step(m, st, sim);
      st = next;
      pre = kf_predict(m, pre);
      sum += chi2_sample(m, pre, y);
      pre = kf_update_pre(m, pre, y);
    }
    CHECK(sum / steps == doctest::Approx(115.0).epsilon(0.02));
  }
}

TEST_CASE("algorithm 2 combination") {
  const ShewhartConfig sh{10.0};
  CusumState cs;
  cs.g = 1.0;
  auto v = algorithm2_step(cs, 0.5, sh, PearsonResult{30.0, true}, 120.0, 8.0);
  CHECK(v.stop);
  CHECK(v.fired == FiringSet{false, false, true});

  cs.g = 12.0;
  v = algorithm2_step(cs, 11.0, sh, PearsonResult{1.0, false}, 120.0, 8.0);
  CHECK(v.fired == FiringSet{true, true, false});

  cs.g = 0.0;
  v = algorithm2_step(cs, -3.0, sh, PearsonResult{1.0, false}, 120.0, 8.0);
  CHECK_FALSE(v.stop);
  CHECK_FALSE(v.fired.any());
}

TEST_CASE("benchmark detectors") {
  SUBCASE("nonparametric cusum") {
    NpCusumConfig cfg{10.0, 0.0, false};
    NpCusumState st;
    for (int i = 0; i < 100; ++i) CHECK_FALSE(np_cusum_step(st, 0.0, cfg).stop);
    CHECK(st.S == 0.0);

    NpCusumState ramp;
    int stop_at = -1;
    for (int t = 1; t <= 20 && stop_at < 0; ++t)
      if (np_cusum_step(ramp, 1.0, cfg).stop) stop_at = t;
    CHECK(stop_at == 10);

    NpCusumState neg;
    np_cusum_step(neg, 0.0, NpCusumConfig{10.0, 2.0, false});
    CHECK(neg.S == -2.0);
    NpCusumState clamped;
    np_cusum_step(clamped, 0.0, NpCusumConfig{10.0, 2.0, true});
    CHECK(clamped.S == 0.0);
  }
  SUBCASE("euclidean and cosine") {
    Eigen::VectorXd a(3), b(3);
    a << 1, 2, 3;
    b << -2, 1, 0;
    CHECK(euclidean_step(a, a, 0.1).statistic == 0.0);
    CHECK_FALSE(euclidean_step(a, a, 0.1).stop);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK_FALSE(cosine_step(a, a, 0.99).stop);
    CHECK(cosine_similarity(-a, a) == doctest::Approx(-1.0));
    CHECK(cosine_step(-a, a, -0.99).stop);
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(Eigen::VectorXd::Zero(3), a) == -1.0);
    CHECK(euclidean_step(a, b, std::sqrt(19.0)).stop);
  }
  SUBCASE("baseline drift is centered") {
    const auto m = testsupport::ieee14_model();
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(13);
    const double mu = estimate_innovation_baseline(m, x0, 1e-4, 20000, 100, 3);
    CHECK(mu > 0.0);

    // Independent run: mean of ||y - H x_{t|t-1}|| - mu is zero within 4 sigma.
    RandomStream sim(99);
    SimState st{0, x0};
    KalmanState pre = initial_kalman_state(x0, 1e-4);
    std::vector<double> d;
    for (int t = 1; t <= 6000; ++t) {
      auto [next, y] = simulate_step(m, st, sim);
      st = next;
      pre = kf_predict(m, pre);
      if (t > 100) d.push_back(innovation_norm(m, y, pre.x_pred) - mu);
      pre = kf_update_pre(m, pre, y);
    }
    double mean = 0.0, var = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d.size() - 1);
    CHECK(std::abs(mean) < 4.0 * std::sqrt(var / static_cast<double>(d.size())));
  }
  SUBCASE("baseline cache") {
    const auto m = testsupport::ieee14_model();
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(13);
    const auto path = std::filesystem::temp_directory_path() / "gridwatch_baseline_test.cache";
    std::filesystem::remove(path);
    const double first = cached_innovation_baseline(path, m, x0, 1e-4, 500, 1);
    REQUIRE(std::filesystem::exists(path));
    CHECK(cached_innovation_baseline(path, m, x0, 1e-4, 500, 1) == first);
    {
      std::ofstream out(path);
      out << "0000000000000000 500 123.0\n";
    }
    CHECK(cached_innovation_baseline(path, m, x0, 1e-4, 500, 1) == doctest::Approx(first));
    std::filesystem::remove(path);
  }
}
