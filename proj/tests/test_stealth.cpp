#include <doctest.h>

#include <cmath>
#include <vector>

#include "gridwatch/errors.hpp"
#include "gridwatch/stealth.hpp"

using namespace gridwatch;

namespace {

GaussianPdf scalar(double mean, double var) {
  return GaussianPdf(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

// KL(p||q) for scalar Gaussians by trapezoidal integration of p log(p/q).
double kl_by_quadrature(double mp, double vp, double mq, double vq) {
  const double lo = mp - 12 * std::sqrt(vp), hi = mp + 12 * std::sqrt(vp);
  const int n = 200000;
  const double dx = (hi - lo) / n;
  auto logpdf = [](double x, double m, double v) {
    return -0.5 * std::log(2 * M_PI * v) - 0.5 * (x - m) * (x - m) / v;
  };
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * dx;
    const double lp = logpdf(x, mp, vp);
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(lp) * (lp - logpdf(x, mq, vq));
  }
  return sum * dx;
}

GaussianPdf random_pd(RandomStream& rng, Eigen::Index d) {
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.gaussian();
  Eigen::VectorXd mu(d);
  for (Eigen::Index i = 0; i < d; ++i) mu[i] = rng.gaussian();
  return GaussianPdf(mu, m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d));
}

}  // namespace

TEST_CASE("gaussian pdf") {
  CHECK_THROWS_AS(GaussianPdf(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3)), ValidationError);
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(GaussianPdf(Eigen::VectorXd::Zero(2), bad), NumericError);
  const auto p = scalar(0.0, 1.0);
  CHECK(p.log_density(Eigen::VectorXd::Zero(1)) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
}

TEST_CASE("kl divergence") {
  const auto a = scalar(0.0, 1.0);
  CHECK(kl_gaussian(a, a) == doctest::Approx(0.0));
  CHECK(kl_gaussian(a, scalar(1.0, 1.0)) == doctest::Approx(0.5));
  CHECK(kl_gaussian(scalar(0.3, 0.7), scalar(-0.4, 1.9)) ==
        doctest::Approx(kl_by_quadrature(0.3, 0.7, -0.4, 1.9)).epsilon(1e-8));
  CHECK(kl_gaussian(scalar(1.0, 2.0), scalar(0.0, 0.5)) == doctest::Approx(kl_by_quadrature(1.0, 2.0, 0.0, 0.5)).epsilon(1e-8));
  CHECK_THROWS_AS(kl_gaussian(a, isotropic_gaussian(0.0, 1.0, 2)), ValidationError);

  SUBCASE("non-negative on random pairs") {
    RandomStream rng(12);
    for (int rep = 0; rep < 10000; ++rep) {
      const Eigen::Index d = 1 + rep % 4;
      const auto p = random_pd(rng, d);
      const auto q = random_pd(rng, d);
      CHECK(kl_gaussian(p, q) > 0.0);
      CHECK(std::abs(kl_gaussian(p, p)) < 1e-10);
    }
  }
}

TEST_CASE("on-off budget") {
  SUBCASE("symmetric") {
    const auto b = onoff_budget(0.5, 0.5, 1.0);
    CHECK(b.t_on_max == doctest::Approx(2.0));
    CHECK(b.t_off_min == doctest::Approx(2.0));
    CHECK(b.duty_bound == doctest::Approx(0.5));
    CHECK(b.integer_on() == 2);
    CHECK(b.integer_off() == 3);
  }
  SUBCASE("asymmetric") {
    const auto b = onoff_budget(1.0, 0.25, 1.0);
    CHECK(b.t_on_max == doctest::Approx(1.0));
    CHECK(b.t_off_min == doctest::Approx(4.0));
    CHECK(b.duty_bound == doctest::Approx(0.2));
    CHECK(b.integer_off() == 5);
  }
  SUBCASE("from densities") {
    const auto b = onoff_budget(scalar(0.0, 1.0), scalar(1.0, 1.0), 3.0);
    CHECK(b.kl_10 == doctest::Approx(0.5));
    CHECK(b.t_on_max == doctest::Approx(6.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(onoff_budget(0.0, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(onoff_budget(2.0, 1.0, 1.0), ValidationError);
  }
  SUBCASE("rho recursion stays below h' with the integer schedule") {
    const auto b = onoff_budget(0.7, 0.3, 5.0);
    const auto rho = rho_sequence(b.kl_10, b.kl_01, b.integer_on(), b.integer_off(), 1000);
    CHECK(rho.size() == 1000u * static_cast<std::size_t>(b.integer_on() + b.integer_off()));
    double peak = 0.0;
    for (double r : rho) peak = std::max(peak, r);
    CHECK(peak <= 5.0);
    // One step longer on-time overshoots.
    const auto over = rho_sequence(b.kl_10, b.kl_01, b.integer_on() + 1, b.integer_off(), 10);
    double over_peak = 0.0;
    for (double r : over) over_peak = std::max(over_peak, r);
    CHECK(over_peak > 5.0);
  }
}

TEST_CASE("persistent stealth") {
  const auto f0 = isotropic_gaussian(0.0, 1.0, 2);
  const auto f1 = isotropic_gaussian(2.0, 1.0, 2);
  CHECK(persistent_stealth_gap(f0, f0, f1) == doctest::Approx(-kl_gaussian(f0, f1)));
  CHECK(persistent_stealth_gap(f1, f0, f1) == doctest::Approx(kl_gaussian(f1, f0)));

  SUBCASE("construction") {
    CHECK(stealthy_gaussian_divergence(0.0, 2.0, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(stealthy_gaussian_divergence(0.0, 2.0, 1.0, 0.6) == doctest::Approx(1.0 + 0.5 * std::log(1.0 / 0.64)));
    const auto f1p = construct_stealthy_gaussian(0.0, 2.0, 1.0, 0.6);
    CHECK(kl_gaussian(f1p, f0) == doctest::Approx(1.0 + 0.5 * std::log(1.0 / 0.64)));
    CHECK(std::abs(persistent_stealth_gap(f1p, f0, f1)) < 1e-10);
    CHECK_THROWS_AS(construct_stealthy_gaussian(0.0, 2.0, 1.0, 1.0), ValidationError);
  }
  SUBCASE("monte carlo drift matches the gap") {
    const auto f1p = isotropic_gaussian(0.7, 1.3, 2);
    RandomStream rng(31);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto y = f1p.sample(rng);
      const double l = f1.log_density(y) - f0.log_density(y);
      sum += l;
      sq += l * l;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean - persistent_stealth_gap(f1p, f0, f1)) < 3.0 * se);
  }
  SUBCASE("known-pdf cusum") {
    RandomStream rng(5);
    const auto honest = known_pdf_cusum_path(f0, f1, f1, 1000, rng);
    CHECK(honest.back() == doctest::Approx(1000 * kl_gaussian(f1, f0)).epsilon(0.1));
    const auto quiet = known_pdf_cusum_path(f0, f1, f0, 1000, rng);
    for (double g : quiet) CHECK(g >= 0.0);
    CHECK(quiet.back() < 20.0);
  }
}
