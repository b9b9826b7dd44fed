#include "gridwatch/stealth.hpp"

#include <cmath>
#include <numbers>

#include "gridwatch/errors.hpp"

namespace gridwatch {

GaussianPdf::GaussianPdf(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) throw ValidationError("covariance shape does not match mean");
  if (!cov_.isApprox(cov_.transpose(), 1e-12)) throw ValidationError("covariance must be symmetric");
  chol_.compute(cov_);
  if (chol_.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  const Eigen::MatrixXd l = chol_.matrixL();
  log_det_ = 2.0 * l.diagonal().array().log().sum();
  if (!std::isfinite(log_det_)) throw NumericError("covariance is not positive definite");
}

double GaussianPdf::log_density(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd d = y - mean_;
  const double quad = d.dot(chol_.solve(d));
  return -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) + log_det_ + quad);
}

Eigen::VectorXd GaussianPdf::sample(RandomStream& stream) const {
  Eigen::VectorXd z(dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = stream.gaussian();
  return mean_ + chol_.matrixL() * z;
}

double kl_gaussian(const GaussianPdf& p, const GaussianPdf& q) {
  if (p.dim() != q.dim()) throw ValidationError("KL divergence needs equal dimensions");
  const double d = static_cast<double>(p.dim());
  const double trace = q.solve(p.cov()).trace();
  const Eigen::VectorXd diff = q.mean() - p.mean();
  const double quad = diff.dot(q.solve(diff));
  const double kl = 0.5 * (trace + quad - d + q.log_det() - p.log_det());
  return std::max(0.0, kl);
}

std::int64_t OnOffBudget::integer_on() const { return static_cast<std::int64_t>(std::floor(t_on_max)); }
std::int64_t OnOffBudget::integer_off() const { return static_cast<std::int64_t>(std::floor(t_off_min)) + 1; }

OnOffBudget onoff_budget(double kl_10, double kl_01, double h_prime) {
  if (!(kl_10 > 0.0) || !(kl_01 > 0.0)) throw ValidationError("on-off budget needs distinct pre- and post-attack densities");
  if (!(h_prime >= kl_10)) throw ValidationError("on-off budget undefined: attacker threshold h' must be >= KL(f1,f0)");
  OnOffBudget b;
  b.h_prime = h_prime;
  b.kl_10 = kl_10;
  b.kl_01 = kl_01;
  b.t_on_max = h_prime / kl_10;
  b.t_off_min = h_prime / kl_01;
  b.duty_bound = kl_01 / (kl_10 + kl_01);
  return b;
}

OnOffBudget onoff_budget(const GaussianPdf& f0, const GaussianPdf& f1, double h_prime) {
  return onoff_budget(kl_gaussian(f1, f0), kl_gaussian(f0, f1), h_prime);
}

std::vector<double> rho_sequence(double kl_10, double kl_01, std::int64_t t_on, std::int64_t t_off,
                                 std::size_t cycles) {
  if (t_on < 1 || t_off < 0) throw ValidationError("schedule needs T_on >= 1 and T_off >= 0");
  std::vector<double> rho;
  rho.reserve(cycles * static_cast<std::size_t>(t_on + t_off));
  double r = 0.0;
  for (std::size_t c = 0; c < cycles; ++c) {
    for (std::int64_t i = 0; i < t_on; ++i) rho.push_back(r = std::max(0.0, r + kl_10));
    for (std::int64_t i = 0; i < t_off; ++i) rho.push_back(r = std::max(0.0, r - kl_01));
  }
  return rho;
}

double persistent_stealth_gap(const GaussianPdf& f1p, const GaussianPdf& f0, const GaussianPdf& f1) {
  return kl_gaussian(f1p, f0) - kl_gaussian(f1p, f1);
}

GaussianPdf isotropic_gaussian(double mu, double sigma2, Eigen::Index dim) {
  return GaussianPdf(Eigen::VectorXd::Constant(dim, mu), sigma2 * Eigen::MatrixXd::Identity(dim, dim));
}

GaussianPdf construct_stealthy_gaussian(double mu0, double mu1, double sigma2, double phi_corr) {
  if (!(sigma2 > 0.0)) throw ValidationError("variance must be positive");
  if (!(sigma2 * sigma2 - phi_corr * phi_corr > 0.0))
    throw ValidationError("infeasible correlation: need sigma^4 - phi^2 > 0");
  const double m = 0.5 * (mu0 + mu1);
  Eigen::Matrix2d cov;
  cov << sigma2, phi_corr, phi_corr, sigma2;
  return GaussianPdf(Eigen::Vector2d(m, m), cov);
}

double stealthy_gaussian_divergence(double mu0, double mu1, double sigma2, double phi_corr) {
  const double s4 = sigma2 * sigma2;
  return (mu1 - mu0) * (mu1 - mu0) / (4.0 * sigma2) + 0.5 * std::log(s4 / (s4 - phi_corr * phi_corr));
}

std::vector<double> known_pdf_cusum_path(const GaussianPdf& f0, const GaussianPdf& f1, const GaussianPdf& source,
                                         std::size_t steps, RandomStream& stream) {
  std::vector<double> g(steps);
  double acc = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::VectorXd y = source.sample(stream);
    acc = std::max(0.0, acc + f1.log_density(y) - f0.log_density(y));
    g[t] = acc;
  }
  return g;
}

}  // namespace gridwatch
