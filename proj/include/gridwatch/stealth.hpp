#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/rng.hpp"

namespace gridwatch {

class GaussianPdf {
 public:
  GaussianPdf(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  double log_density(const Eigen::VectorXd& y) const;
  double log_det() const { return log_det_; }
  Eigen::VectorXd sample(RandomStream& stream) const;
  // Sigma^{-1} v via the cached Cholesky factor.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return chol_.solve(v); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& m) const { return chol_.solve(m); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double log_det_ = 0.0;
};

// KL(p || q) = integral p log(p/q).
double kl_gaussian(const GaussianPdf& p, const GaussianPdf& q);

struct OnOffBudget {
  double h_prime = 0.0;
  double kl_10 = 0.0;       // KL(f1, f0)
  double kl_01 = 0.0;       // KL(f0, f1)
  double t_on_max = 0.0;    // T_on <= h'/KL(f1,f0)
  double t_off_min = 0.0;   // T_off >  h'/KL(f0,f1)
  double duty_bound = 0.0;  // KL(f0,f1) / (KL(f1,f0) + KL(f0,f1))

  // Integer schedule: largest T_on within the bound, smallest T_off strictly
  // above it.
  std::int64_t integer_on() const;
  std::int64_t integer_off() const;
};

OnOffBudget onoff_budget(double kl_10, double kl_01, double h_prime);
OnOffBudget onoff_budget(const GaussianPdf& f0, const GaussianPdf& f1, double h_prime);

// Lower-bound recursion rho_t = max{0, rho_{t-1} + E[l_t]} under a periodic
// schedule (T_on steps with drift +KL(f1,f0), T_off steps with drift
// -KL(f0,f1)), starting at the onset with rho = 0. Returns every value.
std::vector<double> rho_sequence(double kl_10, double kl_01, std::int64_t t_on, std::int64_t t_off,
                                 std::size_t cycles);

// E_{f1'}[log f1/f0] = KL(f1', f0) - KL(f1', f1).
double persistent_stealth_gap(const GaussianPdf& f1p, const GaussianPdf& f0, const GaussianPdf& f1);

// N([m, m], [[s2, phi], [phi, s2]]) with m = (mu0 + mu1)/2, which sits at
// equal KL distance from N([mu0,mu0], s2 I) and N([mu1,mu1], s2 I).
GaussianPdf construct_stealthy_gaussian(double mu0, double mu1, double sigma2, double phi_corr);
double stealthy_gaussian_divergence(double mu0, double mu1, double sigma2, double phi_corr);
GaussianPdf isotropic_gaussian(double mu, double sigma2, Eigen::Index dim);

// Known-pdf CUSUM g_t = max{0, g_{t-1} + log f1(y_t)/f0(y_t)} run on samples of
// `source`; returns the g path.
std::vector<double> known_pdf_cusum_path(const GaussianPdf& f0, const GaussianPdf& f1, const GaussianPdf& source,
                                         std::size_t steps, RandomStream& stream);

}  // namespace gridwatch
