#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detect_core.hpp"
#include "gridwatch/estimation.hpp"
#include "gridwatch/grid_model.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

struct ShewhartConfig {
  double phi = 10.0;
  void validate() const;
};

// Repeated GLLR test: fires on the step where beta_t >= phi.
bool shewhart_step(double beta, const ShewhartConfig& cfg);

struct Chi2Config {
  std::vector<double> probabilities;  // p_1..p_M
  std::vector<double> edges;          // M+1 bounds, edges[0] = 0, edges[M] = +inf; bin j is [edges[j], edges[j+1])
  std::size_t window = 80;            // L
  double threshold = 25.0133;         // Pearson threshold

  std::size_t bins() const { return probabilities.size(); }
  std::size_t bin_of(double c) const;
  void validate() const;

  // M equiprobable bins from the chi-squared(dof) quantile function.
  static Chi2Config equiprobable(double dof, std::size_t bins, std::size_t window, double threshold);
};

// Upper-tail quantile of the chi-squared distribution.
double chi2_upper_quantile(double dof, double tail_probability);
double chi2_quantile(double dof, double p);

// Sliding window of normalized innovation samples with incremental bin counts.
class Chi2State {
 public:
  Chi2State(const Chi2Config& cfg, std::vector<double> initial_window);

  // Evicts the oldest sample, inserts `c`, refreshes the statistic.
  double push(double c);
  double statistic() const { return statistic_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::vector<double> window() const;  // oldest first
  const Chi2Config& config() const { return cfg_; }

 private:
  double recompute() const;

  Chi2Config cfg_;
  std::vector<double> ring_;
  std::vector<std::size_t> ring_bins_;
  std::size_t head_ = 0;  // index of the oldest sample
  std::vector<std::size_t> counts_;
  double statistic_ = 0.0;
};

// Initial window: L draws of a chi-squared variable with `dof` degrees of freedom.
Chi2State make_chi2_state(const Chi2Config& cfg, double dof, RandomStream& stream);

struct PearsonResult {
  double chi = 0.0;
  bool stop = false;
};
PearsonResult pearson_step(Chi2State& st, double c_new);

// Normalized innovation squared r^T Q^{-1} r with r = y - H x_{t|t-1} and
// Q = H P_{t|t-1} H^T + sigma_w^2 I, from the pre filter's prediction.
double chi2_sample(const GridModel& model, const KalmanState& pre_filter, const MeasurementBatch& y);

enum class Detector : std::uint8_t { algorithm1 = 0, shewhart = 1, chi2 = 2 };

struct FiringSet {
  bool algorithm1 = false;
  bool shewhart = false;
  bool chi2 = false;
  bool any() const { return algorithm1 || shewhart || chi2; }
  bool operator==(const FiringSet&) const = default;
};

struct Algorithm2Verdict {
  FiringSet fired;
  bool stop = false;
  double g = 0.0;
  double beta = 0.0;
  double chi = 0.0;
  double c = 0.0;
};

// Combines one step of the three sub-detectors: stop at the first of
// g_t >= h, beta_t >= phi, chi_t >= varphi. All firing detectors are reported.
Algorithm2Verdict algorithm2_step(const CusumState& cusum_after_step, double beta, const ShewhartConfig& shewhart,
                                  const PearsonResult& pearson, double c, double h);

// ---- benchmark detectors ----

struct NpCusumConfig {
  double q = 10.0;
  double baseline = 0.0;  // E_0 ||y - H x_{t|t-1}||
  bool clamp = false;     // max{0, .} variant of the recursion
};

struct NpCusumState {
  double S = 0.0;
};

struct BenchmarkStep {
  double statistic = 0.0;
  bool stop = false;
};

// S_t = S_{t-1} + ||y - H x^0_{t|t-1}|| - baseline; stops when S_t >= q.
BenchmarkStep np_cusum_step(NpCusumState& st, double innovation_norm, const NpCusumConfig& cfg);

double innovation_norm(const GridModel& model, const MeasurementBatch& y, const Eigen::VectorXd& x_pre_pred);

// ||y - y_pred||; stops when >= threshold.
BenchmarkStep euclidean_step(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred, double threshold);
// Cosine similarity; stops when <= threshold. A zero vector counts as maximal
// dissimilarity (similarity -1).
BenchmarkStep cosine_step(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred, double threshold);
double cosine_similarity(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred);

// Monte Carlo estimate of E_0 ||y - H x^0_{t|t-1}|| from one no-attack
// trajectory of `samples` steps after `burn_in` steps.
double estimate_innovation_baseline(const GridModel& model, const Eigen::VectorXd& x0, double p0_scale,
                                    std::size_t samples, std::size_t burn_in, std::uint64_t seed);

// Sidecar cache: one line "<fingerprint-hex> <samples> <value>". A mismatching
// fingerprint or sample count recomputes and rewrites the file.
double cached_innovation_baseline(const std::filesystem::path& cache, const GridModel& model,
                                  const Eigen::VectorXd& x0, double p0_scale, std::size_t samples,
                                  std::uint64_t seed);

}  // namespace gridwatch
