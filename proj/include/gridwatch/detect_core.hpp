#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/estimation.hpp"
#include "gridwatch/grid_model.hpp"

namespace gridwatch {

struct DetectorConfig {
  double gamma = 0.022;       // smallest FDI magnitude of interest
  double sigma2_min = 1e-2;   // smallest jamming variance of interest
  double h = 25.0;            // CUSUM threshold; +inf never stops

  void validate() const;
};

// Sufficient statistics of one meter's residual block.
struct MeterStatistics {
  double delta = 0.0;     // sum e
  double zeta = 0.0;      // sum e^2
  double varrho = 0.0;    // sum (e + gamma)^2
  double varpi = 0.0;     // sum (e - gamma)^2
  double centered = 0.0;  // sum (e - delta/lambda)^2
};

struct ResidualBlock {
  std::size_t lambda = 1;
  double gamma = 0.0;
  Eigen::MatrixXd e;  // K x lambda, e(k,i) = y_{k,i} - h_k^T x
  std::vector<MeterStatistics> meters;
};

// Residuals of y against the per-meter prediction H x. For the detector x is
// the post-attack filter's one-step prediction.
ResidualBlock residual_block(const GridModel& model, const MeasurementBatch& y, const Eigen::VectorXd& x,
                             double gamma);
ResidualBlock residual_block_from_samples(const Eigen::MatrixXd& e, double gamma);

enum class Hypothesis : std::uint8_t { none = 0, fdi = 1, jamming = 2, hybrid = 3 };

// Twice the negative profile log-likelihood (up to the shared lambda*log(2*pi))
// of a meter block under each hypothesis, maximized over the constrained
// attack magnitudes.
struct HypothesisCosts {
  double u0 = 0.0;
  double uf = 0.0;
  double uj = 0.0;
  double ufj = 0.0;

  double of(Hypothesis h) const;
};

HypothesisCosts meter_costs(const MeterStatistics& s, std::size_t lambda, double sigma_w2, double gamma,
                            double sigma2_min);
std::vector<HypothesisCosts> hypothesis_costs(const ResidualBlock& rb, double sigma_w2, const DetectorConfig& cfg);

// Ties go to the earlier hypothesis in the order none, fdi, jamming, hybrid.
Hypothesis classify(const HypothesisCosts& c);

struct MeterClassification {
  std::vector<Hypothesis> label;  // per meter

  std::vector<std::size_t> members(Hypothesis h) const;
  std::size_t size() const { return label.size(); }
};

MeterClassification classify_meters(std::span<const HypothesisCosts> costs);

struct AttackEstimate {
  std::vector<double> a_hat;      // per meter bias estimate
  std::vector<double> sigma_hat;  // per meter jamming variance estimate
};

// Constrained MLE of a single meter's bias and jamming variance given its
// hypothesis label.
std::pair<double, double> meter_mle(const MeterStatistics& s, Hypothesis label, std::size_t lambda, double sigma_w2,
                                    double gamma, double sigma2_min);
AttackEstimate mle_attack_params(const ResidualBlock& rb, const MeterClassification& cls, const DetectorConfig& cfg,
                                 double sigma_w2);

// GLLR. `pre_sumsq` is sum_{k,i} (y - h_k^T x0)^2 against the pre-attack
// filter's current update.
double gllr(double pre_sumsq, std::span<const HypothesisCosts> costs, const MeterClassification& cls,
            const GridModel& model);

struct CusumState {
  double g = 0.0;
  std::int64_t tau_hat = 1;
  bool stopped = false;
  std::int64_t stop_time = -1;
};

struct CusumStep {
  CusumState state;
  bool sync_required = false;
};

CusumStep cusum_step(const CusumState& cs, double beta, double h, std::int64_t t);

struct Algorithm1State {
  DualFilterBank bank;
  CusumState cusum;
};

Algorithm1State make_algorithm1_state(const Eigen::VectorXd& x0, double p0_scale);

struct Algorithm1Output {
  std::vector<HypothesisCosts> costs;
  MeterClassification classification;
  AttackEstimate estimate;
  double beta = 0.0;
  bool synced = false;
  Eigen::VectorXd post_prediction;  // x^1_{t|t-1} used for the residual block
};

// One pass of the real-time detection and estimation loop:
// predict both filters, classify meters on residuals against the post
// filter's prediction, estimate attack magnitudes, update both filters, form
// the GLLR on the pre filter's update, advance the CUSUM and resynchronize the
// post filter when the statistic hits zero. Mutates `state` in place.
Algorithm1Output algorithm1_step(Algorithm1State& state, const GridModel& model, const DetectorConfig& cfg,
                                 const MeasurementBatch& y, std::int64_t t);

}  // namespace gridwatch
