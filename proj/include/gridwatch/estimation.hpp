#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "gridwatch/grid_model.hpp"

namespace gridwatch {

struct KalmanState {
  Eigen::VectorXd x_pred;  // x_{t|t-1}
  Eigen::MatrixXd P_pred;
  Eigen::VectorXd x_upd;  // x_{t|t}
  Eigen::MatrixXd P_upd;

  bool operator==(const KalmanState&) const = default;
};

// x_{0|0} = x0, P_{0|0} = p0_scale * I. The prediction fields start equal to
// the update fields.
KalmanState initial_kalman_state(const Eigen::VectorXd& x0, double p0_scale);

KalmanState kf_predict(const GridModel& model, const KalmanState& ks);

// Measurement update assuming y = H x + w (no attack).
KalmanState kf_update_pre(const GridModel& model, const KalmanState& ks, const MeasurementBatch& y);

// Measurement update for the attacked model: each meter's bias estimate
// a_hat[k] is removed from all of its lambda samples and its jamming variance
// estimate sigma_hat[k] is added to sigma_w^2 on those samples.
KalmanState kf_update_post(const GridModel& model, const KalmanState& ks, const MeasurementBatch& y,
                           std::span<const double> a_hat, std::span<const double> sigma_hat);

// Factorization of the innovation covariance S = H P H^T + R for a diagonal,
// meter-blocked R (one variance per meter, shared by its lambda samples).
// Everything is carried in the N-dimensional state space through
// S^{-1} = R^{-1} - R^{-1} H L B^{-1} L^T H^T R^{-1},  B = I + L^T H^T R^{-1} H L,
// where P = L L^T; B is symmetric positive definite for any PSD P.
class InnovationFactor {
 public:
  InnovationFactor(const GridModel& model, const Eigen::MatrixXd& P_pred, std::span<const double> meter_noise);

  // Innovation nu = y - (H x + offset), summarized per meter.
  struct Innovation {
    Eigen::VectorXd per_meter_sum;     // sum_i nu_{k,i}
    Eigen::VectorXd per_meter_sumsq;   // sum_i nu_{k,i}^2
  };
  Innovation innovation(const MeasurementBatch& y, const Eigen::VectorXd& x,
                        std::span<const double> meter_offset = {}) const;

  // Gain applied to an innovation: P H^T S^{-1} nu.
  Eigen::VectorXd gain_times(const Innovation& nu) const;
  // nu^T S^{-1} nu.
  double mahalanobis(const Innovation& nu) const;
  // Joseph-form updated covariance (I - G H) P (I - G H)^T + G R G^T.
  Eigen::MatrixXd joseph_covariance() const;

 private:
  Eigen::VectorXd back_project(const Innovation& nu) const;  // H^T R^{-1} nu

  const GridModel* model_;
  const Eigen::MatrixXd* P_;
  Eigen::VectorXd inv_noise_;  // 1 / r_k
  Eigen::MatrixXd sqrt_P_;     // L
  Eigen::MatrixXd info_;       // M = H^T R^{-1} H
  Eigen::LLT<Eigen::MatrixXd> core_;  // B
};

struct DualFilterBank {
  KalmanState pre;
  KalmanState post;
  std::int64_t tau_hat = 1;
};

DualFilterBank make_filter_bank(const Eigen::VectorXd& x0, double p0_scale);

// post := pre, tau_hat := t. Called on the steps where the CUSUM statistic is
// clamped to zero.
DualFilterBank sync_post_to_pre(DualFilterBank bank, std::int64_t t);

// Smallest eigenvalue of the symmetric part, for PSD audits.
double min_eigenvalue(const Eigen::MatrixXd& P);

}  // namespace gridwatch
