#pragma once

// Textbook Kalman update with the full (K*lambda)-dimensional innovation
// covariance, used to check the library's structured update.

#include <Eigen/Dense>

namespace oracle {

struct DenseUpdate {
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
  double mahalanobis = 0.0;  // nu^T S^{-1} nu
};

// r: per-sample noise variance (length K*lambda); offset: per-sample mean shift.
inline DenseUpdate dense_update(const Eigen::MatrixXd& H, const Eigen::VectorXd& x_pred, const Eigen::MatrixXd& P_pred,
                                const Eigen::VectorXd& y, const Eigen::VectorXd& r, const Eigen::VectorXd& offset) {
  const Eigen::MatrixXd R = r.asDiagonal();
  const Eigen::MatrixXd S = H * P_pred * H.transpose() + R;
  const Eigen::MatrixXd S_inv = S.inverse();
  const Eigen::MatrixXd G = P_pred * H.transpose() * S_inv;
  const Eigen::VectorXd nu = y - H * x_pred - offset;
  const auto n = x_pred.size();
  const Eigen::MatrixXd I_GH = Eigen::MatrixXd::Identity(n, n) - G * H;
  DenseUpdate out;
  out.x = x_pred + G * nu;
  out.P = I_GH * P_pred * I_GH.transpose() + G * R * G.transpose();
  out.mahalanobis = nu.dot(S_inv * nu);
  return out;
}

}  // namespace oracle
