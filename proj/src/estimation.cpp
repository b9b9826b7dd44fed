#include "gridwatch/estimation.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "gridwatch/errors.hpp"
#include "gridwatch/kernels.hpp"

namespace gridwatch {
namespace {

void symmetrize(Eigen::MatrixXd& P) { P = 0.5 * (P + P.transpose()).eval(); }

Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& P) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semidefinite (or numerically indefinite) covariance: use the eigen
  // square root with negative eigenvalues clamped to zero.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
  if (eig.info() != Eigen::Success) throw NumericError("covariance eigen-decomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

KalmanState update_blocked(const GridModel& model, const KalmanState& ks, const MeasurementBatch& y,
                           std::span<const double> a_hat, std::span<const double> meter_noise) {
  if (static_cast<std::size_t>(y.y.size()) != model.measurement_dim())
    throw ContractError("measurement batch does not match the model");
  InnovationFactor factor(model, ks.P_pred, meter_noise);
  const auto nu = factor.innovation(y, ks.x_pred, a_hat);
  KalmanState out = ks;
  out.x_upd = ks.x_pred + factor.gain_times(nu);
  out.P_upd = factor.joseph_covariance();
  return out;
}

}  // namespace

KalmanState initial_kalman_state(const Eigen::VectorXd& x0, double p0_scale) {
  const auto n = x0.size();
  KalmanState ks;
  ks.x_upd = x0;
  ks.x_pred = x0;
  ks.P_upd = p0_scale * Eigen::MatrixXd::Identity(n, n);
  ks.P_pred = ks.P_upd;
  return ks;
}

KalmanState kf_predict(const GridModel& model, const KalmanState& ks) {
  KalmanState out = ks;
  if (model.identity_dynamics) {
    out.x_pred = ks.x_upd;
    out.P_pred = ks.P_upd;
  } else {
    out.x_pred = model.A * ks.x_upd;
    out.P_pred = model.A * ks.P_upd * model.A.transpose();
  }
  out.P_pred.diagonal().array() += model.sigma_v2;
  symmetrize(out.P_pred);
  return out;
}

KalmanState kf_update_pre(const GridModel& model, const KalmanState& ks, const MeasurementBatch& y) {
  const std::vector<double> zeros(model.meter_count(), 0.0);
  const std::vector<double> noise(model.meter_count(), model.sigma_w2);
  return update_blocked(model, ks, y, zeros, noise);
}

KalmanState kf_update_post(const GridModel& model, const KalmanState& ks, const MeasurementBatch& y,
                           std::span<const double> a_hat, std::span<const double> sigma_hat) {
  const std::size_t k_count = model.meter_count();
  if (a_hat.size() != k_count || sigma_hat.size() != k_count)
    throw ContractError("attack estimates must have one entry per meter");
  std::vector<double> noise(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (sigma_hat[k] < 0.0) throw ContractError("jamming variance estimate must be nonnegative");
    noise[k] = model.sigma_w2 + sigma_hat[k];
  }
  return update_blocked(model, ks, y, a_hat, noise);
}

InnovationFactor::InnovationFactor(const GridModel& model, const Eigen::MatrixXd& P_pred,
                                   std::span<const double> meter_noise)
    : model_(&model), P_(&P_pred) {
  const std::size_t k_count = model.meter_count();
  const std::size_t n = model.state_dim();
  if (meter_noise.size() != k_count) throw ContractError("need one noise variance per meter");
  inv_noise_.resize(static_cast<Eigen::Index>(k_count));
  std::vector<double> weights(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!(meter_noise[k] > 0.0)) throw NumericError("meter noise variance must be positive");
    inv_noise_[static_cast<Eigen::Index>(k)] = 1.0 / meter_noise[k];
    weights[k] = static_cast<double>(model.lambda) / meter_noise[k];
  }
  info_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  kernels::active().weighted_gram(std::span<const double>(model.meter_rows.data(), k_count * n), weights, n,
                                  std::span<double>(info_.data(), n * n));
  info_ = (0.5 * (info_ + info_.transpose())).eval();

  sqrt_P_ = psd_square_root(P_pred);
  Eigen::MatrixXd core = sqrt_P_.transpose() * info_ * sqrt_P_;
  core.diagonal().array() += 1.0;
  core_.compute(core);
  if (core_.info() != Eigen::Success || !core.allFinite()) {
    std::ostringstream msg;
    const Eigen::VectorXd ev = core.allFinite() ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(core).eigenvalues()
                                                : Eigen::VectorXd::Constant(1, std::nan(""));
    msg << "innovation covariance solve failed (reduced system eigenvalue range [" << ev.minCoeff() << ", "
        << ev.maxCoeff() << "])";
    throw NumericError(msg.str());
  }
}

InnovationFactor::Innovation InnovationFactor::innovation(const MeasurementBatch& y, const Eigen::VectorXd& x,
                                                          std::span<const double> meter_offset) const {
  const std::size_t k_count = model_->meter_count();
  Eigen::VectorXd pred = model_->predict_meters(x);
  if (!meter_offset.empty())
    for (std::size_t k = 0; k < k_count; ++k) pred[static_cast<Eigen::Index>(k)] += meter_offset[k];
  Innovation nu;
  nu.per_meter_sum.resize(static_cast<Eigen::Index>(k_count));
  nu.per_meter_sumsq.resize(static_cast<Eigen::Index>(k_count));
  std::vector<double> scratch(3 * k_count);
  const std::span<double> s(scratch);
  kernels::ResidualSums sums{{nu.per_meter_sum.data(), k_count},
                             {nu.per_meter_sumsq.data(), k_count},
                             s.subspan(0, k_count),
                             s.subspan(k_count, k_count),
                             s.subspan(2 * k_count, k_count)};
  kernels::active().residual_stats(std::span<const double>(y.y.data(), static_cast<std::size_t>(y.y.size())),
                                   std::span<const double>(pred.data(), k_count), model_->lambda, 0.0, sums);
  return nu;
}

Eigen::VectorXd InnovationFactor::back_project(const Innovation& nu) const {
  return model_->meter_rows.transpose() * nu.per_meter_sum.cwiseProduct(inv_noise_);
}

Eigen::VectorXd InnovationFactor::gain_times(const Innovation& nu) const {
  const Eigen::VectorXd z = sqrt_P_.transpose() * back_project(nu);
  return sqrt_P_ * core_.solve(z);
}

double InnovationFactor::mahalanobis(const Innovation& nu) const {
  const Eigen::VectorXd z = sqrt_P_.transpose() * back_project(nu);
  const double whitened = nu.per_meter_sumsq.dot(inv_noise_);
  return whitened - z.dot(core_.solve(z));
}

Eigen::MatrixXd InnovationFactor::joseph_covariance() const {
  const auto n = sqrt_P_.rows();
  // C = L B^{-1} L^T, G H = C M, G R G^T = C M C.
  const Eigen::MatrixXd c = sqrt_P_ * core_.solve(sqrt_P_.transpose());
  const Eigen::MatrixXd cm = c * info_;
  const Eigen::MatrixXd i_minus_gh = Eigen::MatrixXd::Identity(n, n) - cm;
  Eigen::MatrixXd P = i_minus_gh * (*P_) * i_minus_gh.transpose() + cm * c;
  symmetrize(P);
  return P;
}

DualFilterBank make_filter_bank(const Eigen::VectorXd& x0, double p0_scale) {
  DualFilterBank bank;
  bank.pre = initial_kalman_state(x0, p0_scale);
  bank.post = bank.pre;
  bank.tau_hat = 1;
  return bank;
}

DualFilterBank sync_post_to_pre(DualFilterBank bank, std::int64_t t) {
  bank.post = bank.pre;
  bank.tau_hat = t;
  return bank;
}

double min_eigenvalue(const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd sym = 0.5 * (P + P.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace gridwatch
