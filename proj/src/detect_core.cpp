#include "gridwatch/detect_core.hpp"

#include <cmath>
#include <limits>

#include "gridwatch/errors.hpp"
#include "gridwatch/kernels.hpp"

namespace gridwatch {

void DetectorConfig::validate() const {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  if (!(sigma2_min > 0.0)) throw ValidationError("sigma2_min must be positive");
  if (!(h > 0.0)) throw ValidationError("CUSUM threshold h must be positive");
}

ResidualBlock residual_block(const GridModel& model, const MeasurementBatch& y, const Eigen::VectorXd& x,
                             double gamma) {
  const std::size_t k_count = model.meter_count();
  const std::size_t lam = model.lambda;
  if (static_cast<std::size_t>(y.y.size()) != k_count * lam) throw ContractError("measurement batch does not match the model");
  const Eigen::VectorXd pred = model.predict_meters(x);

  ResidualBlock rb;
  rb.lambda = lam;
  rb.gamma = gamma;
  rb.e.resize(static_cast<Eigen::Index>(k_count), static_cast<Eigen::Index>(lam));
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t i = 0; i < lam; ++i)
      rb.e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = y.at(k, i) - pred[static_cast<Eigen::Index>(k)];

  std::vector<double> buf(5 * k_count);
  const std::span<double> s(buf);
  const kernels::ResidualSums out{s.subspan(0, k_count), s.subspan(k_count, k_count), s.subspan(2 * k_count, k_count),
                                  s.subspan(3 * k_count, k_count), s.subspan(4 * k_count, k_count)};
  kernels::active().residual_stats(std::span<const double>(y.y.data(), k_count * lam),
                                   std::span<const double>(pred.data(), k_count), lam, gamma, out);
  rb.meters.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k)
    rb.meters[k] = {out.delta[k], out.zeta[k], out.varrho[k], out.varpi[k], out.centered[k]};
  return rb;
}

ResidualBlock residual_block_from_samples(const Eigen::MatrixXd& e, double gamma) {
  const auto k_count = static_cast<std::size_t>(e.rows());
  const auto lam = static_cast<std::size_t>(e.cols());
  // Meter-major flat copy against a zero prediction.
  std::vector<double> flat(k_count * lam);
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t i = 0; i < lam; ++i) flat[k * lam + i] = e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  const std::vector<double> zero(k_count, 0.0);
  std::vector<double> buf(5 * k_count);
  const std::span<double> s(buf);
  const kernels::ResidualSums out{s.subspan(0, k_count), s.subspan(k_count, k_count), s.subspan(2 * k_count, k_count),
                                  s.subspan(3 * k_count, k_count), s.subspan(4 * k_count, k_count)};
  kernels::active().residual_stats(flat, zero, lam, gamma, out);
  ResidualBlock rb;
  rb.lambda = lam;
  rb.gamma = gamma;
  rb.e = e;
  rb.meters.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k)
    rb.meters[k] = {out.delta[k], out.zeta[k], out.varrho[k], out.varpi[k], out.centered[k]};
  return rb;
}

double HypothesisCosts::of(Hypothesis h) const {
  switch (h) {
    case Hypothesis::none: return u0;
    case Hypothesis::fdi: return uf;
    case Hypothesis::jamming: return uj;
    case Hypothesis::hybrid: return ufj;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

// Residual sum of squares at the constrained bias MLE: the bias is the block
// mean when it clears gamma, otherwise it sits on the nearer boundary
// (+gamma for a mean in [0, gamma), -gamma for a mean in (-gamma, 0)).
double constrained_bias_rss(const MeterStatistics& s, double mean, double gamma) {
  if (std::abs(mean) >= gamma) return s.centered;
  if (mean >= 0.0) return s.varpi;
  return s.varrho;
}

// min over total variance v >= floor of lambda*log(v) + rss/v.
double profiled_variance_cost(double rss, double lam, double floor) {
  const double v = rss / lam;
  if (v >= floor) return lam * std::log(v) + lam;
  return lam * std::log(floor) + rss / floor;
}

}  // namespace

HypothesisCosts meter_costs(const MeterStatistics& s, std::size_t lambda, double sigma_w2, double gamma,
                            double sigma2_min) {
  const double lam = static_cast<double>(lambda);
  const double mean = s.delta / lam;
  const double log_w = lam * std::log(sigma_w2);
  const double jam_floor = sigma_w2 + sigma2_min;
  const double biased_rss = constrained_bias_rss(s, mean, gamma);

  HypothesisCosts c;
  c.u0 = log_w + s.zeta / sigma_w2;
  c.uf = log_w + biased_rss / sigma_w2;
  c.uj = profiled_variance_cost(s.zeta, lam, jam_floor);
  c.ufj = profiled_variance_cost(biased_rss, lam, jam_floor);
  return c;
}

std::vector<HypothesisCosts> hypothesis_costs(const ResidualBlock& rb, double sigma_w2, const DetectorConfig& cfg) {
  std::vector<HypothesisCosts> out;
  out.reserve(rb.meters.size());
  for (const auto& m : rb.meters) out.push_back(meter_costs(m, rb.lambda, sigma_w2, cfg.gamma, cfg.sigma2_min));
  return out;
}

Hypothesis classify(const HypothesisCosts& c) {
  if (c.u0 <= c.uf && c.u0 <= c.uj && c.u0 <= c.ufj) return Hypothesis::none;
  if (c.uf < c.u0 && c.uf <= c.uj && c.uf <= c.ufj) return Hypothesis::fdi;
  if (c.uj < c.u0 && c.uj < c.uf && c.uj <= c.ufj) return Hypothesis::jamming;
  if (c.ufj < c.u0 && c.ufj < c.uf && c.ufj < c.uj) return Hypothesis::hybrid;
  throw ContractError("hypothesis costs are not comparable (non-finite cost)");
}

std::vector<std::size_t> MeterClassification::members(Hypothesis h) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < label.size(); ++k)
    if (label[k] == h) out.push_back(k);
  return out;
}

MeterClassification classify_meters(std::span<const HypothesisCosts> costs) {
  MeterClassification cls;
  cls.label.reserve(costs.size());
  for (const auto& c : costs) cls.label.push_back(classify(c));
  return cls;
}

std::pair<double, double> meter_mle(const MeterStatistics& s, Hypothesis label, std::size_t lambda, double sigma_w2,
                                    double gamma, double sigma2_min) {
  const double lam = static_cast<double>(lambda);
  const double mean = s.delta / lam;
  const double jam_floor = sigma_w2 + sigma2_min;
  double a = 0.0;
  double var = 0.0;
  if (label == Hypothesis::fdi || label == Hypothesis::hybrid) {
    if (std::abs(mean) >= gamma) a = mean;
    else a = mean >= 0.0 ? gamma : -gamma;
  }
  if (label == Hypothesis::jamming) {
    const double v = s.zeta / lam;
    var = v >= jam_floor ? v - sigma_w2 : sigma2_min;
  } else if (label == Hypothesis::hybrid) {
    const double v = constrained_bias_rss(s, mean, gamma) / lam;
    var = v >= jam_floor ? v - sigma_w2 : sigma2_min;
  }
  return {a, var};
}

AttackEstimate mle_attack_params(const ResidualBlock& rb, const MeterClassification& cls, const DetectorConfig& cfg,
                                 double sigma_w2) {
  if (cls.size() != rb.meters.size()) throw ContractError("classification does not match the residual block");
  AttackEstimate est;
  est.a_hat.resize(cls.size());
  est.sigma_hat.resize(cls.size());
  for (std::size_t k = 0; k < cls.size(); ++k) {
    const auto [a, v] = meter_mle(rb.meters[k], cls.label[k], rb.lambda, sigma_w2, cfg.gamma, cfg.sigma2_min);
    est.a_hat[k] = a;
    est.sigma_hat[k] = v;
  }
  return est;
}

double gllr(double pre_sumsq, std::span<const HypothesisCosts> costs, const MeterClassification& cls,
            const GridModel& model) {
  if (costs.size() != cls.size()) throw ContractError("classification does not match the costs");
  const double kl = static_cast<double>(model.measurement_dim());
  double chosen = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) chosen += costs[k].of(cls.label[k]);
  return 0.5 * kl * std::log(model.sigma_w2) + pre_sumsq / (2.0 * model.sigma_w2) - 0.5 * chosen;
}

CusumStep cusum_step(const CusumState& cs, double beta, double h, std::int64_t t) {
  if (cs.stopped) throw ContractError("CUSUM stepped after it stopped");
  CusumStep out;
  out.state = cs;
  out.state.g = std::max(0.0, cs.g + beta);
  if (out.state.g == 0.0) {
    out.sync_required = true;
    out.state.tau_hat = t;
  }
  if (out.state.g >= h) {
    out.state.stopped = true;
    out.state.stop_time = t;
  }
  return out;
}

Algorithm1State make_algorithm1_state(const Eigen::VectorXd& x0, double p0_scale) {
  return {make_filter_bank(x0, p0_scale), CusumState{}};
}

Algorithm1Output algorithm1_step(Algorithm1State& state, const GridModel& model, const DetectorConfig& cfg,
                                 const MeasurementBatch& y, std::int64_t t) {
  auto& bank = state.bank;
  bank.pre = kf_predict(model, bank.pre);
  bank.post = kf_predict(model, bank.post);

  Algorithm1Output out;
  out.post_prediction = bank.post.x_pred;
  const ResidualBlock rb = residual_block(model, y, bank.post.x_pred, cfg.gamma);
  out.costs = hypothesis_costs(rb, model.sigma_w2, cfg);
  out.classification = classify_meters(out.costs);
  out.estimate = mle_attack_params(rb, out.classification, cfg, model.sigma_w2);

  bank.pre = kf_update_pre(model, bank.pre, y);
  bank.post = kf_update_post(model, bank.post, y, out.estimate.a_hat, out.estimate.sigma_hat);

  const ResidualBlock pre_rb = residual_block(model, y, bank.pre.x_upd, cfg.gamma);
  double pre_sumsq = 0.0;
  for (const auto& m : pre_rb.meters) pre_sumsq += m.zeta;
  out.beta = gllr(pre_sumsq, out.costs, out.classification, model);

  const CusumStep step = cusum_step(state.cusum, out.beta, cfg.h, t);
  state.cusum = step.state;
  if (step.sync_required) {
    bank = sync_post_to_pre(std::move(bank), t);
    out.synced = true;
  }
  return out;
}

}  // namespace gridwatch
