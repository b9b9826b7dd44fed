#include "gridwatch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "gridwatch/detect_core.hpp"
#include "gridwatch/errors.hpp"
#include "gridwatch/estimation.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::vector<std::size_t> resolve_meters(const GridTopology& topo, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  for (const auto& id : ids) {
    const auto k = topo.find_meter(id);
    if (!k) throw ValidationError("attack references unknown meter '" + id + "'");
    out.push_back(*k);
  }
  return out;
}

Chi2Config chi2_config(const Chi2Settings& s, double dof) {
  if (s.edges.empty()) return Chi2Config::equiprobable(dof, s.bins, s.window, s.threshold);
  Chi2Config cfg;
  cfg.window = s.window;
  cfg.threshold = s.threshold;
  cfg.edges.push_back(0.0);
  cfg.edges.insert(cfg.edges.end(), s.edges.begin(), s.edges.end());
  cfg.edges.push_back(std::numeric_limits<double>::infinity());
  const boost::math::chi_squared dist(dof);
  for (std::size_t j = 0; j + 1 < cfg.edges.size(); ++j) {
    const double lo = boost::math::cdf(dist, cfg.edges[j]);
    const double hi = std::isinf(cfg.edges[j + 1]) ? 1.0 : boost::math::cdf(dist, cfg.edges[j + 1]);
    cfg.probabilities.push_back(hi - lo);
  }
  cfg.validate();
  return cfg;
}

std::vector<double> finite_level(double v) {
  if (std::isinf(v)) return {};
  return {v};
}

// Tracks the first crossing time of each level of one detector.
struct LevelTracker {
  const std::vector<double>* levels = nullptr;
  std::vector<std::int64_t>* stops = nullptr;
  bool below = false;  // fire on value <= level
  std::size_t pending = 0;

  void init(const std::vector<double>& lv, std::vector<std::int64_t>& st, bool fire_below) {
    levels = &lv;
    stops = &st;
    below = fire_below;
    st.assign(lv.size(), kNever);
    pending = lv.size();
  }
  void observe(double value, std::int64_t t) {
    if (pending == 0) return;
    for (std::size_t j = 0; j < levels->size(); ++j) {
      if ((*stops)[j] != kNever) continue;
      const bool hit = below ? value <= (*levels)[j] : value >= (*levels)[j];
      if (hit) {
        (*stops)[j] = t;
        --pending;
      }
    }
  }
};

double squared_error(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  return (est - truth).squaredNorm() / static_cast<double>(truth.size());
}

}  // namespace

std::string detector_name(DetectorId d) {
  switch (d) {
    case DetectorId::algorithm1: return "algorithm1";
    case DetectorId::shewhart: return "shewhart";
    case DetectorId::chi2: return "chi2";
    case DetectorId::algorithm2: return "algorithm2";
    case DetectorId::euclidean: return "euclidean";
    case DetectorId::cosine: return "cosine";
    case DetectorId::np_cusum: return "np_cusum";
  }
  return "?";
}

DetectorId parse_detector(std::string_view name) {
  for (auto d : kAllDetectors)
    if (detector_name(d) == name) return d;
  throw ValidationError("unknown detector '" + std::string(name) + "'");
}

Experiment prepare_experiment(const ExperimentConfig& cfg) {
  if (cfg.model.topology.empty()) throw ValidationError("[model] topology is required");
  return prepare_experiment(cfg, load_topology(cfg.model.topology));
}

Experiment prepare_experiment(const ExperimentConfig& cfg, const GridTopology& source) {
  cfg.validate();
  GridTopology topology = source;
  for (auto& br : topology.branches) br.susceptance *= cfg.model.susceptance_scale;
  Experiment exp;
  exp.cfg = cfg;
  exp.model = build_model(topology, cfg.model.lambda, cfg.model.sigma_v2, cfg.model.sigma_w2, cfg.model.a_matrix);
  exp.x0 = cfg.model.initial_state ? *cfg.model.initial_state : topology.base_angles();
  if (static_cast<std::size_t>(exp.x0.size()) != exp.model.state_dim())
    throw ValidationError("initial_state has " + std::to_string(exp.x0.size()) + " entries, state dimension is " +
                          std::to_string(exp.model.state_dim()));
  exp.p0_scale = cfg.model.initial_cov.value_or(cfg.model.sigma_v2);

  exp.attack = cfg.attack.spec;
  if (!cfg.attack.fdi_meters.empty())
    exp.attack.fdi_selection = MeterSelection::fixed_set(resolve_meters(topology, cfg.attack.fdi_meters));
  if (!cfg.attack.jam_meters.empty())
    exp.attack.jam_selection = MeterSelection::fixed_set(resolve_meters(topology, cfg.attack.jam_meters));
  exp.attack.fault_meters = resolve_meters(topology, cfg.attack.fault_meters);
  exp.attack.onset = exp.attack.kind == AttackKind::none ? kNever : cfg.tau;
  exp.attack.validate(exp.model.meter_count());
  if (exp.attack.kind == AttackKind::topology_fault) exp.faulted = topology_fault(exp.model, exp.attack.fault_meters);

  const double dof = static_cast<double>(exp.model.measurement_dim());
  exp.chi2 = chi2_config(cfg.chi2, dof);

  auto& plan = exp.plan;
  plan.of(DetectorId::algorithm1) = finite_level(cfg.detector.h);
  if (cfg.shewhart_enabled) plan.of(DetectorId::shewhart) = finite_level(cfg.shewhart.phi);
  if (cfg.chi2.enabled) plan.of(DetectorId::chi2) = finite_level(cfg.chi2.threshold);
  plan.of(DetectorId::euclidean) = finite_level(cfg.benchmarks.euclidean);
  plan.of(DetectorId::cosine) = finite_level(cfg.benchmarks.cosine);
  plan.of(DetectorId::np_cusum) = finite_level(cfg.benchmarks.np_cusum);

  exp.np.q = cfg.benchmarks.np_cusum;
  exp.np.clamp = cfg.benchmarks.np_clamp;
  if (plan.enabled(DetectorId::np_cusum)) {
    const auto seed = derive_seed(cfg.seed, 0, StreamId::monte_carlo);
    const auto n = cfg.benchmarks.baseline_samples;
    exp.np.baseline = cfg.benchmarks.baseline_cache.empty()
                          ? estimate_innovation_baseline(exp.model, exp.x0, exp.p0_scale, n, 100, seed)
                          : cached_innovation_baseline(cfg.benchmarks.baseline_cache, exp.model, exp.x0,
                                                       exp.p0_scale, n, seed);
  }
  return exp;
}

std::int64_t TrialResult::stop(DetectorId d, std::size_t level) const {
  const auto& s = stops[index_of(d)];
  return level < s.size() ? s[level] : kNever;
}

TrialResult run_trial(const Experiment& exp, std::size_t trial, const TrialOptions& opts) {
  const auto& cfg = exp.cfg;
  const auto& model = exp.model;
  const auto& plan = exp.plan;
  const std::uint64_t master = cfg.seed;
  RandomStream sim_rng(derive_seed(master, trial, StreamId::simulation));
  RandomStream attack_rng(derive_seed(master, trial, StreamId::attack));
  RandomStream jam_rng(derive_seed(master, trial, StreamId::jamming_noise));
  RandomStream window_rng(derive_seed(master, trial, StreamId::chi2_window));

  TrialResult res;
  res.trial = trial;
  res.measurement_hash = kFnvOffset;

  const bool want_chi2 = plan.enabled(DetectorId::chi2) || opts.log_steps;
  const bool want_np = plan.enabled(DetectorId::np_cusum);

  std::array<LevelTracker, kDetectorCount> trackers;
  for (auto d : kAllDetectors) {
    if (d == DetectorId::algorithm2) continue;
    trackers[index_of(d)].init(plan.of(d), res.stops[index_of(d)], d == DetectorId::cosine);
  }

  DetectorConfig det = cfg.detector;
  det.h = std::numeric_limits<double>::infinity();  // paths are threshold-free
  Algorithm1State alg1 = make_algorithm1_state(exp.x0, exp.p0_scale);
  std::optional<Chi2State> chi2;
  if (want_chi2) chi2 = make_chi2_state(exp.chi2, static_cast<double>(model.measurement_dim()), window_rng);
  NpCusumState np;
  SimState sim{0, exp.x0};

  // Filter-only warm-up; the detector clock restarts afterwards.
  for (std::size_t w = 0; w < cfg.model.warmup; ++w) {
    auto [next, y] = simulate_step(model, sim, sim_rng);
    sim = std::move(next);
    algorithm1_step(alg1, model, det, y, 1);
  }
  if (cfg.model.warmup > 0) {
    alg1.bank = sync_post_to_pre(std::move(alg1.bank), 1);
    alg1.cusum = CusumState{};
  }

  const bool attacked = opts.attack_enabled && exp.attack.kind != AttackKind::none;
  std::int64_t alg1_level0_tau = kNever;
  for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
    const GridModel& truth = attacked && exp.faulted && t >= cfg.tau ? *exp.faulted : model;
    auto [next, clean] = simulate_step(truth, sim, sim_rng);
    sim = std::move(next);
    MeasurementBatch y = std::move(clean);
    y.t = t;
    if (attacked) {
      const auto real = realize_attack(exp.attack, model.meter_count(), t, attack_rng);
      if (real.active) y = apply_attack(model, y, real, jam_rng);
    }
    res.measurement_hash = fnv_bytes(res.measurement_hash, y.y.data(), sizeof(double) * static_cast<std::size_t>(y.y.size()));
    ++res.steps;

    StepRecord rec;
    rec.t = t;
    const Eigen::VectorXd pre_prediction = model.A * alg1.bank.pre.x_upd;
    {
      // Every detector reads the pre filter, so the filter bank always advances.
      const auto out = algorithm1_step(alg1, model, det, y, t);
      rec.beta = out.beta;
      rec.g = alg1.cusum.g;
      trackers[index_of(DetectorId::algorithm1)].observe(rec.g, t);
      trackers[index_of(DetectorId::shewhart)].observe(rec.beta, t);
      if (alg1_level0_tau == kNever && res.stop(DetectorId::algorithm1) == t) alg1_level0_tau = alg1.cusum.tau_hat;
    }
    if (chi2) {
      rec.c = chi2_sample(model, alg1.bank.pre, y);
      rec.chi = pearson_step(*chi2, rec.c).chi;
      trackers[index_of(DetectorId::chi2)].observe(rec.chi, t);
    }
    if (plan.enabled(DetectorId::euclidean) || plan.enabled(DetectorId::cosine) || want_np || opts.log_steps) {
      Eigen::VectorXd y_pred = model.H * pre_prediction;
      rec.euclidean = (y.y - y_pred).norm();
      rec.cosine = cosine_similarity(y.y, y_pred);
      rec.np_cusum = np_cusum_step(np, rec.euclidean, exp.np).statistic;
      trackers[index_of(DetectorId::euclidean)].observe(rec.euclidean, t);
      trackers[index_of(DetectorId::cosine)].observe(rec.cosine, t);
      trackers[index_of(DetectorId::np_cusum)].observe(rec.np_cusum, t);
    }
    if (opts.log_steps) {
      rec.mse0 = squared_error(alg1.bank.pre.x_upd, sim.x);
      rec.mse1 = squared_error(alg1.bank.post.x_upd, sim.x);
      res.log.push_back(rec);
    }

    if (opts.stop_early && !opts.log_steps) {
      bool done = true;
      for (auto d : kAllDetectors)
        if (d != DetectorId::algorithm2 && trackers[index_of(d)].pending > 0) done = false;
      if (done) break;
    }
  }

  // Algorithm 2: min of its three sub-detectors at each algorithm1 level.
  auto& alg2 = res.stops[index_of(DetectorId::algorithm2)];
  const std::int64_t shew = res.stop(DetectorId::shewhart);
  const std::int64_t chi = res.stop(DetectorId::chi2);
  const auto& alg1_stops = res.stops[index_of(DetectorId::algorithm1)];
  alg2.clear();
  if (!alg1_stops.empty()) {
    for (auto s : alg1_stops) alg2.push_back(std::min({s, shew, chi}));
  } else if (plan.enabled(DetectorId::shewhart) || plan.enabled(DetectorId::chi2)) {
    alg2.push_back(std::min(shew, chi));
  }
  const std::int64_t t2 = res.stop(DetectorId::algorithm2);
  if (t2 != kNever) {
    res.fired.algorithm1 = res.stop(DetectorId::algorithm1) == t2;
    res.fired.shewhart = shew == t2;
    res.fired.chi2 = chi == t2;
  }
  res.tau_hat = alg1_level0_tau;
  return res;
}

std::vector<TrialResult> run_trials(const Experiment& exp, std::size_t count, const TrialOptions& opts,
                                    std::size_t threads) {
  std::vector<TrialResult> results(count);
  if (threads == 0) threads = exp.cfg.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        results[i] = run_trial(exp, i, opts);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

MeanCi mean_ci(std::span<const double> xs) {
  MeanCi r;
  r.n = xs.size();
  if (xs.empty()) {
    r.mean = r.ci = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n < 2) {
    r.ci = std::numeric_limits<double>::infinity();
    return r;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  const boost::math::students_t dist(static_cast<double>(r.n - 1));
  r.ci = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(r.n));
  return r;
}

DelayEstimate estimate_delay(std::span<const std::int64_t> stops, std::int64_t tau, std::int64_t horizon) {
  if (stops.empty()) throw ContractError("estimate_delay needs at least one run");
  DelayEstimate est;
  est.trials = stops.size();
  std::vector<double> delays;
  for (auto t : stops) {
    if (t == kNever || t - tau > horizon) {
      ++est.misses;
    } else if (t < tau) {
      ++est.false_alarms;
    } else {
      delays.push_back(static_cast<double>(t - tau));
    }
  }
  est.delay = mean_ci(delays);
  return est;
}

FalseAlarmEstimate estimate_false_alarm_period(std::span<const std::int64_t> stops, std::int64_t horizon) {
  FalseAlarmEstimate est;
  est.runs = stops.size();
  std::vector<double> periods;
  for (auto t : stops) {
    if (t == kNever || t > horizon) {
      ++est.censored;
      periods.push_back(static_cast<double>(horizon));
    } else {
      periods.push_back(static_cast<double>(t));
    }
  }
  est.period = mean_ci(periods);
  return est;
}

double missed_detection_ratio(std::span<const std::int64_t> stops, std::int64_t tau, std::int64_t eta) {
  if (stops.empty()) return 0.0;
  std::size_t missed = 0;
  for (auto t : stops)
    if (!(t >= tau && t != kNever && t - tau < eta)) ++missed;
  return static_cast<double>(missed) / static_cast<double>(stops.size());
}

std::vector<double> first_detector_ratio(std::span<const std::vector<std::int64_t>> per_run_stops) {
  if (per_run_stops.empty()) return {};
  const std::size_t d = per_run_stops.front().size();
  std::vector<double> wins(d, 0.0);
  for (const auto& run : per_run_stops) {
    if (run.size() != d) throw ContractError("every run must report the same detectors");
    const auto best = *std::min_element(run.begin(), run.end());
    if (best == kNever) continue;
    for (std::size_t j = 0; j < d; ++j)
      if (run[j] == best) wins[j] += 1.0;
  }
  for (auto& w : wins) w /= static_cast<double>(per_run_stops.size());
  return wins;
}

MseCurve mse_curves(std::span<const TrialResult> results) {
  MseCurve curve;
  if (results.empty()) return curve;
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& r : results) len = std::min(len, r.log.size());
  for (std::size_t i = 0; i < len; ++i) {
    double m0 = 0.0, m1 = 0.0;
    for (const auto& r : results) {
      m0 += r.log[i].mse0;
      m1 += r.log[i].mse1;
    }
    curve.t.push_back(results.front().log[i].t);
    curve.mse0.push_back(m0 / static_cast<double>(results.size()));
    curve.mse1.push_back(m1 / static_cast<double>(results.size()));
  }
  return curve;
}

std::vector<std::int64_t> stops_of(std::span<const TrialResult> results, DetectorId d, std::size_t level) {
  std::vector<std::int64_t> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.stop(d, level));
  return out;
}

std::vector<CurvePoint> sweep_tradeoff(const Experiment& base, DetectorId d, const std::vector<double>& levels) {
  if (levels.empty()) throw ContractError("sweep needs at least one threshold");
  Experiment exp = base;
  for (auto& lv : exp.plan.levels) lv.clear();
  if (d == DetectorId::algorithm2) {
    exp.plan.of(DetectorId::algorithm1) = levels;
    exp.plan.of(DetectorId::shewhart) = base.plan.of(DetectorId::shewhart);
    exp.plan.of(DetectorId::chi2) = base.plan.of(DetectorId::chi2);
  } else {
    exp.plan.of(d) = levels;
  }

  TrialOptions quiet;
  quiet.attack_enabled = false;
  const auto clean = run_trials(exp, exp.cfg.trials, quiet);
  const auto attacked = run_trials(exp, exp.cfg.trials, TrialOptions{});

  std::vector<CurvePoint> curve;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    CurvePoint p;
    p.threshold = levels[j];
    const auto fa = stops_of(clean, d, j);
    const auto at = stops_of(attacked, d, j);
    p.fap = estimate_false_alarm_period(fa, exp.cfg.horizon);
    p.delay = estimate_delay(at, exp.cfg.tau, exp.cfg.horizon);
    p.miss_ratio = missed_detection_ratio(at, exp.cfg.tau, exp.cfg.eta);
    curve.push_back(p);
  }
  return curve;
}

}  // namespace gridwatch
