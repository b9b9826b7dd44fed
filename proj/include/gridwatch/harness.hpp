#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/attack.hpp"
#include "gridwatch/config.hpp"
#include "gridwatch/detect_robust.hpp"
#include "gridwatch/grid_model.hpp"

namespace gridwatch {

// Stopping rules tracked per trial. algorithm2 is derived: min of the three
// sub-detectors, pairing each algorithm1 level with the first shewhart and
// chi2 levels.
enum class DetectorId : std::uint8_t { algorithm1, shewhart, chi2, algorithm2, euclidean, cosine, np_cusum };
inline constexpr std::size_t kDetectorCount = 7;
inline constexpr std::array<DetectorId, kDetectorCount> kAllDetectors = {
    DetectorId::algorithm1, DetectorId::shewhart, DetectorId::chi2,   DetectorId::algorithm2,
    DetectorId::euclidean,  DetectorId::cosine,   DetectorId::np_cusum};

std::string detector_name(DetectorId d);
DetectorId parse_detector(std::string_view name);
inline std::size_t index_of(DetectorId d) { return static_cast<std::size_t>(d); }

// Threshold levels per detector. An empty list disables the detector. Levels
// for cosine are "fire when similarity <= level"; all others fire on >=.
struct ThresholdPlan {
  std::array<std::vector<double>, kDetectorCount> levels;

  const std::vector<double>& of(DetectorId d) const { return levels[index_of(d)]; }
  std::vector<double>& of(DetectorId d) { return levels[index_of(d)]; }
  bool enabled(DetectorId d) const { return !of(d).empty(); }
};

// Everything a trial needs, resolved once from an ExperimentConfig.
struct Experiment {
  ExperimentConfig cfg;
  GridModel model;                   // the detectors' model
  std::optional<GridModel> faulted;  // simulator model from tau on (topology faults)
  Eigen::VectorXd x0;
  double p0_scale = 0.0;
  AttackSpec attack;
  Chi2Config chi2;
  NpCusumConfig np;
  ThresholdPlan plan;
};

// Loads the topology, resolves meter ids and derives the chi-squared bins,
// the nonparametric CUSUM baseline and the default threshold plan.
Experiment prepare_experiment(const ExperimentConfig& cfg);
Experiment prepare_experiment(const ExperimentConfig& cfg, const GridTopology& topology);

struct StepRecord {
  std::int64_t t = 0;
  double g = 0.0;
  double beta = 0.0;
  double chi = 0.0;
  double c = 0.0;
  double euclidean = 0.0;
  double cosine = 0.0;
  double np_cusum = 0.0;
  double mse0 = 0.0;  // ||x0_{t|t} - x_t||^2 / N
  double mse1 = 0.0;  // ||x1_{t|t} - x_t||^2 / N
};

struct TrialOptions {
  bool attack_enabled = true;
  bool log_steps = false;
  bool stop_early = true;  // end once every enabled detector crossed its largest level
};

struct TrialResult {
  std::size_t trial = 0;
  // stops[d][j]: first t at which detector d crossed plan level j; kNever if never.
  std::array<std::vector<std::int64_t>, kDetectorCount> stops;
  FiringSet fired;                 // sub-detectors firing at the level-0 algorithm2 stop
  std::int64_t tau_hat = kNever;   // change-point estimate when algorithm1 crossed level 0
  std::int64_t steps = 0;          // simulated steps
  std::uint64_t measurement_hash = 0;  // FNV-1a over every batch the detectors consumed
  std::vector<StepRecord> log;

  std::int64_t stop(DetectorId d, std::size_t level = 0) const;
};

// One simulated trajectory fed identically to every enabled detector.
// Deterministic given (experiment, trial index).
TrialResult run_trial(const Experiment& exp, std::size_t trial, const TrialOptions& opts = {});

// Trials [0, count) across worker threads; results are ordered by trial index.
std::vector<TrialResult> run_trials(const Experiment& exp, std::size_t count, const TrialOptions& opts = {},
                                    std::size_t threads = 0);

// ---- metrics ----

struct MeanCi {
  double mean = 0.0;
  double ci = 0.0;  // 95% half-width from the sample standard deviation
  std::size_t n = 0;
};
MeanCi mean_ci(std::span<const double> xs);

struct DelayEstimate {
  MeanCi delay;  // mean of T - tau over detected runs; n == 0 when undefined
  std::size_t trials = 0;
  std::size_t false_alarms = 0;  // T < tau
  std::size_t misses = 0;        // T never, or T - tau > horizon
};
DelayEstimate estimate_delay(std::span<const std::int64_t> stops, std::int64_t tau, std::int64_t horizon);

struct FalseAlarmEstimate {
  MeanCi period;  // censored runs contribute the horizon (a lower bound)
  std::size_t runs = 0;
  std::size_t censored = 0;
};
FalseAlarmEstimate estimate_false_alarm_period(std::span<const std::int64_t> stops, std::int64_t horizon);

// Fraction of runs with not (tau <= T < tau + eta).
double missed_detection_ratio(std::span<const std::int64_t> stops, std::int64_t tau, std::int64_t eta);

// Per detector, fraction of runs on which it achieved the minimum stopping
// time. Ties credit every tied detector; runs where nothing stopped credit none.
std::vector<double> first_detector_ratio(std::span<const std::vector<std::int64_t>> per_run_stops);

struct MseCurve {
  std::vector<std::int64_t> t;
  std::vector<double> mse0;
  std::vector<double> mse1;
};
// Averages the logged MSE over trials at each time index present in every log.
MseCurve mse_curves(std::span<const TrialResult> results);

struct CurvePoint {
  double threshold = 0.0;
  FalseAlarmEstimate fap;
  DelayEstimate delay;
  double miss_ratio = 0.0;
};

// Stopping times of detector `d` at plan level `level`, one per result.
std::vector<std::int64_t> stops_of(std::span<const TrialResult> results, DetectorId d, std::size_t level = 0);

// Tradeoff curve of detector `d` over `levels`: false-alarm period from
// no-attack runs, delay and miss ratio from attacked runs. Algorithm 2 varies
// h with phi and the chi-squared threshold held fixed.
std::vector<CurvePoint> sweep_tradeoff(const Experiment& exp, DetectorId d, const std::vector<double>& levels);

}  // namespace gridwatch
