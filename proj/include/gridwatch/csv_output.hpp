#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gridwatch/harness.hpp"

namespace gridwatch {

// Fixed column orders. Extra columns are appended after the documented ones.
// tradeoff.csv:       h,fap,fap_ci,delay,delay_ci,miss_ratio,fap_censored,false_alarms,misses,runs
// trial_log.csv:      t,g,beta,chi,mse0,mse1
// first_detector.csv: detector,ratio
// trials.csv:         trial,<detector stop per enabled detector>...,tau_hat,steps,measurement_hash
// Stopping times that never happened print as "inf".
void write_tradeoff_csv(std::ostream& out, std::span<const CurvePoint> curve);
void write_trial_log_csv(std::ostream& out, std::span<const StepRecord> log);
void write_mse_csv(std::ostream& out, const MseCurve& curve);
void write_first_detector_csv(std::ostream& out, std::span<const DetectorId> detectors, std::span<const double> ratios);
void write_trials_csv(std::ostream& out, std::span<const TrialResult> results, std::span<const DetectorId> detectors);

std::string format_stop(std::int64_t t);
std::string format_number(double v);

}  // namespace gridwatch
