#include "gridwatch/csv_output.hpp"

#include <cmath>
#include <cstdio>

namespace gridwatch {

std::string format_stop(std::int64_t t) { return t == kNever ? "inf" : std::to_string(t); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_tradeoff_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "h,fap,fap_ci,delay,delay_ci,miss_ratio,fap_censored,false_alarms,misses,runs\n";
  for (const auto& p : curve) {
    out << format_number(p.threshold) << ',' << format_number(p.fap.period.mean) << ','
        << format_number(p.fap.period.ci) << ',' << format_number(p.delay.delay.mean) << ','
        << format_number(p.delay.delay.ci) << ',' << format_number(p.miss_ratio) << ',' << p.fap.censored << ','
        << p.delay.false_alarms << ',' << p.delay.misses << ',' << p.delay.trials << '\n';
  }
}

void write_trial_log_csv(std::ostream& out, std::span<const StepRecord> log) {
  out << "t,g,beta,chi,mse0,mse1\n";
  for (const auto& r : log)
    out << r.t << ',' << format_number(r.g) << ',' << format_number(r.beta) << ',' << format_number(r.chi) << ','
        << format_number(r.mse0) << ',' << format_number(r.mse1) << '\n';
}

void write_mse_csv(std::ostream& out, const MseCurve& curve) {
  out << "t,mse0,mse1\n";
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    out << curve.t[i] << ',' << format_number(curve.mse0[i]) << ',' << format_number(curve.mse1[i]) << '\n';
}

void write_first_detector_csv(std::ostream& out, std::span<const DetectorId> detectors,
                              std::span<const double> ratios) {
  out << "detector,ratio\n";
  for (std::size_t i = 0; i < detectors.size() && i < ratios.size(); ++i)
    out << detector_name(detectors[i]) << ',' << format_number(ratios[i]) << '\n';
}

void write_trials_csv(std::ostream& out, std::span<const TrialResult> results, std::span<const DetectorId> detectors) {
  out << "trial";
  for (auto d : detectors) out << ',' << detector_name(d);
  out << ",tau_hat,steps,measurement_hash\n";
  for (const auto& r : results) {
    out << r.trial;
    for (auto d : detectors) out << ',' << format_stop(r.stop(d));
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.measurement_hash));
    out << ',' << format_stop(r.tau_hat) << ',' << r.steps << ',' << hash << '\n';
  }
}

}  // namespace gridwatch
