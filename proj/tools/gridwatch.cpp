#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridwatch/config.hpp"
#include "gridwatch/csv_output.hpp"
#include "gridwatch/errors.hpp"
#include "gridwatch/harness.hpp"
#include "gridwatch/kernels.hpp"
#include "gridwatch/stealth.hpp"

using namespace gridwatch;

namespace {

// "<mean list>/<covariance row-major list>", e.g. "0,0/1,0.5,0.5,1"; rows may
// also be separated by ';'.
GaussianPdf parse_gaussian(std::string text) {
  std::replace(text.begin(), text.end(), ';', ',');
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw ValidationError("gaussian must be '<mean>/<cov>': " + text);
  const auto mean = parse_number_list(text.substr(0, slash));
  const auto cov = parse_number_list(text.substr(slash + 1));
  const auto n = static_cast<Eigen::Index>(mean.size());
  if (n == 0 || cov.size() != mean.size() * mean.size())
    throw ValidationError("covariance must have dim^2 entries: " + text);
  Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
  Eigen::MatrixXd c = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cov.data(), n, n);
  return GaussianPdf(std::move(m), std::move(c));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  return out;
}

std::vector<DetectorId> enabled_detectors(const Experiment& exp) {
  std::vector<DetectorId> ds;
  for (auto d : kAllDetectors)
    if (!exp.plan.of(d).empty() || (d == DetectorId::algorithm2 && exp.plan.enabled(DetectorId::algorithm1)))
      ds.push_back(d);
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridwatch: attack detection experiments on DC power-grid models"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false, log_steps = false;
  std::size_t threads = 0;

  auto* simulate = app.add_subcommand("simulate", "run the configured trials and report stopping times");
  simulate->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", seed, "master seed override")->each([&](const std::string&) { seed_given = true; });
  simulate->add_flag("--log-steps", log_steps, "write per-step logs (trial_log.csv, mse.csv)");
  simulate->add_option("--out", out_dir, "output directory (created if missing)");
  simulate->add_option("--threads", threads, "worker threads (0: config/auto)");

  std::string thresholds, detector = "algorithm1";
  auto* sweep = app.add_subcommand("sweep", "threshold sweep; writes tradeoff.csv");
  sweep->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--thresholds", thresholds, "comma-separated thresholds (default: [detector] h_sweep)");
  sweep->add_option("--detector", detector, "algorithm1|shewhart|chi2|algorithm2|euclidean|cosine|np_cusum");
  sweep->add_option("--out", out_dir, "output directory (created if missing)");
  sweep->add_option("--threads", threads, "worker threads");

  std::string f0_text, f1_text, f1p_text;
  double h_prime = 0.0;
  std::size_t cycles = 1000;
  auto* audit = app.add_subcommand("stealth-audit", "on-off budget and persistent-stealth gap as CSV");
  audit->add_option("--f0", f0_text, "pre-attack gaussian '<mean>/<cov>'")->required();
  audit->add_option("--f1", f1_text, "attack gaussian '<mean>/<cov>'")->required();
  audit->add_option("--hprime", h_prime, "stealth threshold h'")->required();
  audit->add_option("--f1p", f1p_text, "candidate persistent attack gaussian");
  audit->add_option("--cycles", cycles, "cycles for the rho audit");

  auto* fa = app.add_subcommand("false-alarm", "average false alarm period of each configured detector");
  fa->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  fa->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*audit) {
      const auto f0 = parse_gaussian(f0_text);
      const auto f1 = parse_gaussian(f1_text);
      const auto b = onoff_budget(f0, f1, h_prime);
      const auto rho = rho_sequence(b.kl_10, b.kl_01, b.integer_on(), b.integer_off(), cycles);
      double rho_max = 0.0;
      for (double r : rho) rho_max = std::max(rho_max, r);
      std::cout << "h_prime,kl_10,kl_01,t_on_max,t_off_min,t_on,t_off,duty_bound,rho_max,gap\n";
      std::cout << format_number(b.h_prime) << ',' << format_number(b.kl_10) << ',' << format_number(b.kl_01) << ','
                << format_number(b.t_on_max) << ',' << format_number(b.t_off_min) << ',' << b.integer_on() << ','
                << b.integer_off() << ',' << format_number(b.duty_bound) << ',' << format_number(rho_max) << ','
                << (f1p_text.empty() ? std::string("nan")
                                     : format_number(persistent_stealth_gap(parse_gaussian(f1p_text), f0, f1)))
                << '\n';
      return 0;
    }

    ExperimentConfig cfg = load_experiment_config(config_path);
    if (seed_given) cfg.seed = seed;
    std::filesystem::create_directories(out_dir);
    std::cerr << "kernels: " << kernels::active().name << '\n';

    if (*simulate) {
      const Experiment exp = prepare_experiment(cfg);
      TrialOptions opts;
      opts.log_steps = log_steps;
      const auto results = run_trials(exp, cfg.trials, opts, threads);
      const auto ds = enabled_detectors(exp);
      {
        auto out = open_out(out_dir + "/trials.csv");
        write_trials_csv(out, results, ds);
      }
      std::vector<std::vector<std::int64_t>> per_run;
      for (const auto& r : results) {
        std::vector<std::int64_t> row;
        for (auto d : ds) row.push_back(r.stop(d));
        per_run.push_back(row);
      }
      {
        auto out = open_out(out_dir + "/first_detector.csv");
        write_first_detector_csv(out, ds, first_detector_ratio(per_run));
      }
      if (log_steps && !results.empty()) {
        auto log = open_out(out_dir + "/trial_log.csv");
        write_trial_log_csv(log, results.front().log);
        auto mse = open_out(out_dir + "/mse.csv");
        write_mse_csv(mse, mse_curves(results));
      }
      std::cout << "detector,delay,delay_ci,miss_ratio,false_alarms,misses,trials\n";
      for (auto d : ds) {
        const auto stops = stops_of(results, d);
        const auto est = estimate_delay(stops, cfg.tau, cfg.horizon);
        std::cout << detector_name(d) << ',' << format_number(est.delay.mean) << ',' << format_number(est.delay.ci)
                  << ',' << format_number(missed_detection_ratio(stops, cfg.tau, cfg.eta)) << ','
                  << est.false_alarms << ',' << est.misses << ',' << est.trials << '\n';
      }
      return 0;
    }

    if (*sweep) {
      if (threads) cfg.threads = threads;
      const Experiment exp = prepare_experiment(cfg);
      const auto d = parse_detector(detector);
      const auto levels = thresholds.empty() ? cfg.h_sweep : parse_number_list(thresholds);
      if (levels.empty()) throw ValidationError("no thresholds: pass --thresholds or set [detector] h_sweep");
      const auto curve = sweep_tradeoff(exp, d, levels);
      auto out = open_out(out_dir + "/tradeoff.csv");
      write_tradeoff_csv(out, curve);
      write_tradeoff_csv(std::cout, curve);
      return 0;
    }

    if (*fa) {
      const Experiment exp = prepare_experiment(cfg);
      TrialOptions opts;
      opts.attack_enabled = false;
      const auto results = run_trials(exp, cfg.trials, opts, threads);
      std::cout << "detector,fap,fap_ci,censored,runs\n";
      for (auto d : enabled_detectors(exp)) {
        const auto est = estimate_false_alarm_period(stops_of(results, d), cfg.horizon);
        std::cout << detector_name(d) << ',' << format_number(est.period.mean) << ','
                  << format_number(est.period.ci) << ',' << est.censored << ',' << est.runs << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
