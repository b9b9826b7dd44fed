#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/attack.hpp"
#include "gridwatch/detect_core.hpp"
#include "gridwatch/detect_robust.hpp"
#include "gridwatch/grid_model.hpp"

namespace gridwatch {

struct ModelSettings {
  std::filesystem::path topology;
  std::size_t lambda = 5;
  // Multiplies every branch susceptance: re-expresses the per-unit system on
  // another MVA base (scale = file base / new base).
  double susceptance_scale = 1.0;
  double sigma_v2 = 1e-4;
  double sigma_w2 = 1e-4;
  StateTransition a_matrix = StateTransition::identity();
  std::optional<Eigen::VectorXd> initial_state;  // default: topology base angles
  std::optional<double> initial_cov;             // P_{0|0} scale, default sigma_v2
  std::size_t warmup = 0;                        // filter-only steps before t = 1
};

struct Chi2Settings {
  bool enabled = true;
  std::size_t bins = 5;
  std::size_t window = 80;
  double threshold = 25.0133;
  std::vector<double> edges;  // inner edges; empty means equiprobable chi-squared(K*lambda) quantiles
};

struct BenchmarkSettings {
  double euclidean = std::numeric_limits<double>::infinity();
  double cosine = -std::numeric_limits<double>::infinity();
  double np_cusum = std::numeric_limits<double>::infinity();
  bool np_clamp = false;
  std::filesystem::path baseline_cache;  // empty: no cache
  std::size_t baseline_samples = 100000;
};

// Attack section as written; meter ids are resolved against the topology.
struct AttackSettings {
  AttackSpec spec;
  std::vector<std::string> fdi_meters;
  std::vector<std::string> jam_meters;
  std::vector<std::string> fault_meters;
};

struct ExperimentConfig {
  ModelSettings model;
  DetectorConfig detector{0.022, 1e-2, 25.0};
  std::vector<double> h_sweep;
  bool shewhart_enabled = true;
  ShewhartConfig shewhart;
  Chi2Settings chi2;
  BenchmarkSettings benchmarks;
  AttackSettings attack;

  std::size_t trials = 200;
  std::int64_t horizon = 2000;
  std::int64_t tau = 100;
  std::int64_t eta = 50;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// Sections: [model] [detector] [shewhart] [chi2] [benchmarks] [attack] [run],
// each holding `key = value` lines. Unknown sections and keys are rejected.
// Relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view content, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::vector<double> parse_number_list(std::string_view text);

}  // namespace gridwatch
