#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/grid_model.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

enum class AttackKind { none, fdi, jamming, hybrid, onoff, topology_fault };

// Magnitude law shared by the FDI bias and the jamming variance.
struct MagnitudeLaw {
  enum class Shape { uniform, fixed } shape = Shape::uniform;
  double lo = 0.0;  // uniform lower bound
  double hi = 0.0;  // uniform upper bound
  std::vector<double> fixed_values;  // per meter, used when shape == fixed

  static MagnitudeLaw uniform(double lo, double hi) { return {Shape::uniform, lo, hi, {}}; }
  static MagnitudeLaw fixed(std::vector<double> per_meter) { return {Shape::fixed, 0.0, 0.0, std::move(per_meter)}; }
};

struct MeterSelection {
  enum class Mode { bernoulli, fixed } mode = Mode::bernoulli;
  double probability = 0.5;
  std::vector<std::size_t> meters;  // 0-based, used when mode == fixed

  static MeterSelection bernoulli(double p) { return {Mode::bernoulli, p, {}}; }
  static MeterSelection fixed_set(std::vector<std::size_t> m) { return {Mode::fixed, 1.0, std::move(m)}; }
};

inline constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  std::int64_t onset = kNever;
  // For on-off attacks, the kind used during on periods (fdi, jamming or hybrid).
  AttackKind inner = AttackKind::hybrid;
  std::int64_t on_period = 1;
  std::int64_t off_period = 0;
  MeterSelection fdi_selection = MeterSelection::bernoulli(0.5);
  MeterSelection jam_selection = MeterSelection::bernoulli(0.5);
  MagnitudeLaw fdi_law = MagnitudeLaw::uniform(-0.02, 0.02);  // bias a_k
  MagnitudeLaw jam_law = MagnitudeLaw::uniform(2e-4, 4e-4);   // variance sigma_k^2
  std::vector<std::size_t> fault_meters;                       // topology_fault only

  void validate(std::size_t meter_count) const;
  bool injects_fdi() const;
  bool injects_jamming() const;
};

struct AttackRealization {
  std::int64_t t = 0;
  Eigen::VectorXd a;        // K injected biases
  Eigen::VectorXd jam_var;  // K jamming variances
  bool active = false;
};

// Per-step sample of the attack program. Draw order when active: FDI
// selection bits for all K meters, jamming selection bits for all K meters,
// FDI magnitudes for selected meters in index order, then jamming variances.
AttackRealization realize_attack(const AttackSpec& spec, std::size_t meter_count, std::int64_t t,
                                 RandomStream& stream);

// y[k][i] += a_k + n_{k,i}, n_{k,i} ~ N(0, jam_var_k). One Gaussian draw per
// sample of every jammed meter, in meter-major order.
MeasurementBatch apply_attack(const GridModel& model, const MeasurementBatch& clean, const AttackRealization& real,
                              RandomStream& stream);

// Meter partition implied by a realization's zero/nonzero pattern.
struct AttackPartition {
  std::vector<std::size_t> none, fdi, jamming, hybrid;
};
AttackPartition partition_of(const AttackRealization& real);

}  // namespace gridwatch
