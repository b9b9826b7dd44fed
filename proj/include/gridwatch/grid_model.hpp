#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/rng.hpp"

namespace gridwatch {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Bus {
  std::string id;
  bool reference = false;
  double theta = 0.0;  // base-case angle, radians
};

struct Branch {
  std::string id;
  std::size_t from = 0;  // bus indices into GridTopology::buses
  std::size_t to = 0;
  double susceptance = 0.0;  // per unit, > 0
};

struct FlowMeter {
  std::size_t branch = 0;
  bool forward = true;  // from -> to
};

struct InjectionMeter {
  std::size_t bus = 0;
};

struct Meter {
  std::string id;
  std::variant<FlowMeter, InjectionMeter> kind;
};

struct GridTopology {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Meter> meters;

  std::size_t reference_bus() const;
  std::size_t state_dim() const { return buses.size() - 1; }
  std::size_t meter_count() const { return meters.size(); }
  // Column of `bus` in the state vector; nullopt for the reference bus.
  std::optional<std::size_t> state_index(std::size_t bus) const;
  std::optional<std::size_t> find_meter(std::string_view id) const;
  std::optional<std::size_t> find_branch(std::string_view id) const;
  // Non-reference bus angles in state order.
  Eigen::VectorXd base_angles() const;

  void validate() const;
};

// Grammar:
//   [buses]     <id> [ref] [theta=<radians>]
//   [branches]  <id> <from-bus> <to-bus> <susceptance>
//   [meters]    <id> flow <branch-id> <+|->
//               <id> injection <bus-id>
// '#' starts a comment. Exactly one bus carries `ref`.
GridTopology parse_topology(std::string_view content);
GridTopology load_topology(const std::filesystem::path& path);

struct StateTransition {
  // Empty means identity.
  std::optional<Eigen::MatrixXd> matrix;
  static StateTransition identity() { return {}; }
  static StateTransition explicit_matrix(Eigen::MatrixXd a) { return {std::move(a)}; }
};

// x_t = A x_{t-1} + v_t,  y_t = H x_t + w_t, with H built from K meter rows
// each repeated `lambda` times.
struct GridModel {
  Eigen::MatrixXd A;
  RowMatrix meter_rows;  // K x N, one DC-flow row per meter
  RowMatrix H;           // (K*lambda) x N
  double sigma_v2 = 0.0;
  double sigma_w2 = 0.0;
  std::size_t lambda = 1;
  bool identity_dynamics = true;

  std::size_t state_dim() const { return static_cast<std::size_t>(meter_rows.cols()); }
  std::size_t meter_count() const { return static_cast<std::size_t>(meter_rows.rows()); }
  std::size_t measurement_dim() const { return meter_count() * lambda; }

  // Per-meter predicted value h_k^T x (one entry per meter).
  Eigen::VectorXd predict_meters(const Eigen::VectorXd& x) const { return meter_rows * x; }
  // Stable digest of all numeric content; used to key cached calibration data.
  std::uint64_t fingerprint() const;
};

GridModel build_model(const GridTopology& topology, std::size_t lambda, double sigma_v2,
                      double sigma_w2, const StateTransition& a_choice = StateTransition::identity());

// Builds H directly from per-meter rows; used for synthetic models in tests.
GridModel model_from_rows(RowMatrix meter_rows, std::size_t lambda, double sigma_v2, double sigma_w2,
                          const StateTransition& a_choice = StateTransition::identity());

struct MeasurementBatch {
  std::int64_t t = 0;
  std::size_t lambda = 1;
  Eigen::VectorXd y;  // meter-major: y[k*lambda + i]

  double at(std::size_t meter, std::size_t sample) const { return y[static_cast<Eigen::Index>(meter * lambda + sample)]; }
  double& at(std::size_t meter, std::size_t sample) { return y[static_cast<Eigen::Index>(meter * lambda + sample)]; }
  std::size_t meter_count() const { return static_cast<std::size_t>(y.size()) / lambda; }
};

struct SimState {
  std::int64_t t = 0;
  Eigen::VectorXd x;
};

// Draw order per step: N state-noise samples, then K*lambda measurement-noise
// samples, all from `stream`.
std::pair<SimState, MeasurementBatch> simulate_step(const GridModel& model, const SimState& state,
                                                    RandomStream& stream);

// Measurement of a given state with fresh noise; the second half of simulate_step.
MeasurementBatch measure(const GridModel& model, std::int64_t t, const Eigen::VectorXd& x,
                         RandomStream& stream);

// Copy of `model` whose rows for the meters in `faulted` are zero. The
// detector keeps the original model; only the simulator sees this one.
GridModel topology_fault(const GridModel& model, std::span<const std::size_t> faulted);

}  // namespace gridwatch
