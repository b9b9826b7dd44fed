#include "gridwatch/grid_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "gridwatch/errors.hpp"
#include "gridwatch/sectioned_text.hpp"

namespace gridwatch {
namespace {

double parse_double(const std::string& token, std::size_t line, const char* what) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ParseError(line, std::string("invalid ") + what + " '" + token + "'");
  return value;
}

template <typename T>
std::optional<std::size_t> find_by_id(const std::vector<T>& items, std::string_view id) {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].id == id) return i;
  return std::nullopt;
}

}  // namespace

std::size_t GridTopology::reference_bus() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].reference) return i;
  throw ValidationError("topology has no reference bus");
}

std::optional<std::size_t> GridTopology::state_index(std::size_t bus) const {
  const std::size_t ref = reference_bus();
  if (bus == ref) return std::nullopt;
  return bus < ref ? bus : bus - 1;
}

std::optional<std::size_t> GridTopology::find_meter(std::string_view id) const { return find_by_id(meters, id); }
std::optional<std::size_t> GridTopology::find_branch(std::string_view id) const { return find_by_id(branches, id); }

Eigen::VectorXd GridTopology::base_angles() const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(state_dim()));
  for (std::size_t b = 0; b < buses.size(); ++b)
    if (auto col = state_index(b)) x[static_cast<Eigen::Index>(*col)] = buses[b].theta;
  return x;
}

void GridTopology::validate() const {
  const auto refs = std::count_if(buses.begin(), buses.end(), [](const Bus& b) { return b.reference; });
  if (refs != 1) throw ValidationError("topology must mark exactly one reference bus (found " + std::to_string(refs) + ")");
  if (buses.size() < 2) throw ValidationError("topology needs at least two buses");
  std::set<std::string> ids;
  for (const auto& b : buses)
    if (!ids.insert(b.id).second) throw ValidationError("duplicate bus " + b.id);
  for (const auto& br : branches) {
    if (br.from >= buses.size() || br.to >= buses.size()) throw ValidationError("branch " + br.id + " references an unknown bus");
    if (br.from == br.to) throw ValidationError("branch " + br.id + " is a self loop");
    if (!(br.susceptance > 0.0) || !std::isfinite(br.susceptance))
      throw ValidationError("branch " + br.id + " must have positive susceptance");
  }
  if (meters.empty()) throw ValidationError("topology declares no meters");
  std::set<std::tuple<int, std::size_t, bool>> seen;
  std::set<std::string> meter_ids;
  for (const auto& m : meters) {
    if (!meter_ids.insert(m.id).second) throw ValidationError("duplicate meter " + m.id);
    std::tuple<int, std::size_t, bool> key;
    if (const auto* f = std::get_if<FlowMeter>(&m.kind)) {
      if (f->branch >= branches.size()) throw ValidationError("meter " + m.id + " references an unknown branch");
      key = {0, f->branch, f->forward};
    } else {
      const auto& inj = std::get<InjectionMeter>(m.kind);
      if (inj.bus >= buses.size()) throw ValidationError("meter " + m.id + " references an unknown bus");
      key = {1, inj.bus, true};
    }
    if (!seen.insert(key).second) throw ValidationError("meter " + m.id + " duplicates an earlier meter");
  }
}

GridTopology parse_topology(std::string_view content) {
  const auto lines = read_sectioned_text(content, {"buses", "branches", "meters"});
  GridTopology topo;

  for (const auto& line : lines) {
    if (line.section != "buses") continue;
    Bus bus;
    bus.id = line.tokens.at(0);
    for (std::size_t i = 1; i < line.tokens.size(); ++i) {
      const auto& tok = line.tokens[i];
      if (tok == "ref") {
        bus.reference = true;
      } else if (tok.rfind("theta=", 0) == 0) {
        bus.theta = parse_double(tok.substr(6), line.number, "angle");
      } else {
        throw ParseError(line.number, "unexpected bus attribute '" + tok + "'");
      }
    }
    if (bus.reference && bus.theta != 0.0) throw ParseError(line.number, "reference bus " + bus.id + " must have zero angle");
    if (find_by_id(topo.buses, bus.id)) throw ValidationError("duplicate bus " + bus.id);
    topo.buses.push_back(std::move(bus));
  }

  for (const auto& line : lines) {
    if (line.section != "branches") continue;
    if (line.tokens.size() != 4) throw ParseError(line.number, "branch needs: <id> <from> <to> <susceptance>");
    Branch br;
    br.id = line.tokens[0];
    if (find_by_id(topo.branches, br.id)) throw ValidationError("duplicate branch " + br.id);
    const auto from = find_by_id(topo.buses, line.tokens[1]);
    if (!from) throw ValidationError("branch " + br.id + " references undeclared bus " + line.tokens[1]);
    const auto to = find_by_id(topo.buses, line.tokens[2]);
    if (!to) throw ValidationError("branch " + br.id + " references undeclared bus " + line.tokens[2]);
    br.from = *from;
    br.to = *to;
    br.susceptance = parse_double(line.tokens[3], line.number, "susceptance");
    if (!(br.susceptance > 0.0)) throw ValidationError("branch " + br.id + " must have positive susceptance");
    topo.branches.push_back(std::move(br));
  }

  for (const auto& line : lines) {
    if (line.section != "meters") continue;
    if (line.tokens.size() < 3) throw ParseError(line.number, "meter needs: <id> flow <branch> <+|-> | <id> injection <bus>");
    Meter m;
    m.id = line.tokens[0];
    const auto& kind = line.tokens[1];
    if (kind == "flow") {
      if (line.tokens.size() != 4) throw ParseError(line.number, "flow meter needs: <id> flow <branch> <+|->");
      const auto br = find_by_id(topo.branches, line.tokens[2]);
      if (!br) throw ValidationError("meter " + m.id + " references undeclared branch " + line.tokens[2]);
      const auto& dir = line.tokens[3];
      if (dir != "+" && dir != "-") throw ParseError(line.number, "flow direction must be + or -");
      m.kind = FlowMeter{*br, dir == "+"};
    } else if (kind == "injection") {
      if (line.tokens.size() != 3) throw ParseError(line.number, "injection meter needs: <id> injection <bus>");
      const auto bus = find_by_id(topo.buses, line.tokens[2]);
      if (!bus) throw ValidationError("meter " + m.id + " references undeclared bus " + line.tokens[2]);
      m.kind = InjectionMeter{*bus};
    } else {
      throw ParseError(line.number, "unknown meter kind '" + kind + "'");
    }
    topo.meters.push_back(std::move(m));
  }

  topo.validate();
  return topo;
}

GridTopology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open topology file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_topology(buffer.str());
}

namespace {

Eigen::RowVectorXd flow_row(const GridTopology& topo, std::size_t branch, bool forward) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(topo.state_dim()));
  const auto& br = topo.branches[branch];
  const double sign = forward ? 1.0 : -1.0;
  if (auto c = topo.state_index(br.from)) row[static_cast<Eigen::Index>(*c)] += sign * br.susceptance;
  if (auto c = topo.state_index(br.to)) row[static_cast<Eigen::Index>(*c)] -= sign * br.susceptance;
  return row;
}

}  // namespace

GridModel model_from_rows(RowMatrix meter_rows, std::size_t lambda, double sigma_v2, double sigma_w2,
                          const StateTransition& a_choice) {
  if (lambda < 1) throw ValidationError("lambda must be >= 1");
  if (!(sigma_v2 >= 0.0) || !(sigma_w2 >= 0.0)) throw ValidationError("noise variances must be non-negative");
  const auto n = meter_rows.cols();
  GridModel model;
  if (a_choice.matrix) {
    if (a_choice.matrix->rows() != n || a_choice.matrix->cols() != n)
      throw ValidationError("state-transition matrix is " + std::to_string(a_choice.matrix->rows()) + "x" +
                            std::to_string(a_choice.matrix->cols()) + ", expected " + std::to_string(n) + "x" +
                            std::to_string(n));
    model.A = *a_choice.matrix;
    model.identity_dynamics = model.A.isIdentity(0.0);
  } else {
    model.A = Eigen::MatrixXd::Identity(n, n);
    model.identity_dynamics = true;
  }
  model.lambda = lambda;
  model.sigma_v2 = sigma_v2;
  model.sigma_w2 = sigma_w2;
  const auto k_count = meter_rows.rows();
  const auto lam = static_cast<Eigen::Index>(lambda);
  model.H.resize(k_count * lam, n);
  for (Eigen::Index k = 0; k < k_count; ++k)
    for (Eigen::Index i = 0; i < lam; ++i) model.H.row(k * lam + i) = meter_rows.row(k);
  model.meter_rows = std::move(meter_rows);
  return model;
}

GridModel build_model(const GridTopology& topology, std::size_t lambda, double sigma_v2, double sigma_w2,
                      const StateTransition& a_choice) {
  if (!(sigma_v2 > 0.0) || !(sigma_w2 > 0.0)) throw ValidationError("noise variances must be positive");
  const auto k_count = static_cast<Eigen::Index>(topology.meter_count());
  RowMatrix rows = RowMatrix::Zero(k_count, static_cast<Eigen::Index>(topology.state_dim()));
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto& meter = topology.meters[static_cast<std::size_t>(k)];
    if (const auto* f = std::get_if<FlowMeter>(&meter.kind)) {
      rows.row(k) = flow_row(topology, f->branch, f->forward);
    } else {
      const auto bus = std::get<InjectionMeter>(meter.kind).bus;
      for (std::size_t b = 0; b < topology.branches.size(); ++b) {
        const auto& br = topology.branches[b];
        if (br.from == bus) rows.row(k) += flow_row(topology, b, true);
        else if (br.to == bus) rows.row(k) += flow_row(topology, b, false);
      }
    }
  }
  return model_from_rows(std::move(rows), lambda, sigma_v2, sigma_w2, a_choice);
}

std::uint64_t GridModel::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t dims[3] = {state_dim(), meter_count(), lambda};
  feed(dims, sizeof dims);
  feed(A.data(), sizeof(double) * static_cast<std::size_t>(A.size()));
  feed(meter_rows.data(), sizeof(double) * static_cast<std::size_t>(meter_rows.size()));
  feed(&sigma_v2, sizeof sigma_v2);
  feed(&sigma_w2, sizeof sigma_w2);
  return h;
}

MeasurementBatch measure(const GridModel& model, std::int64_t t, const Eigen::VectorXd& x, RandomStream& stream) {
  MeasurementBatch batch;
  batch.t = t;
  batch.lambda = model.lambda;
  batch.y = model.H * x;
  for (Eigen::Index i = 0; i < batch.y.size(); ++i) batch.y[i] += stream.gaussian(model.sigma_w2);
  return batch;
}

std::pair<SimState, MeasurementBatch> simulate_step(const GridModel& model, const SimState& state,
                                                    RandomStream& stream) {
  SimState next;
  next.t = state.t + 1;
  next.x = model.identity_dynamics ? state.x : Eigen::VectorXd(model.A * state.x);
  for (Eigen::Index i = 0; i < next.x.size(); ++i) next.x[i] += stream.gaussian(model.sigma_v2);
  auto batch = measure(model, next.t, next.x, stream);
  if (!next.x.allFinite() || !batch.y.allFinite()) throw NumericError("simulation diverged at t=" + std::to_string(next.t));
  return {std::move(next), std::move(batch)};
}

GridModel topology_fault(const GridModel& model, std::span<const std::size_t> faulted) {
  if (faulted.empty()) throw ContractError("topology fault needs a nonempty meter set");
  GridModel out = model;
  const auto lam = static_cast<Eigen::Index>(model.lambda);
  for (const auto k : faulted) {
    if (k >= model.meter_count()) throw ValidationError("unknown meter index " + std::to_string(k));
    const auto row = static_cast<Eigen::Index>(k);
    out.meter_rows.row(row).setZero();
    for (Eigen::Index i = 0; i < lam; ++i) out.H.row(row * lam + i).setZero();
  }
  return out;
}

}  // namespace gridwatch
