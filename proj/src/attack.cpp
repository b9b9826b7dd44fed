#include "gridwatch/attack.hpp"

#include <algorithm>
#include <string>

#include "gridwatch/errors.hpp"

namespace gridwatch {
namespace {

void validate_selection(const MeterSelection& sel, std::size_t meter_count) {
  if (sel.mode == MeterSelection::Mode::bernoulli) {
    if (!(sel.probability >= 0.0 && sel.probability <= 1.0)) throw ValidationError("selection probability must be in [0,1]");
  } else {
    for (auto k : sel.meters)
      if (k >= meter_count) throw ValidationError("attack references unknown meter index " + std::to_string(k));
  }
}

void validate_law(const MagnitudeLaw& law, std::size_t meter_count, bool variance) {
  if (law.shape == MagnitudeLaw::Shape::uniform) {
    if (!(law.lo <= law.hi)) throw ValidationError("magnitude law needs lo <= hi");
    if (variance && law.lo < 0.0) throw ValidationError("jamming variance must be nonnegative");
  } else {
    if (law.fixed_values.size() != meter_count) throw ValidationError("fixed magnitude law needs one value per meter");
    if (variance && std::any_of(law.fixed_values.begin(), law.fixed_values.end(), [](double v) { return v < 0.0; }))
      throw ValidationError("jamming variance must be nonnegative");
  }
}

std::vector<bool> draw_selection(const MeterSelection& sel, std::size_t meter_count, RandomStream& stream) {
  std::vector<bool> chosen(meter_count, false);
  if (sel.mode == MeterSelection::Mode::fixed) {
    for (auto k : sel.meters) chosen[k] = true;
  } else {
    for (std::size_t k = 0; k < meter_count; ++k) chosen[k] = stream.bernoulli(sel.probability);
  }
  return chosen;
}

double draw_magnitude(const MagnitudeLaw& law, std::size_t k, RandomStream& stream) {
  if (law.shape == MagnitudeLaw::Shape::fixed) return law.fixed_values[k];
  return stream.uniform(law.lo, law.hi);
}

}  // namespace

bool AttackSpec::injects_fdi() const {
  const AttackKind k = kind == AttackKind::onoff ? inner : kind;
  return k == AttackKind::fdi || k == AttackKind::hybrid;
}

bool AttackSpec::injects_jamming() const {
  const AttackKind k = kind == AttackKind::onoff ? inner : kind;
  return k == AttackKind::jamming || k == AttackKind::hybrid;
}

void AttackSpec::validate(std::size_t meter_count) const {
  if (kind == AttackKind::none) return;
  if (onset < 1) throw ValidationError("attack onset must be >= 1");
  if (kind == AttackKind::onoff) {
    if (inner != AttackKind::fdi && inner != AttackKind::jamming && inner != AttackKind::hybrid)
      throw ValidationError("on-off attack needs an fdi, jamming or hybrid inner kind");
    if (on_period < 1) throw ValidationError("on period must be >= 1");
    if (off_period < 0) throw ValidationError("off period must be >= 0");
  }
  if (kind == AttackKind::topology_fault) {
    if (fault_meters.empty()) throw ValidationError("topology fault needs a nonempty meter set");
    for (auto k : fault_meters)
      if (k >= meter_count) throw ValidationError("topology fault references unknown meter index " + std::to_string(k));
    return;
  }
  if (injects_fdi()) {
    validate_selection(fdi_selection, meter_count);
    validate_law(fdi_law, meter_count, false);
  }
  if (injects_jamming()) {
    validate_selection(jam_selection, meter_count);
    validate_law(jam_law, meter_count, true);
  }
}

AttackRealization realize_attack(const AttackSpec& spec, std::size_t meter_count, std::int64_t t,
                                 RandomStream& stream) {
  if (t < 1) throw ContractError("attack realization needs t >= 1");
  const auto k_count = static_cast<Eigen::Index>(meter_count);
  AttackRealization real;
  real.t = t;
  real.a = Eigen::VectorXd::Zero(k_count);
  real.jam_var = Eigen::VectorXd::Zero(k_count);

  if (spec.kind == AttackKind::none || spec.kind == AttackKind::topology_fault || t < spec.onset) return real;
  if (spec.kind == AttackKind::onoff) {
    const std::int64_t cycle = spec.on_period + spec.off_period;
    if ((t - spec.onset) % cycle >= spec.on_period) return real;
  }
  real.active = true;

  const bool fdi = spec.injects_fdi();
  const bool jam = spec.injects_jamming();
  std::vector<bool> fdi_sel, jam_sel;
  if (fdi) fdi_sel = draw_selection(spec.fdi_selection, meter_count, stream);
  if (jam) jam_sel = draw_selection(spec.jam_selection, meter_count, stream);
  if (fdi)
    for (std::size_t k = 0; k < meter_count; ++k)
      if (fdi_sel[k]) real.a[static_cast<Eigen::Index>(k)] = draw_magnitude(spec.fdi_law, k, stream);
  if (jam)
    for (std::size_t k = 0; k < meter_count; ++k)
      if (jam_sel[k]) real.jam_var[static_cast<Eigen::Index>(k)] = draw_magnitude(spec.jam_law, k, stream);
  return real;
}

MeasurementBatch apply_attack(const GridModel& model, const MeasurementBatch& clean, const AttackRealization& real,
                              RandomStream& stream) {
  const std::size_t k_count = model.meter_count();
  if (static_cast<std::size_t>(clean.y.size()) != model.measurement_dim())
    throw ContractError("measurement batch does not match the model");
  MeasurementBatch out = clean;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double a = real.a[static_cast<Eigen::Index>(k)];
    const double v = real.jam_var[static_cast<Eigen::Index>(k)];
    if (a == 0.0 && v == 0.0) continue;
    for (std::size_t i = 0; i < model.lambda; ++i) {
      double& y = out.at(k, i);
      y += a;
      if (v > 0.0) y += stream.gaussian(v);
    }
  }
  return out;
}

AttackPartition partition_of(const AttackRealization& real) {
  AttackPartition p;
  for (Eigen::Index k = 0; k < real.a.size(); ++k) {
    const bool f = real.a[k] != 0.0;
    const bool j = real.jam_var[k] > 0.0;
    auto idx = static_cast<std::size_t>(k);
    if (f && j) p.hybrid.push_back(idx);
    else if (f) p.fdi.push_back(idx);
    else if (j) p.jamming.push_back(idx);
    else p.none.push_back(idx);
  }
  return p;
}

}  // namespace gridwatch
