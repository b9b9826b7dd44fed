#include "gridwatch/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <fstream>
#include <sstream>

#include "gridwatch/errors.hpp"
#include "gridwatch/sectioned_text.hpp"

namespace gridwatch {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(std::string_view s, std::size_t line) {
  std::string t = trim(s);
  double v = 0.0;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (!t.empty() && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e || t.empty()) throw ParseError(line, "expected a number, got '" + t + "'");
  return v;
}

std::int64_t to_int(std::string_view s, std::size_t line) {
  std::string t = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ParseError(line, "expected an integer, got '" + t + "'");
  return v;
}

std::size_t to_count(std::string_view s, std::size_t line) {
  const auto v = to_int(s, line);
  if (v < 0) throw ParseError(line, "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view s, std::size_t line) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ParseError(line, "expected a boolean, got '" + t + "'");
}

std::vector<std::string> words(std::string_view s) {
  std::string t(s);
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<double> numbers(std::string_view s, std::size_t line) {
  std::vector<double> out;
  for (const auto& w : words(s)) out.push_back(to_double(w, line));
  return out;
}

AttackKind to_kind(std::string_view s, std::size_t line) {
  const std::string t = trim(s);
  if (t == "none") return AttackKind::none;
  if (t == "fdi") return AttackKind::fdi;
  if (t == "jamming") return AttackKind::jamming;
  if (t == "hybrid") return AttackKind::hybrid;
  if (t == "onoff") return AttackKind::onoff;
  if (t == "topology_fault") return AttackKind::topology_fault;
  throw ParseError(line, "unknown attack kind '" + t + "'");
}

// "identity" or rows separated by ';'.
StateTransition to_transition(std::string_view s, std::size_t line) {
  const std::string t = trim(s);
  if (t == "identity") return StateTransition::identity();
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const auto end = std::min(t.find(';', pos), t.size());
    rows.push_back(numbers(std::string_view(t).substr(pos, end - pos), line));
    pos = end + 1;
  }
  const std::size_t n = rows.size();
  Eigen::MatrixXd a(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) throw ParseError(line, "a_matrix must be square");
    for (std::size_t c = 0; c < n; ++c) a(r, c) = rows[r][c];
  }
  return StateTransition::explicit_matrix(std::move(a));
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::size_t)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"model",
       {
           {"topology", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.model.topology = trim(v); }},
           {"lambda", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.lambda = to_count(v, l); }},
           {"susceptance_scale",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.susceptance_scale = to_double(v, l); }},
           {"sigma_v2", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.sigma_v2 = to_double(v, l); }},
           {"sigma_w2", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.sigma_w2 = to_double(v, l); }},
           {"a_matrix", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.a_matrix = to_transition(v, l); }},
           {"initial_state",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) {
              const auto xs = numbers(v, l);
              c.model.initial_state = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
            }},
           {"initial_cov", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.initial_cov = to_double(v, l); }},
           {"warmup", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.model.warmup = to_count(v, l); }},
       }},
      {"detector",
       {
           {"gamma", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.detector.gamma = to_double(v, l); }},
           {"sigma2_min", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.detector.sigma2_min = to_double(v, l); }},
           {"h", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.detector.h = to_double(v, l); }},
           {"h_sweep", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.h_sweep = numbers(v, l); }},
       }},
      {"shewhart",
       {
           {"enabled", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.shewhart_enabled = to_bool(v, l); }},
           {"phi", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.shewhart.phi = to_double(v, l); }},
       }},
      {"chi2",
       {
           {"enabled", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.chi2.enabled = to_bool(v, l); }},
           {"bins", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.chi2.bins = to_count(v, l); }},
           {"window", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.chi2.window = to_count(v, l); }},
           {"threshold", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.chi2.threshold = to_double(v, l); }},
           {"edges", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.chi2.edges = numbers(v, l); }},
       }},
      {"benchmarks",
       {
           {"euclidean", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.benchmarks.euclidean = to_double(v, l); }},
           {"cosine", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.benchmarks.cosine = to_double(v, l); }},
           {"np_cusum", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.benchmarks.np_cusum = to_double(v, l); }},
           {"np_cusum_clamp", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.benchmarks.np_clamp = to_bool(v, l); }},
           {"baseline_cache", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.benchmarks.baseline_cache = trim(v); }},
           {"baseline_samples",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.benchmarks.baseline_samples = to_count(v, l); }},
       }},
      {"attack",
       {
           {"kind", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.kind = to_kind(v, l); }},
           {"inner", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.inner = to_kind(v, l); }},
           {"probability",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) {
              const double p = to_double(v, l);
              c.attack.spec.fdi_selection = MeterSelection::bernoulli(p);
              c.attack.spec.jam_selection = MeterSelection::bernoulli(p);
            }},
           {"fdi_probability",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) {
              c.attack.spec.fdi_selection = MeterSelection::bernoulli(to_double(v, l));
            }},
           {"jam_probability",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) {
              c.attack.spec.jam_selection = MeterSelection::bernoulli(to_double(v, l));
            }},
           {"meters",
            [](ExperimentConfig& c, std::string_view v, std::size_t) {
              c.attack.fdi_meters = words(v);
              c.attack.jam_meters = words(v);
            }},
           {"fdi_meters", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.attack.fdi_meters = words(v); }},
           {"jam_meters", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.attack.jam_meters = words(v); }},
           {"theta",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) {
              const double th = to_double(v, l);
              c.attack.spec.fdi_law = MagnitudeLaw::uniform(-th, th);
            }},
           {"fdi_lo", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.fdi_law.lo = to_double(v, l); }},
           {"fdi_hi", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.fdi_law.hi = to_double(v, l); }},
           {"fdi_fixed",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.fdi_law = MagnitudeLaw::fixed(numbers(v, l)); }},
           {"jam_lo", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.jam_law.lo = to_double(v, l); }},
           {"jam_hi", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.jam_law.hi = to_double(v, l); }},
           {"jam_fixed",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.jam_law = MagnitudeLaw::fixed(numbers(v, l)); }},
           {"on_period", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.on_period = to_int(v, l); }},
           {"off_period", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.attack.spec.off_period = to_int(v, l); }},
           {"fault_meters", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.attack.fault_meters = words(v); }},
       }},
      {"run",
       {
           {"trials", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.trials = to_count(v, l); }},
           {"horizon", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.horizon = to_int(v, l); }},
           {"tau", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.tau = to_int(v, l); }},
           {"eta", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.eta = to_int(v, l); }},
           {"seed",
            [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.seed = static_cast<std::uint64_t>(to_int(v, l)); }},
           {"threads", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.threads = to_count(v, l); }},
       }},
  };
  return table;
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) { return numbers(text, 0); }

void ExperimentConfig::validate() const {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (horizon <= tau) throw ValidationError("horizon must exceed tau");
  if (tau < 1) throw ValidationError("tau must be >= 1");
  if (eta < 1) throw ValidationError("eta must be >= 1");
  if (model.lambda < 1) throw ValidationError("lambda must be >= 1");
  if (!(model.susceptance_scale > 0.0)) throw ValidationError("susceptance_scale must be positive");
  if (!(model.sigma_v2 > 0.0) || !(model.sigma_w2 > 0.0)) throw ValidationError("model variances must be positive");
  if (model.initial_cov && !(*model.initial_cov >= 0.0)) throw ValidationError("initial_cov must be non-negative");
  detector.validate();
  shewhart.validate();
  if (!std::is_sorted(h_sweep.begin(), h_sweep.end())) throw ValidationError("h_sweep must be sorted ascending");
  if (chi2.enabled) {
    if (chi2.bins < 2) throw ValidationError("chi2 bins must be >= 2");
    if (chi2.window < 1) throw ValidationError("chi2 window must be >= 1");
    if (!chi2.edges.empty() && chi2.edges.size() + 1 != chi2.bins)
      throw ValidationError("chi2 edges must list bins-1 inner edges");
  }
  const auto k = attack.spec.kind == AttackKind::onoff ? attack.spec.inner : attack.spec.kind;
  if (attack.spec.kind == AttackKind::onoff && (k == AttackKind::onoff || k == AttackKind::topology_fault))
    throw ValidationError("on-off inner kind must be fdi, jamming or hybrid");
}

ExperimentConfig parse_experiment_config(std::string_view content, const std::filesystem::path& base_dir) {
  const auto& table = setters();
  std::vector<std::string> sections;
  for (const auto& [name, _] : table) sections.push_back(name);

  ExperimentConfig cfg;
  for (const auto& line : read_sectioned_text(content, sections)) {
    const auto eq = line.text.find('=');
    if (eq == std::string::npos) throw ParseError(line.number, "expected 'key = value'");
    const std::string key = trim(std::string_view(line.text).substr(0, eq));
    const std::string value = trim(std::string_view(line.text).substr(eq + 1));
    const auto& keys = table.at(line.section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(line.number, "unknown key '" + key + "' in [" + line.section + "]");
    it->second(cfg, value, line.number);
  }

  if (!cfg.model.topology.empty() && cfg.model.topology.is_relative() && !base_dir.empty())
    cfg.model.topology = base_dir / cfg.model.topology;
  auto& cache = cfg.benchmarks.baseline_cache;
  if (!cache.empty() && cache.is_relative() && !base_dir.empty()) cache = base_dir / cache;
  cfg.attack.spec.onset = cfg.attack.spec.kind == AttackKind::none ? kNever : cfg.tau;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str(), path.parent_path());
}

}  // namespace gridwatch
