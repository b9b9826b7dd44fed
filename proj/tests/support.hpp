#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridwatch/grid_model.hpp"
#include "gridwatch/rng.hpp"

namespace testsupport {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(GRIDWATCH_SOURCE_DIR) / "data" / name;
}
inline std::filesystem::path config_path(const std::string& name) {
  return std::filesystem::path(GRIDWATCH_SOURCE_DIR) / "configs" / name;
}

inline gridwatch::GridTopology ieee14() { return gridwatch::load_topology(data_path("ieee14.topo")); }

// The configured experiment scale: susceptances on a 1000 MVA base.
inline constexpr double kExperimentScale = 0.1;

inline gridwatch::GridModel ieee14_model(std::size_t lambda = 5, double scale = kExperimentScale) {
  auto topo = ieee14();
  for (auto& br : topo.branches) br.susceptance *= scale;
  return gridwatch::build_model(topo, lambda, 1e-4, 1e-4);
}

// One meter's residual samples drawn from a randomly chosen regime: noise
// only, bias, extra variance, both, a mean near +-gamma, or a variance near
// the jamming floor.
inline std::vector<double> random_residual_block(gridwatch::RandomStream& rng, std::size_t lambda, double sigma_w2,
                                                 double gamma, double sigma2_min) {
  const int regime = static_cast<int>(rng.uniform(0.0, 6.0));
  double bias = 0.0;
  double var = sigma_w2;
  switch (regime) {
    case 0: break;
    case 1: bias = rng.uniform(-0.2, 0.2); break;
    case 2: var += rng.uniform(0.0, 0.05); break;
    case 3:
      bias = rng.uniform(-0.2, 0.2);
      var += rng.uniform(0.0, 0.05);
      break;
    case 4: bias = (rng.bernoulli(0.5) ? 1.0 : -1.0) * gamma * rng.uniform(0.9, 1.1); break;
    default: var = rng.uniform(0.5, 1.5) * (sigma_w2 + sigma2_min); break;
  }
  std::vector<double> e(lambda);
  for (auto& x : e) x = bias + rng.gaussian(var);
  return e;
}

}  // namespace testsupport
