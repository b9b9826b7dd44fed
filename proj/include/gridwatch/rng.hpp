#pragma once

#include <cstdint>
#include <random>

namespace gridwatch {

// Named per-trial streams. Each trial owns one RandomStream per purpose so
// that adding draws to one consumer never shifts another consumer's samples.
enum class StreamId : std::uint64_t {
  simulation = 1,     // state noise then measurement noise, per step
  attack = 2,         // selection bits, FDI magnitudes, jamming variances
  jamming_noise = 3,  // per-sample jamming noise added to measurements
  chi2_window = 4,    // initial sliding-window contents
  monte_carlo = 5,    // auxiliary calibration runs
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// seed = hash(master, trial, stream).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, StreamId stream) noexcept;

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double gaussian() {
    ++gaussian_draws_;
    return normal_(engine_);
  }
  double gaussian(double variance);
  double uniform(double lo, double hi);
  bool bernoulli(double p);
  double chi_squared(double dof);

  std::uint64_t gaussian_draws() const noexcept { return gaussian_draws_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uint64_t gaussian_draws_ = 0;
};

}  // namespace gridwatch
