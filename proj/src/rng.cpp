#include "gridwatch/rng.hpp"

#include <cmath>

namespace gridwatch {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, StreamId stream) noexcept {
  return mix64(mix64(mix64(master) ^ trial) ^ static_cast<std::uint64_t>(stream));
}

double RandomStream::gaussian(double variance) {
  const double z = gaussian();
  return variance > 0.0 ? std::sqrt(variance) * z : 0.0;
}

double RandomStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

bool RandomStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p;
}

double RandomStream::chi_squared(double dof) {
  return std::chi_squared_distribution<double>(dof)(engine_);
}

}  // namespace gridwatch
