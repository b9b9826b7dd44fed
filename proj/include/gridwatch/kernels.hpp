#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop kernels with a scalar reference and an AVX2 variant. Both
// variants perform the same floating-point operations in the same order per
// output element, so they agree bit for bit; the choice is made once at
// startup from the CPU feature flags (GRIDWATCH_KERNELS=scalar forces the
// reference path).
namespace gridwatch::kernels {

// Per-meter sufficient statistics of e_{k,i} = y_{k,i} - pred_k over the
// lambda samples of each meter block.
struct ResidualSums {
  std::span<double> delta;     // sum e
  std::span<double> zeta;      // sum e^2
  std::span<double> varrho;    // sum (e + gamma)^2
  std::span<double> varpi;     // sum (e - gamma)^2
  std::span<double> centered;  // sum (e - delta/lambda)^2
};

using ResidualStatsFn = void (*)(std::span<const double> y, std::span<const double> pred, std::size_t lambda,
                                 double gamma, const ResidualSums& out);

// out (dim x dim, row-major) = sum_k weights[k] * rows_k rows_k^T, rows K x dim row-major.
using WeightedGramFn = void (*)(std::span<const double> rows, std::span<const double> weights, std::size_t dim,
                                std::span<double> out);

struct KernelTable {
  std::string_view name;
  ResidualStatsFn residual_stats;
  WeightedGramFn weighted_gram;
};

const KernelTable& scalar_table();
// nullptr when the build lacks the variant or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable& active();

namespace scalar {
void residual_stats(std::span<const double> y, std::span<const double> pred, std::size_t lambda, double gamma,
                    const ResidualSums& out);
void weighted_gram(std::span<const double> rows, std::span<const double> weights, std::size_t dim,
                   std::span<double> out);
}  // namespace scalar

namespace avx2 {
void residual_stats(std::span<const double> y, std::span<const double> pred, std::size_t lambda, double gamma,
                    const ResidualSums& out);
void weighted_gram(std::span<const double> rows, std::span<const double> weights, std::size_t dim,
                   std::span<double> out);
}  // namespace avx2

}  // namespace gridwatch::kernels
