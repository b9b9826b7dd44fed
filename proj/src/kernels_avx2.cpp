#include <immintrin.h>

#include "gridwatch/kernels.hpp"

namespace gridwatch::kernels::avx2 {

void residual_stats(std::span<const double> y, std::span<const double> pred, std::size_t lambda, double gamma,
                    const ResidualSums& out) {
  const std::size_t meters = pred.size();
  const double lam = static_cast<double>(lambda);
  const __m256d g = _mm256_set1_pd(gamma);
  const __m256d vlam = _mm256_set1_pd(lam);
  const int stride = static_cast<int>(lambda);
  const __m128i lane_offsets = _mm_setr_epi32(0, stride, 2 * stride, 3 * stride);

  std::size_t k = 0;
  for (; k + 4 <= meters; k += 4) {
    const double* base = y.data() + k * lambda;
    const __m256d p = _mm256_loadu_pd(pred.data() + k);
    __m256d d = _mm256_setzero_pd(), z = _mm256_setzero_pd();
    __m256d r = _mm256_setzero_pd(), w = _mm256_setzero_pd();
    for (std::size_t i = 0; i < lambda; ++i) {
      const __m256d yi = _mm256_i32gather_pd(base + i, lane_offsets, 8);
      const __m256d e = _mm256_sub_pd(yi, p);
      d = _mm256_add_pd(d, e);
      z = _mm256_add_pd(z, _mm256_mul_pd(e, e));
      const __m256d ep = _mm256_add_pd(e, g);
      r = _mm256_add_pd(r, _mm256_mul_pd(ep, ep));
      const __m256d em = _mm256_sub_pd(e, g);
      w = _mm256_add_pd(w, _mm256_mul_pd(em, em));
    }
    const __m256d mean = _mm256_div_pd(d, vlam);
    __m256d c = _mm256_setzero_pd();
    for (std::size_t i = 0; i < lambda; ++i) {
      const __m256d yi = _mm256_i32gather_pd(base + i, lane_offsets, 8);
      const __m256d q = _mm256_sub_pd(_mm256_sub_pd(yi, p), mean);
      c = _mm256_add_pd(c, _mm256_mul_pd(q, q));
    }
    _mm256_storeu_pd(out.delta.data() + k, d);
    _mm256_storeu_pd(out.zeta.data() + k, z);
    _mm256_storeu_pd(out.varrho.data() + k, r);
    _mm256_storeu_pd(out.varpi.data() + k, w);
    _mm256_storeu_pd(out.centered.data() + k, c);
  }
  if (k < meters) {
    const std::size_t rest = meters - k;
    const ResidualSums tail{out.delta.subspan(k, rest), out.zeta.subspan(k, rest), out.varrho.subspan(k, rest),
                            out.varpi.subspan(k, rest), out.centered.subspan(k, rest)};
    scalar::residual_stats(y.subspan(k * lambda, rest * lambda), pred.subspan(k, rest), lambda, gamma, tail);
  }
}

void weighted_gram(std::span<const double> rows, std::span<const double> weights, std::size_t dim,
                   std::span<double> out) {
  for (std::size_t i = 0; i < dim * dim; ++i) out[i] = 0.0;
  const std::size_t meters = weights.size();
  const std::size_t vec_end = dim - dim % 4;
  for (std::size_t k = 0; k < meters; ++k) {
    const double* row = rows.data() + k * dim;
    const double wk = weights[k];
    for (std::size_t i = 0; i < dim; ++i) {
      const double a = wk * row[i];
      const __m256d va = _mm256_set1_pd(a);
      double* o = out.data() + i * dim;
      std::size_t j = 0;
      for (; j < vec_end; j += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(row + j));
        _mm256_storeu_pd(o + j, _mm256_add_pd(_mm256_loadu_pd(o + j), prod));
      }
      for (; j < dim; ++j) o[j] = o[j] + a * row[j];
    }
  }
}

}  // namespace gridwatch::kernels::avx2
