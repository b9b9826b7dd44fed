#include "gridwatch/kernels.hpp"

namespace gridwatch::kernels::scalar {

void residual_stats(std::span<const double> y, std::span<const double> pred, std::size_t lambda, double gamma,
                    const ResidualSums& out) {
  const std::size_t meters = pred.size();
  const double lam = static_cast<double>(lambda);
  for (std::size_t k = 0; k < meters; ++k) {
    const double* yk = y.data() + k * lambda;
    const double p = pred[k];
    double d = 0.0, z = 0.0, r = 0.0, w = 0.0;
    for (std::size_t i = 0; i < lambda; ++i) {
      const double e = yk[i] - p;
      d = d + e;
      z = z + e * e;
      const double ep = e + gamma;
      r = r + ep * ep;
      const double em = e - gamma;
      w = w + em * em;
    }
    const double mean = d / lam;
    double c = 0.0;
    for (std::size_t i = 0; i < lambda; ++i) {
      const double q = (yk[i] - p) - mean;
      c = c + q * q;
    }
    out.delta[k] = d;
    out.zeta[k] = z;
    out.varrho[k] = r;
    out.varpi[k] = w;
    out.centered[k] = c;
  }
}

void weighted_gram(std::span<const double> rows, std::span<const double> weights, std::size_t dim,
                   std::span<double> out) {
  for (std::size_t i = 0; i < dim * dim; ++i) out[i] = 0.0;
  const std::size_t meters = weights.size();
  for (std::size_t k = 0; k < meters; ++k) {
    const double* row = rows.data() + k * dim;
    const double wk = weights[k];
    for (std::size_t i = 0; i < dim; ++i) {
      const double a = wk * row[i];
      double* o = out.data() + i * dim;
      for (std::size_t j = 0; j < dim; ++j) o[j] = o[j] + a * row[j];
    }
  }
}

}  // namespace gridwatch::kernels::scalar
