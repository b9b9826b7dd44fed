#pragma once

// Brute-force constrained maximum likelihood for one meter block, written
// directly from the per-hypothesis Gaussian models and independent of the
// library's closed forms. Costs are -2 log-likelihood without the
// lambda*log(2*pi) term:
//   none:    y_i ~ N(0, w)
//   fdi:     y_i ~ N(a, w),      a in [-1, -gamma] U [gamma, 1]
//   jamming: y_i ~ N(0, w + s),  s in [s_min, 1]
//   hybrid:  y_i ~ N(a, w + s)
// The bias is searched on a 1e-4 grid plus the analytic candidates (+-gamma
// and the sample mean when feasible); the variance for a given bias is the
// exact profile maximizer clamped to [s_min, 1].

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

struct MeterFit {
  std::array<double, 4> cost{};  // none, fdi, jamming, hybrid
  std::array<double, 4> a{};      // bias at the minimizer
  std::array<double, 4> s{};      // jamming variance at the minimizer
  int argmin = 0;                 // first minimal index in the order above
};

inline double gaussian_cost(const std::vector<double>& e, double a, double var) {
  double rss = 0.0;
  for (double x : e) rss += (x - a) * (x - a);
  return static_cast<double>(e.size()) * std::log(var) + rss / var;
}

inline double best_variance(const std::vector<double>& e, double a, double w, double s_min) {
  double rss = 0.0;
  for (double x : e) rss += (x - a) * (x - a);
  const double s = rss / static_cast<double>(e.size()) - w;
  return std::clamp(s, s_min, 1.0);
}

inline MeterFit fit_meter(const std::vector<double>& e, double w, double gamma, double s_min, double step = 1e-4) {
  MeterFit fit;
  const double inf = std::numeric_limits<double>::infinity();
  fit.cost = {inf, inf, inf, inf};

  fit.cost[0] = gaussian_cost(e, 0.0, w);

  const double s0 = best_variance(e, 0.0, w, s_min);
  fit.cost[2] = gaussian_cost(e, 0.0, w + s0);
  fit.s[2] = s0;

  double mean = 0.0;
  for (double x : e) mean += x;
  mean /= static_cast<double>(e.size());

  std::vector<double> candidates = {gamma, -gamma};
  if (std::abs(mean) >= gamma && std::abs(mean) <= 1.0) candidates.push_back(mean);
  const auto n = static_cast<long>(std::floor(1.0 / step));
  for (long i = -n; i <= n; ++i) {
    const double a = static_cast<double>(i) * step;
    if (std::abs(a) >= gamma) candidates.push_back(a);
  }
  for (double a : candidates) {
    const double cf = gaussian_cost(e, a, w);
    if (cf < fit.cost[1]) {
      fit.cost[1] = cf;
      fit.a[1] = a;
    }
    const double s = best_variance(e, a, w, s_min);
    const double cfj = gaussian_cost(e, a, w + s);
    if (cfj < fit.cost[3]) {
      fit.cost[3] = cfj;
      fit.a[3] = a;
      fit.s[3] = s;
    }
  }

  for (int h = 1; h < 4; ++h)
    if (fit.cost[h] < fit.cost[fit.argmin]) fit.argmin = h;
  return fit;
}

}  // namespace oracle
