#pragma once

// Brute-force posterior moments of the (l, v) belief on a tensor Simpson grid.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

struct Belief {
  double mu = 0.0;
  double sigma = 1.0 / 3.0;
  double alpha = 1.0;
  double beta = 1.0;
};

struct QuadMoments {
  double mean_l = 0.0;
  double var_l = 0.0;
  double mean_v = 0.0;
  double mean_v2 = 0.0;
  double inlier_weight = 0.0;
};

inline std::vector<double> simpson_weights(int n, double h) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& x : w) x *= h / 3.0;
  return w;
}

// n must be odd. The l-range covers the prior and the inlier product
// component by 10 standard deviations each.
inline QuadMoments quadrature_moments(const Belief& b, double delta, int s, double tau, double delta_max,
                                      int n = 2001) {
  const double s2 = b.sigma * b.sigma, t2 = tau * tau;
  const double prod_mean = (b.mu * t2 + delta * s2) / (s2 + t2);
  const double prod_sd = std::sqrt(s2 * t2 / (s2 + t2));
  const double lo = std::min(b.mu - 10.0 * b.sigma, prod_mean - 10.0 * prod_sd);
  const double hi = std::max(b.mu + 10.0 * b.sigma, prod_mean + 10.0 * prod_sd);
  const double hl = (hi - lo) / (n - 1), hv = 1.0 / (n - 1);
  const auto wl = simpson_weights(n, hl), wv = simpson_weights(n, hv);
  const double uniform = 1.0 / (2.0 * delta_max);
  const bool in_support = std::abs(delta) <= delta_max;

  std::vector<double> l(static_cast<size_t>(n)), prior_l(l.size()), lik_in(l.size());
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * hl;
    l[static_cast<size_t>(i)] = x;
    prior_l[static_cast<size_t>(i)] =
        wl[static_cast<size_t>(i)] * std::exp(-0.5 * (x - b.mu) * (x - b.mu) / s2) / (b.sigma * std::sqrt(2.0 * std::numbers::pi));
    lik_in[static_cast<size_t>(i)] =
        std::exp(-0.5 * (delta - x) * (delta - x) / t2) / (tau * std::sqrt(2.0 * std::numbers::pi));
  }
  const double log_norm = std::lgamma(b.alpha + b.beta) - std::lgamma(b.alpha) - std::lgamma(b.beta);
  std::vector<double> v(static_cast<size_t>(n)), prior_v(v.size());
  for (int j = 0; j < n; ++j) {
    const double x = j * hv;
    v[static_cast<size_t>(j)] = x;
    double dens = 0.0;
    const double ls = s ? std::log(x) : std::log1p(-x);
    if (x > 0.0 && x < 1.0) dens = std::exp(log_norm + (b.alpha - 1.0) * std::log(x) + (b.beta - 1.0) * std::log1p(-x) + ls);
    else if (x == 0.0 && b.alpha == 1.0 && !s) dens = std::exp(log_norm);
    else if (x == 1.0 && b.beta == 1.0 && s) dens = std::exp(log_norm);
    prior_v[static_cast<size_t>(j)] = wv[static_cast<size_t>(j)] * dens;
  }

  double z = 0.0, sl = 0.0, sl2 = 0.0, sv = 0.0, sv2 = 0.0, sin = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pl = prior_l[static_cast<size_t>(i)], li = lik_in[static_cast<size_t>(i)];
    const double x = l[static_cast<size_t>(i)];
    double row = 0.0, row_v = 0.0, row_v2 = 0.0, row_in = 0.0;
    for (int j = 0; j < n; ++j) {
      const double vj = v[static_cast<size_t>(j)];
      const double in = vj * li;
      const double out = in_support ? (1.0 - vj) * uniform : 0.0;
      const double w = prior_v[static_cast<size_t>(j)] * (in + out);
      row += w;
      row_v += w * vj;
      row_v2 += w * vj * vj;
      row_in += prior_v[static_cast<size_t>(j)] * in;
    }
    z += pl * row;
    sl += pl * row * x;
    sl2 += pl * row * x * x;
    sv += pl * row_v;
    sv2 += pl * row_v2;
    sin += pl * row_in;
  }
  QuadMoments m;
  m.mean_l = sl / z;
  m.var_l = sl2 / z - m.mean_l * m.mean_l;
  m.mean_v = sv / z;
  m.mean_v2 = sv2 / z;
  m.inlier_weight = sin / z;
  return m;
}

// Gaussian x Beta moment matching, no floors.
inline Belief project(const QuadMoments& m) {
  Belief b;
  b.mu = m.mean_l;
  b.sigma = std::sqrt(std::max(m.var_l, 0.0));
  const double var_v = m.mean_v2 - m.mean_v * m.mean_v;
  const double common = m.mean_v * (1.0 - m.mean_v) / var_v - 1.0;
  b.alpha = m.mean_v * common;
  b.beta = (1.0 - m.mean_v) * common;
  return b;
}

}  // namespace oracle
