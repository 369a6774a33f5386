#include "phtmpc/mapping/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phtmpc {

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (d * d / var + std::log(2.0 * std::numbers::pi * var));
}

}  // namespace

double expected_consistency(const ConsistencyParams& p) { return p.alpha / (p.alpha + p.beta); }

bool params_valid(const ConsistencyParams& p, const ConsistencyConfig& cfg) {
  const double eps = 1e-12;
  return std::isfinite(p.mu) && p.sigma >= cfg.sigma_min - eps && p.sigma <= cfg.delta_max + eps &&
         p.alpha >= cfg.param_floor - eps && p.alpha <= cfg.param_ceil + eps && p.beta >= cfg.param_floor - eps &&
         p.beta <= cfg.param_ceil + eps;
}

PosteriorMoments posterior_moments(const ConsistencyParams& prior, const MeasurementPair& m,
                                   const ConsistencyConfig& cfg) {
  if (m.s != 0 && m.s != 1) throw std::invalid_argument("semantic label must be 0 or 1");
  const double a = prior.alpha, b = prior.beta, s = m.s;
  const double var_prior = prior.sigma * prior.sigma;
  const double tau2 = cfg.tau * cfg.tau;
  const double delta = m.delta;

  // Inlier: Gaussian-Gaussian conjugacy in l, Beta exponents (1 + s, 1 - s) in v.
  const double a1 = a + 1.0 + s, b1 = b + 1.0 - s;
  const double log_w1 = log_normal_pdf(delta, prior.mu, var_prior + tau2) + log_beta(a1, b1) - log_beta(a, b);
  // Outlier: l untouched, Beta exponents (s, 2 - s).
  const double a2 = a + s, b2 = b + 2.0 - s;
  const double log_w2 = -std::log(2.0 * cfg.delta_max) + log_beta(a2, b2) - log_beta(a, b);

  const double top = std::max(log_w1, log_w2);
  const double e1 = std::exp(log_w1 - top), e2 = std::exp(log_w2 - top);
  const double w1 = e1 / (e1 + e2), w2 = 1.0 - w1;

  const double s1 = 1.0 / (1.0 / var_prior + 1.0 / tau2);
  const double m1 = s1 * (prior.mu / var_prior + delta / tau2);

  PosteriorMoments out;
  out.inlier_weight = w1;
  out.mean_l = w1 * m1 + w2 * prior.mu;
  const double second_l = w1 * (s1 + m1 * m1) + w2 * (var_prior + prior.mu * prior.mu);
  out.var_l = std::max(second_l - out.mean_l * out.mean_l, 0.0);

  const auto beta_m1 = [](double x, double y) { return x / (x + y); };
  const auto beta_m2 = [](double x, double y) { return x * (x + 1.0) / ((x + y) * (x + y + 1.0)); };
  out.mean_v = w1 * beta_m1(a1, b1) + w2 * beta_m1(a2, b2);
  out.mean_v2 = w1 * beta_m2(a1, b1) + w2 * beta_m2(a2, b2);
  return out;
}

BayesUpdate bayes_update(const ConsistencyParams& prior, const MeasurementPair& m, const ConsistencyConfig& cfg) {
  BayesUpdate out;
  MeasurementPair mm = m;
  if (std::abs(mm.delta) > cfg.delta_max) {
    mm.delta = std::clamp(mm.delta, -cfg.delta_max, cfg.delta_max);
    out.delta_clamped = true;
  }
  out.moments = posterior_moments(prior, mm, cfg);
  const auto& pm = out.moments;

  ConsistencyParams p;
  p.mu = pm.mean_l;
  p.sigma = std::sqrt(pm.var_l);
  if (p.sigma < cfg.sigma_min) {
    p.sigma = cfg.sigma_min;
    out.clamped = true;
  } else if (p.sigma > cfg.delta_max) {
    p.sigma = cfg.delta_max;
    out.clamped = true;
  }

  const double mean = pm.mean_v;
  const double var = pm.mean_v2 - mean * mean;
  if (var > 0.0 && pm.mean_v2 < mean) {
    const double common = (mean - pm.mean_v2) / var;
    p.alpha = mean * common;
    p.beta = (1.0 - mean) * common;
  } else {
    p.alpha = mean * cfg.param_ceil;
    p.beta = (1.0 - mean) * cfg.param_ceil;
    out.clamped = true;
  }
  const double largest = std::max(p.alpha, p.beta);
  if (largest > cfg.param_ceil) {
    const double scale = cfg.param_ceil / largest;
    p.alpha *= scale;
    p.beta *= scale;
    out.clamped = true;
  }
  if (p.alpha < cfg.param_floor) {
    p.alpha = cfg.param_floor;
    out.clamped = true;
  }
  if (p.beta < cfg.param_floor) {
    p.beta = cfg.param_floor;
    out.clamped = true;
  }
  out.params = p;
  return out;
}

}  // namespace phtmpc
