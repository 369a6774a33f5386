#pragma once

namespace phtmpc {

/// Gaussian (geometric change l) x Beta (consistency v) belief of one object.
struct ConsistencyParams {
  double mu = 0.0;
  double sigma = 1.0 / 3.0;
  double alpha = 1.0;
  double beta = 1.0;
};

struct MeasurementPair {
  double delta = 0.0;
  int s = 0;
};

struct ConsistencyConfig {
  double tau = 0.05;
  double delta_max = 1.0;
  double sigma_min = 1e-3;
  double param_floor = 0.5;
  double param_ceil = 200.0;
};

/// Moments of the exact (two-component) posterior before projection.
struct PosteriorMoments {
  double mean_l = 0.0;
  double var_l = 0.0;
  double mean_v = 0.0;
  double mean_v2 = 0.0;
  /// Posterior probability of the inlier component.
  double inlier_weight = 0.0;
};

struct BayesUpdate {
  ConsistencyParams params;
  PosteriorMoments moments;
  bool clamped = false;        ///< a floor/ceiling was applied
  bool delta_clamped = false;  ///< |delta| exceeded delta_max
};

double expected_consistency(const ConsistencyParams& p);

/// Posterior moments for the measurement likelihood
///   p(delta | l, v) = v N(delta; l, tau^2) + (1 - v) U(delta; -delta_max, delta_max)
///   p(s | v)        = v^s (1 - v)^(1 - s).
PosteriorMoments posterior_moments(const ConsistencyParams& prior, const MeasurementPair& m,
                                   const ConsistencyConfig& cfg);

/// Closed-form update followed by moment matching back to Gaussian x Beta.
BayesUpdate bayes_update(const ConsistencyParams& prior, const MeasurementPair& m, const ConsistencyConfig& cfg);

bool params_valid(const ConsistencyParams& p, const ConsistencyConfig& cfg);

}  // namespace phtmpc
