#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rsparse/core.hpp"

namespace rsparse {

struct ErrorTriple {
  double err_l1 = 0.0;
  double err_l2 = 0.0;
  double err_sigma = 0.0;
};

ErrorTriple error_metrics(const Vec& beta_hat, const Vec& beta_star, const Mat& Sigma);

/// kappa_l^2: min over supports J with |J| = s of lambda_min(Sigma_JJ).
/// Throws CapacityError when C(d, s) exceeds max_supports.
double sparse_min_eigen(const Mat& Sigma, int s, double max_supports = 1e6);

/// Sampled estimate of the restricted-eigenvalue constant kappa: the minimum of
/// ||Sigma^{1/2} v|| / ||v_J|| over sampled cone vectors ||v_{J^c}||_1 <= c_re ||v_J||_1
/// across all supports |J| = s. Sampling cannot certify the infimum, so the
/// result is biased upward relative to the true kappa.
double re_lower_bound(const Mat& Sigma, int s, double c_re, int n_samples, std::uint64_t seed,
                      double max_supports = 1e6);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (log x, log err).
RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs);

/// Number of s-subsets of d items, as a double.
double binomial(long d, long s);

}  // namespace rsparse
