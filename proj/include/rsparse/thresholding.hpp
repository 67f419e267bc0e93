#pragma once

#include "rsparse/core.hpp"

namespace rsparse {

/// Coordinate clipping level for covariates.
struct ThresholdParam {
  double tau_x = 1.0;

  void validate() const;
};

/// Entrywise sgn(x) * min(|x|, tau_x). Responses are never touched.
Mat threshold_matrix(const Mat& X, double tau_x);

/// Convenience: the sample with thresholded covariates and the original y.
RegressionSample threshold_sample(const RegressionSample& sample, double tau_x);

}  // namespace rsparse
