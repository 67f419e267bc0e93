#include "rsparse/thresholding.hpp"

#include <cmath>

#include "rsparse/errors.hpp"

namespace rsparse {

void ThresholdParam::validate() const {
  if (!(tau_x > 0.0)) throw DomainError("tau_x must be positive");
}

Mat threshold_matrix(const Mat& X, double tau_x) {
  ThresholdParam{tau_x}.validate();
  return X.unaryExpr([tau_x](double v) {
    return std::abs(v) <= tau_x ? v : std::copysign(tau_x, v);
  });
}

RegressionSample threshold_sample(const RegressionSample& sample, double tau_x) {
  return RegressionSample{sample.y, threshold_matrix(sample.X, tau_x)};
}

}  // namespace rsparse
