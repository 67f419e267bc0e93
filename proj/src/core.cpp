#include "rsparse/core.hpp"

#include <cmath>
#include <string>

#include "rsparse/errors.hpp"

namespace rsparse {

void HuberParams::validate() const {
  if (!(lambda_o > 0.0) || !std::isfinite(lambda_o)) {
    throw DomainError("lambda_o must be positive and finite");
  }
  if (!(lambda_s >= 0.0) || !std::isfinite(lambda_s)) {
    throw DomainError("lambda_s must be nonnegative and finite");
  }
}

double HuberParams::knee(long n) const {
  return lambda_o * std::sqrt(static_cast<double>(n));
}

void RegressionSample::validate() const {
  if (y.size() == 0 || X.cols() == 0) {
    throw DomainError("sample must have n >= 1 and d >= 1");
  }
  if (X.rows() != y.size()) {
    throw DomainError("design has " + std::to_string(X.rows()) + " rows but y has " +
                      std::to_string(y.size()) + " entries");
  }
  if (!y.allFinite() || !X.allFinite()) {
    throw DomainError("sample contains non-finite entries");
  }
}

double huber_loss(double t) {
  const double a = std::abs(t);
  return a <= 1.0 ? 0.5 * t * t : a - 0.5;
}

double huber_score(double t) {
  if (t > 1.0) return 1.0;
  if (t < -1.0) return -1.0;
  return t;
}

Vec soft_threshold(const Vec& v, double kappa) {
  Vec out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double a = std::abs(v[j]) - kappa;
    out[j] = a > 0.0 ? std::copysign(a, v[j]) : 0.0;
  }
  return out;
}

double sigma_norm(const Vec& v, const Mat& Sigma) {
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() != v.size()) {
    throw DomainError("sigma_norm: dimension mismatch");
  }
  const double q = v.dot(Sigma * v);
  const double scale = v.squaredNorm() * Sigma.cwiseAbs().maxCoeff();
  if (q < -1e-10 * (1.0 + scale)) {
    throw DomainError("sigma_norm: covariance is not positive semidefinite");
  }
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace rsparse
