#pragma once

#include <Eigen/Dense>

namespace rsparse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Huber scale multiplier and l1 penalty level of the penalized Huber program.
struct HuberParams {
  double lambda_o = 1.0;
  double lambda_s = 0.0;

  /// Throws DomainError unless lambda_o > 0 and lambda_s >= 0.
  void validate() const;
  /// The residual scale at which the Huber loss turns linear.
  double knee(long n) const;
};

/// Observed responses and design; rows of X pair with entries of y.
struct RegressionSample {
  Vec y;
  Mat X;

  long n() const { return static_cast<long>(y.size()); }
  long d() const { return static_cast<long>(X.cols()); }

  /// Throws DomainError on shape mismatch, empty data or non-finite entries.
  void validate() const;
};

// H(t) = t^2/2 on |t| <= 1, |t| - 1/2 outside.
double huber_loss(double t);

// Exact derivative of H: t on |t| <= 1, sgn(t) outside.
double huber_score(double t);

Vec soft_threshold(const Vec& v, double kappa);

/// sqrt(v' Sigma v). Throws DomainError if the quadratic form is negative
/// beyond rounding, which means Sigma is not PSD.
double sigma_norm(const Vec& v, const Mat& Sigma);

}  // namespace rsparse
