#pragma once

#include <optional>

#include "rsparse/core.hpp"

namespace rsparse {

enum class StepRule { kLipschitz, kBacktracking };

struct SolverOptions {
  int max_iter = 20000;
  /// Stationarity tolerance. Unset means 1e-8 * (1 + ||X'y||_inf / n).
  std::optional<double> tol_kkt;
  StepRule step_rule = StepRule::kLipschitz;
  bool restart = true;

  void validate() const;
};

struct FitResult {
  Vec beta_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// sum_i lambda_o^2 H((y_i - x_i'beta) / (lambda_o sqrt(n))) + lambda_s ||beta||_1
double huber_objective(const Vec& beta, const RegressionSample& data, const HuberParams& hp);

/// Gradient of the smooth (Huber) part:
/// -(lambda_o / sqrt(n)) sum_i h((y_i - x_i'beta) / (lambda_o sqrt(n))) x_i
Vec huber_gradient(const Vec& beta, const RegressionSample& data, const HuberParams& hp);

/// (1/(2n)) ||y - X beta||^2 + lambda_s ||beta||_1
double lasso_objective(const Vec& beta, const RegressionSample& data, double lambda_s);
Vec lasso_gradient(const Vec& beta, const RegressionSample& data);

/// l_inf distance of -grad from lambda_s * subdifferential(||.||_1) at beta.
double kkt_residual(const Vec& beta, const Vec& grad, double lambda_s);

/// Upper bound lambda_max(X'X)/n on the Lipschitz constant of either smooth part.
double lipschitz_bound(const Mat& X);

/// Scale-aware default stationarity tolerance for a sample.
double default_tol_kkt(const RegressionSample& data);

/// Monotone FISTA with gradient-based adaptive restart, started at beta = 0.
/// Throws NumericalFailure (carrying the iteration) if the objective goes non-finite.
FitResult fit_penalized_huber(const RegressionSample& data, const HuberParams& hp,
                              const SolverOptions& opts = {});

FitResult fit_lasso_baseline(const RegressionSample& data, double lambda_s,
                             const SolverOptions& opts = {});

}  // namespace rsparse
