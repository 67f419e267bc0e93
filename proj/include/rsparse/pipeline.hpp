#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsparse/core.hpp"
#include "rsparse/huber_solver.hpp"
#include "rsparse/weights.hpp"

namespace rsparse {

/// Free constants of the tuning formulas. Defaults satisfy the guarantee's side
/// conditions; `c_o` is the numerical constant in lambda_o sqrt(n) = c_o K^4 (sigma + 1).
struct TheoryConstants {
  double c_s = 16.0;
  double c_r = 6.0;
  double c_re = 3.0;
  double kappa = 1.0;
  double kappa_l = 1.0;
  std::optional<double> c_star;  ///< unset: 1/(1 - epsilon), the smallest admissible value
  double c_eps = 1.0;
  double delta = 0.05;
  double c_o = 18.0;

  void validate() const;
};

/// Distribution-level constants the formulas need; unknown in practice.
struct ModelConstants {
  double K = 1.0;
  double sigma = 0.0;
  int s = 1;
  double sigma_half_op = 1.0;  ///< ||Sigma^{1/2}||_op
  double sigma_op = 1.0;       ///< ||Sigma||_op
  std::optional<double> beta_max;  ///< c_beta, only used by the condition report
  std::optional<double> beta_l1;   ///< ||beta*||_1, only used by the condition report
};

struct RadiusSet {
  double r_sigma = 0.0;
  double r_1 = 0.0;
  double r_2 = 0.0;
  double c_r1 = 0.0;
  double c_r2 = 0.0;
};

struct Tuning {
  long n = 0, d = 0, o = 0;
  double log_term = 0.0;  ///< log(d / delta)
  double tau_x = 0.0;
  HuberParams huber;
  RadiusSet radii;
  double epsilon = 0.0;
  double c_star_prime = 1.0;
  std::optional<WeightParams> weights;  ///< present for the contamination-aware tuning
};

/// lambda_o sqrt(n) = c_o K^4 (sigma + 1), tau_x = sqrt(n / log(d/delta)),
/// lambda_s = c_s (c_re+1)/(c_re-1) lambda_o sqrt(n) sqrt(log(d/delta)/n).
Tuning tuning_no_outliers(long n, long d, const ModelConstants& mc, const TheoryConstants& tc);

/// Contamination-aware tuning: fourth-root tau_x, the outlier term in lambda_s,
/// lambda_star, tau_suc = ||Sigma||_op r_2^2 / (1 - epsilon) and radius r = r_2.
Tuning tuning_with_outliers(long n, long d, long o, const ModelConstants& mc, const TheoryConstants& tc);

struct ConditionCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool lower = false;  ///< true: requires value >= bound; false: value <= bound
  bool ok() const { return lower ? value >= bound : value <= bound; }
};

/// Literal evaluation of the side conditions of the guarantee the tuning targets.
/// Entries that need c_beta or ||beta*||_1 are skipped when those are unset.
std::vector<ConditionCheck> condition_report(const Tuning& t, const ModelConstants& mc, const TheoryConstants& tc);

/// How estimator II feeds weights into the final regression.
enum class WeightScaling {
  kUnitMean,  ///< n * w_i, so uniform weights leave the data unchanged
  kRaw,       ///< w_i as literally written
};

/// "unit_mean" or "raw"; throws DomainError otherwise.
WeightScaling parse_weight_scaling(const std::string& text);

struct EstimateOptions {
  SolverOptions solver;
  WeightSolverOptions weight_solver;
  WeightScaling scaling = WeightScaling::kUnitMean;
};

struct EstimateReport {
  Vec beta_hat;
  FitResult fit;
  Tuning tuning;
  bool contamination_aware = false;
  std::optional<WeightVector> weights;
  std::optional<double> weight_value;
  std::optional<ComputeWeightResult> weight_diagnostics;
  bool weight_fail = false;
  std::vector<ConditionCheck> conditions;
  std::string constants_source = "supplied";
};

/// Threshold covariates, then penalized Huber regression.
EstimateReport estimate_I(const RegressionSample& sample, const Tuning& tuning, const EstimateOptions& opts = {});

/// Threshold, reweight, then penalized Huber regression on the reweighted sample.
/// A weight-stage FAIL is reported (weight_fail) with a uniform-weight fallback fit.
EstimateReport estimate_II(const RegressionSample& sample, const Tuning& tuning, const EstimateOptions& opts = {});

/// The reweighted sample {c_i y_i, c_i x_i}; uniform weights under unit-mean
/// scaling return the input unchanged.
RegressionSample reweight_sample(const RegressionSample& sample, const Vec& w, WeightScaling scaling);

/// Plug-in constants for real data: K from empirical kurtosis, sigma as the median
/// absolute residual of an unpenalized Huber fit, operator norms from the
/// thresholded sample covariance. `s` must still be supplied.
ModelConstants estimate_model_constants(const RegressionSample& sample, int s, std::uint64_t seed);

/// kappa_l^2 by support enumeration, falling back to lambda_min(Sigma) (a valid
/// lower bound) when enumeration is too large. Sets `exact` accordingly.
double sparse_eigen_floor(const Mat& Sigma, int s, bool* exact = nullptr);

/// Operator norms of Sigma and Sigma^{1/2}.
std::pair<double, double> covariance_norms(const Mat& Sigma);

}  // namespace rsparse
