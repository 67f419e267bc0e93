#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsparse/core.hpp"

namespace rsparse {

enum class Family { kGaussian, kStudentT, kParetoSymmetric, kScaledRademacher };

/// Zero-mean, unit-variance base law. `shape` is the degrees of freedom for
/// student_t and the tail index for pareto_symmetric; both must exceed 4 so
/// the fourth moment is finite.
struct DistributionSpec {
  Family family = Family::kGaussian;
  double shape = 0.0;

  void validate() const;
  double kurtosis() const;          ///< E z^4 of the standardized law
  double directional_kurtosis() const;  ///< max(3, kurtosis): K^4 for i.i.d. coordinates
  double mean_abs() const;          ///< E|z| of the standardized law
  std::string name() const;
  static DistributionSpec parse(const std::string& text);  ///< "gaussian", "student_t:5", ...
};

/// Ground truth of a synthetic run.
struct TrueModel {
  Vec beta_star;
  Mat Sigma;
  int s = 0;
  double sigma = 0.0;  ///< E|xi| of the noise
  double K = 1.0;      ///< kurtosis constant, K^4 bounds directional kurtosis
  double beta_max = 0.0;

  void validate() const;
};

/// s nonzeros of magnitude `beta_magnitude` with random signs on a random support.
/// Sigma is Toeplitz rho^|i-j| (identity for rho = 0).
TrueModel make_true_model(long d, int s, double sigma, double K, double rho, double beta_magnitude,
                          std::uint64_t seed);

enum class ContaminationMode { kResponseGross, kCovariateLeverage, kCoordinated };

std::string to_string(ContaminationMode mode);
ContaminationMode parse_contamination_mode(const std::string& text);

struct ContaminationSpec {
  std::vector<long> outlier_set;  ///< sorted, distinct row indices
  ContaminationMode mode = ContaminationMode::kResponseGross;
  double magnitude = 1.0;

  long o() const { return static_cast<long>(outlier_set.size()); }
};

/// o distinct indices from {0..n-1}, sorted. Throws DomainError if o > n.
std::vector<long> draw_outlier_set(long n, long o, std::uint64_t seed);

/// Symmetric square root of a PSD matrix. Throws DomainError if not PSD.
Mat psd_sqrt(const Mat& Sigma);

/// x_i = Sigma^{1/2} z_i, y_i = x_i' beta* + xi_i with E|xi| = sigma.
RegressionSample sample_clean(const TrueModel& model, const DistributionSpec& dist_x,
                              const DistributionSpec& dist_xi, long n, std::uint64_t seed);

/// Corrupts the rows in spec.outlier_set:
///  response_gross      y_i += sqrt(n) * magnitude * (random sign)
///  covariate_leverage  X_i += magnitude * e_j, j the first coordinate off the support of beta*
///  coordinated         X_i += magnitude * b, y_i -= magnitude * ||beta*||, b = beta*/||beta*||,
///                      so the shifted rows point along -beta*
RegressionSample contaminate(const RegressionSample& sample, const ContaminationSpec& spec,
                             const TrueModel& model, std::uint64_t seed);

/// Max over coordinates and n_dirs random unit directions of mean<v,x>^4 / (mean<v,x>^2)^2
/// after centering. Directions with variance below 1e-12 are skipped; returns 0 if all are.
double empirical_kurtosis(const Mat& X, int n_dirs, std::uint64_t seed);

}  // namespace rsparse
