#pragma once

#include <optional>

#include "rsparse/core.hpp"

namespace rsparse {

/// Tuning of the sample-reweighting step.
struct WeightParams {
  double lambda_star = 1.0;  ///< entrywise l1 penalty on M
  double tau_suc = 1.0;      ///< success threshold on the optimal value
  double epsilon = 0.0;      ///< contamination bound, weights capped at 1/(n(1-epsilon))
  double radius = 1.0;       ///< trace-ball radius r, Tr(M) <= r^2

  void validate() const;
  double cap(long n) const { return 1.0 / (static_cast<double>(n) * (1.0 - epsilon)); }
};

/// Element of the capped probability simplex.
struct WeightVector {
  Vec w;

  /// Checks w >= 0, sum(w) = 1 within 1e-9 and max(w) <= cap + 1e-12.
  bool satisfies(double cap) const;
};

struct InnerMaxResult {
  Mat M;                       ///< feasible maximizer estimate, PSD with Tr(M) <= r^2
  double value = 0.0;          ///< exact objective <S, M> - lambda_star ||M||_1 at M
  double upper_bound = 0.0;    ///< weak-duality bound r^2 [lambda_max(S - U)]_+
  double certificate_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// ADMM state carried between successive inner solves on nearby S.
struct InnerWarmStart {
  Mat M, Z, U;
  double rho = 0.0;
};

struct InnerMaxOptions {
  double tol = 1e-6;  ///< absolute certificate gap
  int max_iter = 5000;
};

struct WeightSolverOptions {
  int max_outer = 2000;
  InnerMaxOptions inner{1e-7, 3000};
};

struct ComputeWeightResult {
  bool success = false;
  WeightVector weights;        ///< best weights found (also on failure, for diagnostics)
  double value = 0.0;          ///< inner value at the returned weights
  double upper_bound = 0.0;    ///< certified bound on f(weights); the success test uses it
  double uniform_value = 0.0;  ///< certified bound on f(uniform)
  double tau_suc = 0.0;
  int outer_iterations = 0;
};

/// Euclidean projection onto {0 <= w <= cap, sum w = 1}. Exact breakpoint search.
/// Throws DomainError when n * cap < 1.
WeightVector project_capped_simplex(const Vec& v, double cap);

/// Frobenius projection of a symmetric matrix onto {M PSD, Tr(M) <= r2}.
Mat project_psd_trace_ball(const Mat& A, double r2);

/// Entrywise l1 norm.
double matrix_l1(const Mat& M);

/// <S, M> - lambda_star ||M||_1
double inner_objective(const Mat& S, const Mat& M, double lambda_star);

/// Upper bound r2 * [lambda_max(S - U)]_+ valid for any ||U||_inf <= lambda_star.
double dual_bound(const Mat& S, const Mat& U, double r2);

/// Best of the closed-form dual candidates (U = 0, clamp of S, PSD-projected clamp).
double closed_form_dual_bound(const Mat& S, double lambda_star, double r2);

/// max over {M PSD, Tr(M) <= r^2} of <S, M> - lambda_star ||M||_1.
InnerMaxResult inner_max(const Mat& S, const WeightParams& wp, const InnerMaxOptions& opts = {},
                         InnerWarmStart* warm = nullptr);

/// S(w) = sum_i w_i x_i x_i'
Mat weighted_scatter(const Mat& X, const Vec& w);

/// Minimizes f(w) = inner_max(S(w)) over the capped simplex, exiting as soon as
/// the certified value drops to tau_suc. Returns success = false (FAIL) otherwise.
ComputeWeightResult compute_weights(const Mat& X_tilde, const WeightParams& wp,
                                    const WeightSolverOptions& opts = {});

}  // namespace rsparse
