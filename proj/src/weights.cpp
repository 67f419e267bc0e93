#include "rsparse/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rsparse/errors.hpp"

namespace rsparse {

namespace {

// argmin ||w - v|| over {0 <= w <= cap, sum w = total}; requires n * cap >= total.
// phi(theta) = sum clamp(v - theta, 0, cap) is piecewise linear and nonincreasing
// with kinks at v_i - cap and v_i; locate the segment holding phi = total.
Vec project_box_sum(const Vec& v, double cap, double total) {
  const Eigen::Index n = v.size();
  auto phi = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::clamp(v[i] - theta, 0.0, cap);
    return s;
  };
  std::vector<double> knots;
  knots.reserve(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    knots.push_back(v[i] - cap);
    knots.push_back(v[i]);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // Largest knot with phi >= total (phi at the smallest knot is n * cap >= total).
  std::size_t lo = 0, hi = knots.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (phi(knots[mid]) >= total) lo = mid; else hi = mid - 1;
  }
  const double left = knots[lo];
  double theta = left;
  const double phi_left = phi(left);
  if (lo + 1 < knots.size() && phi_left > total) {
    const double right = knots[lo + 1];
    const double mid = 0.5 * (left + right);
    long free_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (v[i] - cap < mid && mid < v[i]) ++free_count;
    }
    if (free_count > 0) theta = left + (phi_left - total) / static_cast<double>(free_count);
    theta = std::min(theta, right);
  }
  return v.unaryExpr([&](double x) { return std::clamp(x - theta, 0.0, cap); });
}

double max_eigenvalue(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue solve failed");
  return es.eigenvalues().maxCoeff();
}

Mat clamp_entries(const Mat& A, double bound) {
  return A.cwiseMax(-bound).cwiseMin(bound);
}

Mat project_psd(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed in PSD projection");
  const Vec mu = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * mu.asDiagonal() * es.eigenvectors().transpose();
}

bool is_psd(const Mat& A, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace

void WeightParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  if (!(lambda_star > 0.0)) throw DomainError("lambda_star must be positive");
  if (!(tau_suc >= 0.0)) throw DomainError("tau_suc must be nonnegative");
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
}

bool WeightVector::satisfies(double cap) const {
  if (w.size() == 0) return false;
  return w.minCoeff() >= 0.0 && std::abs(w.sum() - 1.0) <= 1e-9 && w.maxCoeff() <= cap + 1e-12;
}

WeightVector project_capped_simplex(const Vec& v, double cap) {
  const double n = static_cast<double>(v.size());
  if (v.size() == 0) throw DomainError("cannot project an empty vector");
  if (!(cap > 0.0) || n * cap < 1.0 - 1e-12) {
    throw DomainError("capped simplex is empty: n * cap = " + std::to_string(n * cap) + " < 1");
  }
  return WeightVector{project_box_sum(v, std::min(cap, 1.0), 1.0)};
}

Mat project_psd_trace_ball(const Mat& A, double r2) {
  if (A.rows() != A.cols()) throw DomainError("project_psd_trace_ball: matrix must be square");
  if (!(r2 > 0.0)) throw DomainError("project_psd_trace_ball: r2 must be positive");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed in trace-ball projection");
  const Vec& lam = es.eigenvalues();
  Vec mu = lam.cwiseMax(0.0);
  if (mu.sum() > r2) mu = project_box_sum(lam, r2, r2);
  Mat out = es.eigenvectors() * mu.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double matrix_l1(const Mat& M) { return M.cwiseAbs().sum(); }

double inner_objective(const Mat& S, const Mat& M, double lambda_star) {
  return S.cwiseProduct(M).sum() - lambda_star * matrix_l1(M);
}

double dual_bound(const Mat& S, const Mat& U, double r2) {
  return r2 * std::max(max_eigenvalue(S - U), 0.0);
}

double closed_form_dual_bound(const Mat& S, double lambda_star, double r2) {
  double best = dual_bound(S, Mat::Zero(S.rows(), S.cols()), r2);
  // Any ||U||_inf <= lambda_star gives a valid bound; PSD is not needed for weak duality.
  const Mat clamped = clamp_entries(S, lambda_star);
  best = std::min(best, dual_bound(S, clamped, r2));
  // PSD-restricted candidate: project, re-clamp, re-project once, then validate.
  Mat U = project_psd(clamp_entries(project_psd(clamped), lambda_star));
  if (U.cwiseAbs().maxCoeff() <= lambda_star * (1.0 + 1e-12) && is_psd(U, 1e-10)) {
    best = std::min(best, dual_bound(S, U, r2));
  }
  return best;
}

InnerMaxResult inner_max(const Mat& S_in, const WeightParams& wp, const InnerMaxOptions& opts,
                         InnerWarmStart* warm) {
  wp.validate();
  if (S_in.rows() != S_in.cols()) throw DomainError("inner_max: S must be square");
  const Mat S = 0.5 * (S_in + S_in.transpose());
  const long d = S.rows();
  const double r2 = wp.radius * wp.radius;
  const double lam = wp.lambda_star;

  InnerMaxResult res;
  res.M = Mat::Zero(d, d);
  res.value = 0.0;
  res.upper_bound = closed_form_dual_bound(S, lam, r2);
  res.certificate_gap = res.upper_bound;
  if (res.certificate_gap <= opts.tol) {
    res.converged = true;
    return res;
  }

  // ADMM on  min -<S,M> + I(M in trace ball) + lam ||Z||_1  s.t.  M = Z.
  // rho * U always lies in lam * subdiff ||Z||_1, so it is a feasible dual point.
  Mat M, Z, U;
  double rho;
  if (warm && warm->rho > 0.0 && warm->M.rows() == d) {
    M = warm->M;
    Z = warm->Z;
    U = warm->U;
    rho = warm->rho;
  } else {
    rho = std::max(S.norm(), lam) / r2;
    M = Mat::Zero(d, d);
    Z = Mat::Zero(d, d);
    U = Mat::Zero(d, d);
  }

  int it = 0;
  for (it = 1; it <= opts.max_iter; ++it) {
    M = project_psd_trace_ball(Z - U + S / rho, r2);
    const Mat Z_prev = Z;
    const Mat V = M + U;
    Z = V.unaryExpr([t = lam / rho](double x) {
      const double a = std::abs(x) - t;
      return a > 0.0 ? std::copysign(a, x) : 0.0;
    });
    U += M - Z;

    const double value = inner_objective(S, M, lam);
    if (!std::isfinite(value)) throw NumericalFailure("inner_max: non-finite objective", it);
    if (value > res.value) {
      res.value = value;
      res.M = M;
    }

    const double primal = (M - Z).norm();
    const double dual = rho * (Z - Z_prev).norm();

    if (it % 5 == 0 || it == opts.max_iter) {
      const Mat Y = clamp_entries(rho * U, lam);
      res.upper_bound = std::min(res.upper_bound, dual_bound(S, Y, r2));
      res.certificate_gap = std::max(res.upper_bound - res.value, 0.0);
      if (res.certificate_gap <= opts.tol) {
        res.converged = true;
        break;
      }
    }

    // Residual balancing; U is scaled so rho * U is unchanged.
    if (primal > 10.0 * dual) {
      rho *= 2.0;
      U /= 2.0;
    } else if (dual > 10.0 * primal) {
      rho /= 2.0;
      U *= 2.0;
    }
  }
  res.iterations = std::min(it, opts.max_iter);
  res.certificate_gap = std::max(res.upper_bound - res.value, 0.0);
  if (warm) *warm = InnerWarmStart{M, Z, U, rho};
  return res;
}

Mat weighted_scatter(const Mat& X, const Vec& w) {
  if (X.rows() != w.size()) throw DomainError("weighted_scatter: weight length does not match rows");
  return X.transpose() * w.asDiagonal() * X;
}

ComputeWeightResult compute_weights(const Mat& X_tilde, const WeightParams& wp, const WeightSolverOptions& opts) {
  wp.validate();
  const long n = X_tilde.rows();
  if (n < 1) throw DomainError("compute_weights: no samples");
  if (static_cast<double>(n) * (1.0 - wp.epsilon) < 1.0) {
    throw DomainError("compute_weights: n (1 - epsilon) must be at least 1");
  }
  if (!X_tilde.allFinite()) throw DomainError("compute_weights: non-finite covariates");

  const double cap = wp.cap(n);
  const bool uniform_only = static_cast<double>(n) * cap <= 1.0 + 1e-12;

  InnerWarmStart warm;
  auto evaluate = [&](const Vec& w) { return inner_max(weighted_scatter(X_tilde, w), wp, opts.inner, &warm); };
  auto subgradient = [&](const Mat& M) -> Vec { return ((X_tilde * M).cwiseProduct(X_tilde)).rowwise().sum(); };

  ComputeWeightResult out;
  out.tau_suc = wp.tau_suc;
  Vec w = Vec::Constant(n, 1.0 / static_cast<double>(n));
  InnerMaxResult cur = evaluate(w);
  out.uniform_value = cur.upper_bound;

  Vec best_w = w;
  InnerMaxResult best = cur;
  int outer = 0;
  if (!uniform_only && best.upper_bound > wp.tau_suc) {
    // Projected subgradient with Polyak steps aimed at tau_suc; the step
    // multiplier halves whenever progress stalls.
    double gamma = 1.0;
    int stall = 0;
    double checkpoint = best.upper_bound;
    const double overshoot = 0.05 * (out.uniform_value - wp.tau_suc) + 1e-12 * (1.0 + std::abs(wp.tau_suc));
    for (outer = 1; outer <= opts.max_outer; ++outer) {
      Vec g = subgradient(cur.M);
      g.array() -= g.mean();
      const double gnorm2 = g.squaredNorm();
      if (gnorm2 <= 0.0) break;
      // Aim a little below tau_suc so the steps do not vanish as the bound approaches it.
      const double gap = std::max(cur.value - wp.tau_suc, 0.0) + overshoot;
      w = project_capped_simplex(w - gamma * (gap / gnorm2) * g, cap).w;
      cur = evaluate(w);
      if (cur.upper_bound < best.upper_bound - 1e-12 * (1.0 + std::abs(best.upper_bound))) {
        best = cur;
        best_w = w;
        stall = 0;
      } else if (++stall >= 10) {
        gamma *= 0.5;
        stall = 0;
        w = best_w;
        cur = best;
        if (gamma < 1e-8) break;
      }
      if (best.upper_bound <= wp.tau_suc) break;
      // Give up once a window of iterations no longer moves the certified value.
      if (outer % 50 == 0) {
        if (checkpoint - best.upper_bound <= 1e-6 * (1.0 + std::abs(checkpoint))) break;
        checkpoint = best.upper_bound;
      }
    }
  }
  out.outer_iterations = std::min(outer, opts.max_outer);
  out.weights = WeightVector{best_w};
  out.value = best.value;
  out.upper_bound = best.upper_bound;
  out.success = best.upper_bound <= wp.tau_suc;
  return out;
}

}  // namespace rsparse
