#include "rsparse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rsparse/errors.hpp"

namespace rsparse {

namespace {

// Visits every size-s subset of {0..d-1} in lexicographic order.
template <class Fn>
void for_each_support(long d, long s, Fn&& fn) {
  std::vector<long> idx(s);
  for (long k = 0; k < s; ++k) idx[k] = k;
  while (true) {
    fn(idx);
    long k = s - 1;
    while (k >= 0 && idx[k] == d - s + k) --k;
    if (k < 0) return;
    ++idx[k];
    for (long m = k + 1; m < s; ++m) idx[m] = idx[m - 1] + 1;
  }
}

double min_eigen_of(const Mat& Sigma, const std::vector<long>& J) {
  const long s = static_cast<long>(J.size());
  Mat sub(s, s);
  for (long a = 0; a < s; ++a)
    for (long b = 0; b < s; ++b) sub(a, b) = Sigma(J[a], J[b]);
  Eigen::SelfAdjointEigenSolver<Mat> es(sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue solve failed on a principal submatrix");
  return es.eigenvalues().minCoeff();
}

void check_enumeration(const Mat& Sigma, int s, double max_supports) {
  if (Sigma.rows() != Sigma.cols()) throw DomainError("Sigma must be square");
  if (s < 1 || s > Sigma.rows()) throw DomainError("need 1 <= s <= d");
  const double count = binomial(Sigma.rows(), s);
  if (count > max_supports) {
    throw CapacityError("support enumeration needs C(" + std::to_string(Sigma.rows()) + ", " + std::to_string(s) +
                        ") = " + std::to_string(count) + " subsets; use a sampled lower bound instead");
  }
}

}  // namespace

double binomial(long d, long s) {
  if (s < 0 || s > d) return 0.0;
  s = std::min(s, d - s);
  double out = 1.0;
  for (long k = 1; k <= s; ++k) out = out * static_cast<double>(d - s + k) / static_cast<double>(k);
  return std::round(out);
}

ErrorTriple error_metrics(const Vec& beta_hat, const Vec& beta_star, const Mat& Sigma) {
  if (beta_hat.size() != beta_star.size()) throw DomainError("error_metrics: coefficient lengths differ");
  const Vec diff = beta_hat - beta_star;
  return {diff.lpNorm<1>(), diff.norm(), sigma_norm(diff, Sigma)};
}

double sparse_min_eigen(const Mat& Sigma, int s, double max_supports) {
  check_enumeration(Sigma, s, max_supports);
  double best = std::numeric_limits<double>::infinity();
  for_each_support(Sigma.rows(), s, [&](const std::vector<long>& J) { best = std::min(best, min_eigen_of(Sigma, J)); });
  return std::max(best, 0.0);
}

double re_lower_bound(const Mat& Sigma, int s, double c_re, int n_samples, std::uint64_t seed, double max_supports) {
  check_enumeration(Sigma, s, max_supports);
  if (!(c_re > 0.0)) throw DomainError("c_RE must be positive");
  const long d = Sigma.rows();
  const double supports = binomial(d, s);
  const long per_support = std::max<long>(1, static_cast<long>(std::ceil(n_samples / supports)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double best = std::numeric_limits<double>::infinity();
  auto quad = [&](const Vec& v) { return std::sqrt(std::max(v.dot(Sigma * v), 0.0)); };

  for_each_support(d, s, [&](const std::vector<long>& J) {
    // v_{J^c} = 0 is in the cone and gives sqrt(lambda_min(Sigma_JJ)) exactly.
    best = std::min(best, std::sqrt(std::max(min_eigen_of(Sigma, J), 0.0)));
    std::vector<bool> inJ(d, false);
    for (long j : J) inJ[j] = true;
    for (long k = 0; k < per_support; ++k) {
      Vec v = Vec::Zero(d);
      for (long j : J) v[j] = normal(rng);
      const double vj_l1 = v.lpNorm<1>();
      const double vj_l2 = v.norm();
      if (vj_l2 == 0.0) continue;
      Vec off = Vec::Zero(d);
      for (long j = 0; j < d; ++j) {
        if (!inJ[j]) off[j] = normal(rng);
      }
      const double off_l1 = off.lpNorm<1>();
      if (off_l1 > 0.0) {
        // Half the draws sit on the cone boundary, where the minimum tends to live.
        const double t = (k % 2 == 0) ? 1.0 : unif(rng);
        v += off * (t * c_re * vj_l1 / off_l1);
      }
      best = std::min(best, quad(v) / vj_l2);
    }
  });
  return best;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw DomainError("rate_fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, e] : pairs) {
    if (!(x > 0.0) || !(e > 0.0)) throw DomainError("rate_fit inputs must be positive");
    const double lx = std::log(x), ly = std::log(e);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(pairs.size());
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) throw DomainError("rate_fit needs at least two distinct x values");
  const double slope = (m * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / m};
}

}  // namespace rsparse
