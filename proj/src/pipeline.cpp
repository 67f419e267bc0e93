#include "rsparse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsparse/datagen.hpp"
#include "rsparse/errors.hpp"
#include "rsparse/eval.hpp"
#include "rsparse/thresholding.hpp"

namespace rsparse {

namespace {

double checked_log_term(long n, long d, const TheoryConstants& tc) {
  if (n < 1) throw DomainError("n must be positive");
  if (d < 3) throw DomainError("the tuning formulas assume d >= 3");
  const double log_term = std::log(static_cast<double>(d) / tc.delta);
  if (!(log_term > 0.0)) throw DomainError("log(d / delta) must be positive");
  return log_term;
}

RadiusSet radii_for(double lambda_s, int s, const TheoryConstants& tc) {
  RadiusSet r;
  r.c_r1 = tc.c_r * (1.0 + tc.c_re) / tc.kappa;
  r.c_r2 = tc.c_r * (1.0 + tc.c_re) / tc.kappa_l;
  const double root_s = std::sqrt(static_cast<double>(s));
  r.r_sigma = 12.0 * r.c_r1 * root_s * lambda_s;
  r.r_1 = r.c_r1 * root_s * r.r_sigma;
  r.r_2 = r.c_r2 * r.r_sigma;
  return r;
}

double penalty_factor(const TheoryConstants& tc) { return tc.c_s * (tc.c_re + 1.0) / (tc.c_re - 1.0); }

double median_of(Vec v) {
  std::vector<double> a(v.data(), v.data() + v.size());
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + static_cast<long>(mid), a.end());
  double m = a[mid];
  if (a.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(a.begin(), a.begin() + static_cast<long>(mid)));
  }
  return m;
}

}  // namespace

void TheoryConstants::validate() const {
  if (!(c_s > 0.0)) throw DomainError("c_s must be positive");
  if (!(c_r > 0.0)) throw DomainError("c_r must be positive");
  if (!(c_re > 1.0)) throw DomainError("c_RE must exceed 1");
  if (!(kappa > 0.0) || !(kappa_l > 0.0)) throw DomainError("kappa and kappa_l must be positive");
  if (c_star && !(*c_star > 0.0)) throw DomainError("c_star must be positive");
  if (!(c_eps > 0.0)) throw DomainError("c_eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(c_o > 0.0)) throw DomainError("c_o must be positive");
}

Tuning tuning_no_outliers(long n, long d, const ModelConstants& mc, const TheoryConstants& tc) {
  tc.validate();
  if (mc.s < 1) throw DomainError("sparsity s must be at least 1");
  if (!(mc.K >= 1.0) || !(mc.sigma >= 0.0)) throw DomainError("need K >= 1 and sigma >= 0");
  Tuning t;
  t.n = n;
  t.d = d;
  t.log_term = checked_log_term(n, d, tc);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double knee = tc.c_o * std::pow(mc.K, 4) * (mc.sigma + 1.0);
  t.tau_x = std::sqrt(static_cast<double>(n) / t.log_term);
  t.huber.lambda_o = knee / root_n;
  t.huber.lambda_s = penalty_factor(tc) * knee * std::sqrt(t.log_term / static_cast<double>(n));
  t.radii = radii_for(t.huber.lambda_s, mc.s, tc);
  return t;
}

Tuning tuning_with_outliers(long n, long d, long o, const ModelConstants& mc, const TheoryConstants& tc) {
  tc.validate();
  if (mc.s < 1) throw DomainError("sparsity s must be at least 1");
  if (!(mc.K >= 1.0) || !(mc.sigma >= 0.0)) throw DomainError("need K >= 1 and sigma >= 0");
  if (o < 0 || o > n) throw DomainError("outlier count must lie in [0, n]");
  Tuning t;
  t.n = n;
  t.d = d;
  t.o = o;
  t.log_term = checked_log_term(n, d, tc);
  const double dn = static_cast<double>(n);
  t.epsilon = tc.c_eps * static_cast<double>(o) / dn;
  if (!(t.epsilon < 1.0)) throw DomainError("epsilon = c_eps * o / n must be below 1");
  const double c_star = tc.c_star.value_or(1.0 / (1.0 - t.epsilon));
  t.c_star_prime = std::max(1.0 / (1.0 - t.epsilon), c_star);

  const double knee = tc.c_o * std::pow(mc.K, 4) * (mc.sigma + 1.0);
  t.tau_x = std::pow(dn / t.log_term, 0.25);
  t.huber.lambda_o = knee / std::sqrt(dn);
  const double c_r1 = tc.c_r * (1.0 + tc.c_re) / tc.kappa;
  const double c_r2 = tc.c_r * (1.0 + tc.c_re) / tc.kappa_l;
  const double outlier_term =
      t.c_star_prime * mc.sigma_half_op * (c_r2 / c_r1) * std::sqrt(static_cast<double>(o) / (mc.s * dn));
  t.huber.lambda_s = penalty_factor(tc) * knee * (std::sqrt(t.log_term / dn) + outlier_term);
  t.radii = radii_for(t.huber.lambda_s, mc.s, tc);

  const double K2 = mc.K * mc.K;
  const double tau2 = t.tau_x * t.tau_x;
  WeightParams wp;
  wp.lambda_star = c_star * (std::sqrt(2.0) * K2 * std::sqrt(t.log_term / dn) + tau2 * t.log_term / dn +
                             2.0 * K2 * K2 / tau2);
  wp.epsilon = t.epsilon;
  wp.radius = t.radii.r_2;
  wp.tau_suc = mc.sigma_op * t.radii.r_2 * t.radii.r_2 / (1.0 - t.epsilon);
  t.weights = wp;
  return t;
}

std::vector<ConditionCheck> condition_report(const Tuning& t, const ModelConstants& mc, const TheoryConstants& tc) {
  std::vector<ConditionCheck> out;
  const double K4 = std::pow(mc.K, 4);
  const double K2 = mc.K * mc.K;
  const double ratio = t.log_term / static_cast<double>(t.n);
  const double s = static_cast<double>(mc.s);
  const double c_r1 = t.radii.c_r1, c_r2 = t.radii.c_r2;

  out.push_back({"c_s", tc.c_s, 16.0, true});
  out.push_back({"c_r", tc.c_r, 6.0, true});
  out.push_back({"c_RE", tc.c_re, 1.0, true});
  out.push_back({"lambda_o_sqrt_n", t.huber.knee(t.n), 18.0 * K4 * (mc.sigma + 1.0), true});
  out.push_back({"r_sigma", t.radii.r_sigma, 1.0, false});

  if (!t.weights) {
    out.push_back({"tp2_no.a", 9.0 * K2 * c_r1 * std::sqrt(s * ratio), 1.0, false});
    if (mc.beta_max) {
      out.push_back({"tp2_no.b", K4 / c_r1 * std::pow(*mc.beta_max, 0.25) * std::pow(s, 0.25) * std::pow(ratio, 7.0 / 8.0),
                     1.0, false});
    }
    if (mc.beta_l1) out.push_back({"tp2_no.c", *mc.beta_l1 * K4 * std::pow(ratio, 1.5), 1.0, false});
    return out;
  }

  const double c_star = tc.c_star.value_or(1.0 / (1.0 - t.epsilon));
  out.push_back({"c_eps", tc.c_eps, 1.0, true});
  out.push_back({"c_star", c_star, 1.0 / (1.0 - t.epsilon), true});
  out.push_back({"tp2.a", K4 * std::pow(ratio, 0.25), 1.0, false});
  if (mc.beta_max) {
    out.push_back({"tp2.b", K4 / c_r1 * std::pow(*mc.beta_max, 0.25) * std::pow(s, 0.25) * std::pow(ratio, 3.0 / 16.0),
                   1.0, false});
  }
  out.push_back({"tp2.c", 3.0 * K4 * c_r1 * c_r1 / (c_r2 * c_r2 * mc.sigma_half_op) * s * std::sqrt(ratio), 1.0, false});
  if (mc.beta_l1) out.push_back({"tp2_2.a", K4 * *mc.beta_l1 * std::pow(ratio, 0.75), 1.0, false});
  out.push_back({"tp2_2.b", 72.0 * K4 * c_r1 * c_r1 * s * std::sqrt(ratio), 1.0, false});
  return out;
}

WeightScaling parse_weight_scaling(const std::string& text) {
  if (text == "unit_mean") return WeightScaling::kUnitMean;
  if (text == "raw") return WeightScaling::kRaw;
  throw DomainError("weight scaling must be unit_mean or raw, got '" + text + "'");
}

RegressionSample reweight_sample(const RegressionSample& sample, const Vec& w, WeightScaling scaling) {
  if (w.size() != sample.n()) throw DomainError("weight vector length does not match the sample");
  const bool uniform = (w.array() == w[0]).all();
  if (scaling == WeightScaling::kUnitMean && uniform) return sample;
  const Vec c = scaling == WeightScaling::kUnitMean ? Vec(static_cast<double>(sample.n()) * w) : w;
  return RegressionSample{c.cwiseProduct(sample.y), c.asDiagonal() * sample.X};
}

EstimateReport estimate_I(const RegressionSample& sample, const Tuning& tuning, const EstimateOptions& opts) {
  sample.validate();
  const RegressionSample thresholded = threshold_sample(sample, tuning.tau_x);
  EstimateReport rep;
  rep.tuning = tuning;
  rep.fit = fit_penalized_huber(thresholded, tuning.huber, opts.solver);
  rep.beta_hat = rep.fit.beta_hat;
  return rep;
}

EstimateReport estimate_II(const RegressionSample& sample, const Tuning& tuning, const EstimateOptions& opts) {
  sample.validate();
  if (!tuning.weights) throw DomainError("estimate_II needs contamination-aware tuning (weight parameters)");
  const RegressionSample thresholded = threshold_sample(sample, tuning.tau_x);
  EstimateReport rep;
  rep.tuning = tuning;
  rep.contamination_aware = true;

  ComputeWeightResult cw = compute_weights(thresholded.X, *tuning.weights, opts.weight_solver);
  rep.weight_fail = !cw.success;
  rep.weight_value = cw.upper_bound;
  Vec w = cw.weights.w;
  if (cw.success) {
    rep.weights = cw.weights;
  } else {
    w = Vec::Constant(sample.n(), 1.0 / static_cast<double>(sample.n()));
  }
  rep.weight_diagnostics = std::move(cw);
  rep.fit = fit_penalized_huber(reweight_sample(thresholded, w, opts.scaling), tuning.huber, opts.solver);
  rep.beta_hat = rep.fit.beta_hat;
  return rep;
}

std::pair<double, double> covariance_norms(const Mat& Sigma) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Sigma, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue solve failed on covariance");
  const double op = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return {op, std::sqrt(op)};
}

double sparse_eigen_floor(const Mat& Sigma, int s, bool* exact) {
  try {
    const double v = sparse_min_eigen(Sigma, s);
    if (exact) *exact = true;
    return v;
  } catch (const CapacityError&) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Sigma, Eigen::EigenvaluesOnly);
    if (exact) *exact = false;
    return std::max(es.eigenvalues().minCoeff(), 0.0);
  }
}

ModelConstants estimate_model_constants(const RegressionSample& sample, int s, std::uint64_t seed) {
  sample.validate();
  ModelConstants mc;
  mc.s = s;
  mc.K = std::max(1.0, std::pow(empirical_kurtosis(sample.X, 50, seed), 0.25));

  const Vec centered = (sample.y.array() - median_of(sample.y)).abs();
  const double mad = std::max(1.4826 * median_of(centered), 1e-8);
  HuberParams pre{1.345 * mad / std::sqrt(static_cast<double>(sample.n())), 0.0};
  SolverOptions so;
  so.max_iter = 5000;
  const FitResult fit = fit_penalized_huber(sample, pre, so);
  mc.sigma = median_of((sample.y - sample.X * fit.beta_hat).cwiseAbs());

  const double log_term = std::log(std::max<double>(3.0, static_cast<double>(sample.d())) / 0.05);
  const Mat Xt = threshold_matrix(sample.X, std::sqrt(static_cast<double>(sample.n()) / log_term));
  const auto [op, half] = covariance_norms(Xt.transpose() * Xt / static_cast<double>(sample.n()));
  mc.sigma_op = op;
  mc.sigma_half_op = half;
  return mc;
}

}  // namespace rsparse
