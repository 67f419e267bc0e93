#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rsparse/errors.hpp"
#include "rsparse/weights.hpp"

using namespace rsparse;

namespace {

WeightParams params(double lambda_star, double r2, double tau = 1.0, double eps = 0.0) {
  WeightParams wp;
  wp.lambda_star = lambda_star;
  wp.radius = std::sqrt(r2);
  wp.tau_suc = tau;
  wp.epsilon = eps;
  return wp;
}

InnerMaxOptions tight_inner() { return {1e-10, 20000}; }

Mat psd(int d, std::mt19937_64& rng) {
  const Mat A = oracle::random_symmetric(d, 1.0, rng);
  return A * A.transpose();
}

}  // namespace

TEST(CappedSimplex, Examples) {
  EXPECT_TRUE(project_capped_simplex(Vec{{0.9, 0.1}}, 1.0).w.isApprox(Vec{{0.9, 0.1}}, 1e-15));
  EXPECT_TRUE(project_capped_simplex(Vec{{2.0, 0.0}}, 1.0).w.isApprox(Vec{{1.0, 0.0}}, 1e-15));
  EXPECT_LE((project_capped_simplex(Vec{{2.0, 0.0}}, 0.6).w - Vec{{0.6, 0.4}}).norm(), 1e-15);
  EXPECT_THROW(project_capped_simplex(Vec::Zero(3), 0.3), DomainError);
}

TEST(CappedSimplex, MatchesEnumerationOracle) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> nd(1, 7);
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    const int n = nd(rng);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    const double cap = (1.0 / n) * (1.0 + 2.0 * std::abs(g(rng)));
    const WeightVector w = project_capped_simplex(v, std::min(cap, 1.0));
    EXPECT_TRUE(w.satisfies(std::min(cap, 1.0)));
    EXPECT_LE((w.w - oracle::capped_simplex_enum(v, std::min(cap, 1.0))).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

TEST(CappedSimplex, IdempotentAndNonexpansive) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    Vec a(12), b(12);
    for (int i = 0; i < 12; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
    }
    const double cap = 1.0 / (12 * 0.8);
    const Vec pa = project_capped_simplex(a, cap).w, pb = project_capped_simplex(b, cap).w;
    EXPECT_LE((project_capped_simplex(pa, cap).w - pa).norm(), 1e-14);
    EXPECT_LE((pa - pb).norm(), (a - b).norm() + 1e-14);
  }
}

TEST(PsdBall, Examples) {
  Mat A{{0.5, 0.1}, {0.1, 0.3}};
  EXPECT_LE((project_psd_trace_ball(A, 1.0) - A).norm(), 1e-14);
  Mat B = Vec{{2.0, -1.0}}.asDiagonal();
  EXPECT_LE((project_psd_trace_ball(B, 1.0) - Mat(Vec{{1.0, 0.0}}.asDiagonal())).norm(), 1e-14);
  EXPECT_EQ(project_psd_trace_ball(Mat::Zero(3, 3), 2.0), Mat::Zero(3, 3));
}

TEST(PsdBall, MatchesEnumerationOracleAndCertificate) {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> dd(1, 4);
  std::uniform_real_distribution<double> rr(0.1, 3.0);
  for (int k = 0; k < 200; ++k) {
    const int d = dd(rng);
    const Mat A = oracle::random_symmetric(d, 2.0, rng);
    const double r2 = rr(rng);
    const Mat P = project_psd_trace_ball(A, r2);
    EXPECT_LE((P - oracle::psd_ball_enum(A, r2)).lpNorm<Eigen::Infinity>(), 1e-9);
    // Variational inequality: max over the set of <A - P, Q> equals r2 [lambda_max(A - P)]_+.
    Eigen::SelfAdjointEigenSolver<Mat> es(A - P);
    const double sup = r2 * std::max(0.0, es.eigenvalues().maxCoeff());
    EXPECT_LE(sup, (A - P).cwiseProduct(P).sum() + 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat> ep(P);
    EXPECT_GE(ep.eigenvalues().minCoeff(), -1e-12);
    EXPECT_LE(P.trace(), r2 + 1e-12);
  }
}

TEST(PsdBall, IdempotentAndNonexpansive) {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 100; ++k) {
    const Mat A = oracle::random_symmetric(3, 2.0, rng), B = oracle::random_symmetric(3, 2.0, rng);
    const Mat PA = project_psd_trace_ball(A, 1.5), PB = project_psd_trace_ball(B, 1.5);
    EXPECT_LE((project_psd_trace_ball(PA, 1.5) - PA).norm(), 1e-12);
    EXPECT_LE((PA - PB).norm(), (A - B).norm() + 1e-12);
  }
}

TEST(InnerMax, OneDimensionalClosedForm) {
  for (double s : {0.2, 1.0, 3.5}) {
    for (double ls : {0.1, 1.0, 2.0}) {
      const auto r = inner_max(Mat{{s}}, params(ls, 2.0));
      EXPECT_NEAR(r.value, 2.0 * std::max(s - ls, 0.0), 1e-9);
    }
  }
}

TEST(InnerMax, Examples) {
  const auto z = inner_max(0.7 * Mat::Identity(2, 2), params(0.7, 3.0));
  EXPECT_NEAR(z.value, 0.0, 1e-9);
  EXPECT_NEAR(oracle::inner_max_grid(0.7 * Mat::Identity(2, 2), 0.7, 3.0, 21), 0.0, 1e-9);

  const Mat S = Vec{{3.0, 1.0}}.asDiagonal();
  const auto r = inner_max(S, params(1.0, 1.0), tight_inner());
  EXPECT_NEAR(r.value, 2.0, 1e-6);
  EXPECT_LE((r.M - Mat(Vec{{1.0, 0.0}}.asDiagonal())).norm(), 1e-4);
  EXPECT_NEAR(oracle::inner_max_grid(S, 1.0, 1.0, 21), 2.0, 1e-6);
}

TEST(InnerMax, FeasibleCertifiedAndMatchesOracle) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 0; k < 15; ++k) {
    const Mat S = psd(2, rng);
    const double ls = u(rng), r2 = 2 * u(rng);
    const auto r = inner_max(S, params(ls, r2), tight_inner());
    Eigen::SelfAdjointEigenSolver<Mat> es(r.M);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
    EXPECT_LE(r.M.trace(), r2 + 1e-9);
    EXPECT_GE(r.value, 0.0);
    EXPECT_NEAR(r.value, inner_objective(S, r.M, ls), 1e-12);
    EXPECT_GE(r.upper_bound, r.value - 1e-12);
    EXPECT_NEAR(r.value, oracle::inner_max_grid(S, ls, r2, 31), 1e-6);
  }
}

TEST(InnerMax, DualBoundsAreValid) {
  std::mt19937_64 rng(36);
  for (int k = 0; k < 50; ++k) {
    const Mat S = oracle::random_symmetric(3, 1.0, rng);
    const double ls = 0.3, r2 = 1.2;
    const double exact = oracle::inner_max_grid(S, ls, r2, 9);
    EXPECT_GE(closed_form_dual_bound(S, ls, r2), exact - 1e-9);
    const Mat U = S.cwiseMax(-ls).cwiseMin(ls);
    EXPECT_GE(dual_bound(S, U, r2), exact - 1e-9);
  }
}

TEST(InnerMax, MonotoneAndHomogeneous) {
  std::mt19937_64 rng(37);
  for (int k = 0; k < 20; ++k) {
    const Mat S = psd(3, rng);
    const double v = inner_max(S, params(0.4, 1.0), tight_inner()).value;
    EXPECT_GE(inner_max(S, params(0.4, 2.0), tight_inner()).value, v - 1e-8);
    EXPECT_LE(inner_max(S, params(0.6, 1.0), tight_inner()).value, v + 1e-8);
    EXPECT_NEAR(inner_max(3.0 * S, params(1.2, 1.0), tight_inner()).value, 3.0 * v, 1e-7 * (1 + v));
  }
}

TEST(InnerMax, WarmStartGivesSameAnswer) {
  std::mt19937_64 rng(38);
  const Mat S = psd(4, rng);
  InnerWarmStart ws;
  const auto a = inner_max(S, params(0.3, 1.0), tight_inner(), &ws);
  const auto b = inner_max(S * 1.01, params(0.3, 1.0), tight_inner(), &ws);
  const auto c = inner_max(S * 1.01, params(0.3, 1.0), tight_inner());
  EXPECT_GT(a.value, 0.0);
  EXPECT_NEAR(b.value, c.value, 1e-8);
}

TEST(ComputeWeights, ZeroRowsGiveUniform) {
  const auto r = compute_weights(Mat::Zero(10, 3), params(0.5, 1.0, 0.1, 0.2));
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_LE((r.weights.w - Vec::Constant(10, 0.1)).lpNorm<Eigen::Infinity>(), 1e-15);
}

namespace {

Mat spike_instance() {
  std::mt19937_64 rng(39);
  std::normal_distribution<double> g(0.0, 0.1);
  Mat X(20, 2);
  for (int i = 0; i < 18; ++i) X.row(i) << g(rng), g(rng);
  X.row(18) << 10.0, 10.0;
  X.row(19) << 10.0, 10.0;
  return X;
}

}  // namespace

TEST(ComputeWeights, DownweightsSpikes) {
  const Mat X = spike_instance();
  const double ls = 0.5, r2 = 1.0;
  Vec inlier = Vec::Constant(20, 1.0 / 18.0);
  inlier[18] = inlier[19] = 0.0;
  const double inlier_value = oracle::inner_max_grid(weighted_scatter(X, inlier), ls, r2, 31);
  const double uniform_value = oracle::inner_max_grid(weighted_scatter(X, Vec::Constant(20, 0.05)), ls, r2, 31);
  const double tau = inlier_value + 1e-3;
  ASSERT_GT(uniform_value, tau);

  const auto r = compute_weights(X, params(ls, r2, tau, 0.1));
  ASSERT_TRUE(r.success);
  EXPECT_TRUE(r.weights.satisfies(1.0 / 18.0));
  EXPECT_LE(r.weights.w[18] + r.weights.w[19], 0.02);
  EXPECT_LE(oracle::inner_max_grid(weighted_scatter(X, r.weights.w), ls, r2, 31), tau + 1e-6);

  // With a tiny penalty no feasible weighting reaches zero.
  const auto fail = compute_weights(X, params(1e-3, r2, 0.0, 0.1));
  EXPECT_FALSE(fail.success);
  EXPECT_GT(fail.upper_bound, 0.0);
  EXPECT_LE(fail.value, fail.uniform_value + 1e-6);
}

TEST(ComputeWeights, NeverWorseThanUniform) {
  std::mt19937_64 rng(40);
  std::student_t_distribution<double> t(3.0);
  for (int k = 0; k < 5; ++k) {
    Mat X(30, 3);
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 3; ++j) X(i, j) = t(rng);
    WeightSolverOptions o;
    o.max_outer = 200;
    const auto r = compute_weights(X, params(0.2, 1.0, 0.0, 0.2), o);
    EXPECT_FALSE(r.success);
    EXPECT_TRUE(r.weights.satisfies(1.0 / (30 * 0.8)));
    EXPECT_LE(r.upper_bound, r.uniform_value + 1e-6);
  }
}

TEST(ComputeWeights, Validation) {
  EXPECT_THROW(compute_weights(Mat::Zero(4, 2), params(0.5, 1.0, 1.0, 1.0)), DomainError);
  EXPECT_THROW(compute_weights(Mat::Zero(4, 2), params(0.0, 1.0, 1.0, 0.0)), DomainError);
  EXPECT_THROW(compute_weights(Mat::Zero(4, 2), params(1.0, 1.0, -1.0, 0.0)), DomainError);
}

TEST(ComputeWeights, ZeroEpsilonEvaluatesUniformOnly) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  Mat X(15, 2);
  for (int i = 0; i < 15; ++i) X.row(i) << 3 * g(rng), 3 * g(rng);
  const auto r = compute_weights(X, params(0.1, 1.0, 0.0, 0.0));
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.weights.w, Vec::Constant(15, 1.0 / 15.0));
}

// f(w) = inner max at S(w), evaluated with the grid oracle.
TEST(WeightFunctional, ConvexAndDanskinSubgradient) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 8;
  Mat X(n, 2);
  for (int i = 0; i < n; ++i) X.row(i) << 2 * g(rng), 2 * g(rng);
  const double ls = 0.3, r2 = 1.0;
  auto f = [&](const Vec& w) { return oracle::inner_max_grid(weighted_scatter(X, w), ls, r2, 25); };
  auto rand_w = [&] {
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = u(rng);
    return Vec(w / w.sum());
  };
  for (int k = 0; k < 6; ++k) {
    const Vec a = rand_w(), b = rand_w();
    const double fa = f(a), fb = f(b);
    EXPECT_LE(f(0.5 * (a + b)), 0.5 * (fa + fb) + 1e-7);
    const auto r = inner_max(weighted_scatter(X, a), params(ls, r2), tight_inner());
    Vec grad(n);
    for (int i = 0; i < n; ++i) grad[i] = X.row(i) * r.M * X.row(i).transpose();
    EXPECT_GE(fb, fa + grad.dot(b - a) - 1e-6);
  }
}
