#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

double H(double t) {
  const double a = std::fabs(t);
  return a <= 1.0 ? 0.5 * t * t : a - 0.5;
}

}  // namespace

double huber_smooth(const Vec& b, const Vec& y, const Mat& X, double lo) {
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    double fit = 0.0;
    for (int j = 0; j < b.size(); ++j) fit += X(i, j) * b[j];
    sum += lo * lo * H((y[i] - fit) / (lo * std::sqrt(n)));
  }
  return sum;
}

double huber_objective(const Vec& b, const Vec& y, const Mat& X, double lo, double ls) {
  double pen = 0.0;
  for (int j = 0; j < b.size(); ++j) pen += std::fabs(b[j]);
  return huber_smooth(b, y, X, lo) + ls * pen;
}

double lasso_objective(const Vec& b, const Vec& y, const Mat& X, double ls) {
  double sq = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    double r = y[i];
    for (int j = 0; j < b.size(); ++j) r -= X(i, j) * b[j];
    sq += r * r;
  }
  double pen = 0.0;
  for (int j = 0; j < b.size(); ++j) pen += std::fabs(b[j]);
  return sq / (2.0 * static_cast<double>(y.size())) + ls * pen;
}

Vec normal_equations(const Mat& X, const Vec& y) {
  return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

Minimum grid_polish_min(const std::function<double(const Vec&)>& f, int d, double box, int ppa) {
  Minimum best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<int> idx(d, 0);
  const double h = 2.0 * box / (ppa - 1);
  Vec p(d);
  while (true) {
    for (int j = 0; j < d; ++j) p[j] = -box + h * idx[j];
    const double v = f(p);
    if (v < best.value) {
      best.value = v;
      best.arg = p;
    }
    int j = 0;
    while (j < d && ++idx[j] == ppa) idx[j++] = 0;
    if (j == d) break;
  }
  // Cyclic coordinate descent, each coordinate minimized exactly on a bracket.
  double width = 2.0 * h;
  for (int sweep = 0; sweep < 5000; ++sweep) {
    const double before = best.value;
    for (int j = 0; j < d; ++j) {
      double lo = best.arg[j] - width, hi = best.arg[j] + width;
      Vec q = best.arg;
      auto g = [&](double t) {
        q[j] = t;
        return f(q);
      };
      // Expand until the bracket contains the minimizer.
      while (g(lo) < g(lo + 1e-3 * (hi - lo))) lo -= (hi - lo);
      while (g(hi) < g(hi - 1e-3 * (hi - lo))) hi += (hi - lo);
      for (int k = 0; k < 200 && hi - lo > 1e-14; ++k) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (g(m1) <= g(m2)) hi = m2; else lo = m1;
      }
      const double t = 0.5 * (lo + hi);
      const double v = g(t);
      if (v <= best.value) {
        best.value = v;
        best.arg[j] = t;
      }
    }
    width = std::max(1e-6, 0.5 * width);
    if (before - best.value < 1e-16 && sweep > 20) break;
  }
  return best;
}

Vec capped_simplex_enum(const Vec& v, double cap) {
  const int n = static_cast<int>(v.size());
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int code = 0; code < total; ++code) {
    // state: 0 at lower bound, 1 at cap, 2 free
    std::vector<int> st(n);
    int c = code, nfree = 0;
    double fixed = 0.0, vfree = 0.0;
    for (int i = 0; i < n; ++i) {
      st[i] = c % 3;
      c /= 3;
      if (st[i] == 1) fixed += cap;
      if (st[i] == 2) {
        ++nfree;
        vfree += v[i];
      }
    }
    Vec w(n);
    if (nfree == 0) {
      if (std::fabs(fixed - 1.0) > 1e-12) continue;
      for (int i = 0; i < n; ++i) w[i] = st[i] == 1 ? cap : 0.0;
    } else {
      const double mu = (vfree - (1.0 - fixed)) / nfree;
      for (int i = 0; i < n; ++i) w[i] = st[i] == 0 ? 0.0 : st[i] == 1 ? cap : v[i] - mu;
    }
    bool ok = true;
    for (int i = 0; i < n; ++i) ok = ok && w[i] >= -1e-13 && w[i] <= cap + 1e-13;
    if (!ok) continue;
    const double dist = (w - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  }
  return best;
}

Vec eig_ball_enum(const Vec& lam, double r2) {
  const int d = static_cast<int>(lam.size());
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  // Each coordinate is zero (active) or free; the trace constraint is active or not.
  for (int mask = 0; mask < (1 << d); ++mask) {
    for (int tr = 0; tr < 2; ++tr) {
      Vec x = Vec::Zero(d);
      int nfree = 0;
      double sfree = 0.0;
      for (int i = 0; i < d; ++i) {
        if (mask & (1 << i)) {
          ++nfree;
          sfree += lam[i];
        }
      }
      double mu = 0.0;
      if (tr == 1) {
        if (nfree == 0) continue;
        mu = (sfree - r2) / nfree;
        if (mu < -1e-13) continue;
      }
      for (int i = 0; i < d; ++i) {
        if (mask & (1 << i)) x[i] = lam[i] - mu;
      }
      if (x.minCoeff() < -1e-13 || x.sum() > r2 + 1e-12) continue;
      const double dist = (x - lam).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = x;
      }
    }
  }
  return best;
}

Mat psd_ball_enum(const Mat& A, double r2) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  const Vec x = eig_ball_enum(es.eigenvalues(), r2);
  return es.eigenvectors() * x.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

double density_value(const Mat& S, double ls, const Vec& params, int d) {
  Mat L = Mat::Zero(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) L(i, j) = params[k++];
  const double nrm = L.squaredNorm();
  if (nrm < 1e-300) return 0.0;
  const Mat M = L * L.transpose() / nrm;
  double val = 0.0, l1 = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      val += S(i, j) * M(i, j);
      l1 += std::fabs(M(i, j));
    }
  return val - ls * l1;
}

}  // namespace

double inner_max_grid(const Mat& S, double ls, double r2, int ppa) {
  const int d = static_cast<int>(S.rows());
  const int m = d * (d + 1) / 2;
  // The objective is positively homogeneous, so the maximum over the ball is
  // r2 * max(0, max over unit-trace PSD matrices).
  std::vector<std::pair<double, Vec>> top;
  std::vector<int> idx(m, 0);
  Vec p(m);
  const double h = 2.0 / (ppa - 1);
  while (true) {
    for (int j = 0; j < m; ++j) p[j] = -1.0 + h * idx[j];
    const double v = density_value(S, ls, p, d);
    if (top.size() < 8 || v > top.back().first) {
      top.emplace_back(v, p);
      std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (top.size() > 8) top.pop_back();
    }
    int j = 0;
    while (j < m && ++idx[j] == ppa) idx[j++] = 0;
    if (j == m) break;
  }
  double best = 0.0;
  for (auto& [v0, start] : top) {
    Vec x = start;
    double fx = v0;
    for (double step = h; step > 1e-11; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (int j = 0; j < m; ++j) {
          for (double sgn : {1.0, -1.0}) {
            Vec q = x;
            q[j] += sgn * step;
            const double fq = density_value(S, ls, q, d);
            if (fq > fx) {
              fx = fq;
              x = q;
              improved = true;
            }
          }
        }
      }
    }
    best = std::max(best, fx);
  }
  return r2 * best;
}

Mat random_symmetric(int d, double a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-a, a);
  Mat A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = u(rng);
  return A;
}

}  // namespace oracle

namespace oracle {

namespace {

void fill_radii(TuningValues& v, const TuningInputs& in) {
  const double cr1 = in.c_r * (1 + in.c_re) / in.kappa;
  const double cr2 = in.c_r * (1 + in.c_re) / in.kappa_l;
  v.r_sigma = 12 * cr1 * std::sqrt(in.s) * v.lambda_s;
  v.r_1 = cr1 * std::sqrt(in.s) * v.r_sigma;
  v.r_2 = cr2 * v.r_sigma;
}

}  // namespace

TuningValues tuning_clean(const TuningInputs& in) {
  TuningValues v{};
  const double L = std::log(in.d / in.delta);
  v.tau_x = std::sqrt(in.n / L);
  v.lambda_o = in.c_o * in.K * in.K * in.K * in.K * (in.sigma + 1) / std::sqrt(in.n);
  v.lambda_s = in.c_s * (in.c_re + 1) / (in.c_re - 1) * v.lambda_o * std::sqrt(in.n) * std::sqrt(L / in.n);
  fill_radii(v, in);
  return v;
}

TuningValues tuning_contaminated(const TuningInputs& in) {
  TuningValues v{};
  const double L = std::log(in.d / in.delta);
  v.epsilon = in.c_eps * in.o / in.n;
  const double cstar = in.c_star > 0 ? in.c_star : 1 / (1 - v.epsilon);
  const double cstar_p = std::max(1 / (1 - v.epsilon), cstar);
  v.tau_x = std::pow(in.n / L, 0.25);
  const double knee = in.c_o * std::pow(in.K, 4) * (in.sigma + 1);
  v.lambda_o = knee / std::sqrt(in.n);
  const double ratio = in.kappa / in.kappa_l;  // c_r2 / c_r1
  v.lambda_s = in.c_s * (in.c_re + 1) / (in.c_re - 1) * knee *
               (std::sqrt(L / in.n) + cstar_p * in.sigma_half_op * ratio * std::sqrt(in.o / (in.s * in.n)));
  fill_radii(v, in);
  v.lambda_star = cstar * (std::sqrt(2.0) * in.K * in.K * std::sqrt(L / in.n) + v.tau_x * v.tau_x * L / in.n +
                           2 * std::pow(in.K, 4) / (v.tau_x * v.tau_x));
  v.tau_suc = in.sigma_op / (1 - v.epsilon) * v.r_2 * v.r_2;
  return v;
}

}  // namespace oracle
