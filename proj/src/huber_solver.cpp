#include "rsparse/huber_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsparse/errors.hpp"

namespace rsparse {

namespace {

void check_dims(const Vec& beta, const RegressionSample& data) {
  if (data.X.rows() != data.y.size()) {
    throw DomainError("design rows do not match response length");
  }
  if (beta.size() != data.X.cols()) {
    throw DomainError("coefficient length " + std::to_string(beta.size()) +
                      " does not match design width " + std::to_string(data.X.cols()));
  }
}

// Smooth parts expressed through the residual r = y - X beta, so the solver
// can carry X beta along the momentum recursion instead of recomputing it.
struct HuberTerm {
  double lambda_o;
  double knee;

  double value(const Vec& r) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) acc += huber_loss(r[i] / knee);
    return lambda_o * lambda_o * acc;
  }
  // Returns the vector u with grad = X' u.
  Vec dual(const Vec& r) const {
    return r.unaryExpr([this](double v) { return -(lambda_o * lambda_o / knee) * huber_score(v / knee); });
  }
};

struct SquaredTerm {
  double inv_n;

  double value(const Vec& r) const { return 0.5 * inv_n * r.squaredNorm(); }
  Vec dual(const Vec& r) const { return -inv_n * r; }
};

template <class Term>
FitResult solve_composite(const Term& term, const RegressionSample& data, double lambda_s,
                          const SolverOptions& opts) {
  const Mat& X = data.X;
  const Vec& y = data.y;
  const long d = data.d();
  const double tol = opts.tol_kkt.value_or(default_tol_kkt(data));

  auto objective = [&](const Vec& beta, const Vec& xb) {
    return term.value(y - xb) + lambda_s * beta.lpNorm<1>();
  };

  double L = lipschitz_bound(X);
  if (!(L > 0.0)) L = 1.0;  // all-zero design: any step is exact

  Vec x = Vec::Zero(d);
  Vec xb = Vec::Zero(data.n());
  double fx = objective(x, xb);
  if (!std::isfinite(fx)) throw NumericalFailure("objective is non-finite at the starting point", 0);
  Vec grad_x = X.transpose() * term.dual(y - xb);
  double kkt = kkt_residual(x, grad_x, lambda_s);

  FitResult result;
  if (kkt <= tol) {
    result = {x, fx, kkt, 0, true};
    return result;
  }

  Vec x_prev = x, xb_prev = xb;
  Vec yk = x, ykb = xb;
  double t = 1.0;
  int it = 0;
  bool converged = false;

  for (it = 1; it <= opts.max_iter; ++it) {
    const Vec r_y = y - ykb;
    const Vec grad_y = X.transpose() * term.dual(r_y);

    Vec z, zb;
    double fz = 0.0;
    if (opts.step_rule == StepRule::kBacktracking) {
      const double smooth_y = term.value(r_y);
      for (int bt = 0; bt < 60; ++bt) {
        z = soft_threshold(yk - grad_y / L, lambda_s / L);
        zb = X * z;
        const Vec step = z - yk;
        const double smooth_z = term.value(y - zb);
        if (smooth_z <= smooth_y + grad_y.dot(step) + 0.5 * L * step.squaredNorm() + 1e-12 * std::abs(smooth_y)) {
          fz = smooth_z + lambda_s * z.lpNorm<1>();
          break;
        }
        L *= 2.0;
      }
    } else {
      z = soft_threshold(yk - grad_y / L, lambda_s / L);
      zb = X * z;
      fz = objective(z, zb);
    }
    if (!std::isfinite(fz)) {
      throw NumericalFailure("objective became non-finite at iteration " + std::to_string(it), it);
    }

    x_prev = x;
    xb_prev = xb;
    const bool accept = fz <= fx;
    if (accept) {
      x = z;
      xb = zb;
      fx = fz;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    bool restart = false;
    if (opts.restart) {
      // Gradient-mapping test: momentum points uphill.
      restart = (yk - z).dot(z - x_prev) > 0.0;
    }
    if (restart) {
      t = 1.0;
      yk = x;
      ykb = xb;
    } else {
      const double a = t / t_next;
      const double b = (t - 1.0) / t_next;
      yk = x + a * (z - x) + b * (x - x_prev);
      ykb = xb + a * (zb - xb) + b * (xb - xb_prev);
      t = t_next;
    }

    if (it % 10 == 0 || it == opts.max_iter) {
      // Certify the prox-gradient point. Near the optimum the objective stops
      // resolving progress and z can be rejected by rounding alone.
      const Vec grad_z = X.transpose() * term.dual(y - zb);
      const double kkt_z = kkt_residual(z, grad_z, lambda_s);
      if (kkt_z <= tol && fz <= fx + 1e-12 * (1.0 + std::abs(fx))) {
        x = z;
        xb = zb;
        fx = std::min(fx, fz);
        converged = true;
        break;
      }
    }
    // Periodically resync X*y_k to stop drift from the linear recursion.
    if (it % 200 == 0) ykb = X * yk;
  }

  grad_x = X.transpose() * term.dual(y - X * x);
  kkt = kkt_residual(x, grad_x, lambda_s);
  result.beta_hat = x;
  result.objective = objective(x, X * x);
  result.kkt_residual = kkt;
  result.iterations = std::min(it, opts.max_iter);
  result.converged = converged || kkt <= tol;
  return result;
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iter < 1) throw DomainError("max_iter must be at least 1");
  if (tol_kkt && !(*tol_kkt > 0.0)) throw DomainError("tol_kkt must be positive");
}

double huber_objective(const Vec& beta, const RegressionSample& data, const HuberParams& hp) {
  hp.validate();
  check_dims(beta, data);
  const HuberTerm term{hp.lambda_o, hp.knee(data.n())};
  return term.value(data.y - data.X * beta) + hp.lambda_s * beta.lpNorm<1>();
}

Vec huber_gradient(const Vec& beta, const RegressionSample& data, const HuberParams& hp) {
  hp.validate();
  check_dims(beta, data);
  const HuberTerm term{hp.lambda_o, hp.knee(data.n())};
  return data.X.transpose() * term.dual(data.y - data.X * beta);
}

double lasso_objective(const Vec& beta, const RegressionSample& data, double lambda_s) {
  check_dims(beta, data);
  const SquaredTerm term{1.0 / static_cast<double>(data.n())};
  return term.value(data.y - data.X * beta) + lambda_s * beta.lpNorm<1>();
}

Vec lasso_gradient(const Vec& beta, const RegressionSample& data) {
  check_dims(beta, data);
  const SquaredTerm term{1.0 / static_cast<double>(data.n())};
  return data.X.transpose() * term.dual(data.y - data.X * beta);
}

double kkt_residual(const Vec& beta, const Vec& grad, double lambda_s) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double r = beta[j] == 0.0 ? std::max(std::abs(grad[j]) - lambda_s, 0.0)
                                     : std::abs(grad[j] + lambda_s * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, r);
  }
  return worst;
}

double lipschitz_bound(const Mat& X) {
  const double n = static_cast<double>(X.rows());
  if (std::min(X.rows(), X.cols()) <= 512) {
    const Mat gram = X.rows() < X.cols() ? Mat(X * X.transpose()) : Mat(X.transpose() * X);
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue solve failed in lipschitz_bound");
    return es.eigenvalues().maxCoeff() / n;
  }
  // Power iteration; the safety factor keeps 1/L a descent step.
  Vec v = Vec::Ones(X.cols()).normalized();
  double lam = 0.0;
  for (int k = 0; k < 500; ++k) {
    Vec w = X.transpose() * (X * v);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (std::abs(next - lam) <= 1e-10 * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  return 1.05 * lam / n;
}

double default_tol_kkt(const RegressionSample& data) {
  const double scale = (data.X.transpose() * data.y).lpNorm<Eigen::Infinity>() / static_cast<double>(data.n());
  return 1e-8 * (1.0 + scale);
}

FitResult fit_penalized_huber(const RegressionSample& data, const HuberParams& hp, const SolverOptions& opts) {
  data.validate();
  hp.validate();
  opts.validate();
  return solve_composite(HuberTerm{hp.lambda_o, hp.knee(data.n())}, data, hp.lambda_s, opts);
}

FitResult fit_lasso_baseline(const RegressionSample& data, double lambda_s, const SolverOptions& opts) {
  data.validate();
  opts.validate();
  if (!(lambda_s >= 0.0)) throw DomainError("lambda_s must be nonnegative");
  return solve_composite(SquaredTerm{1.0 / static_cast<double>(data.n())}, data, lambda_s, opts);
}

}  // namespace rsparse
