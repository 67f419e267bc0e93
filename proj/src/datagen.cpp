#include "rsparse/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rsparse/errors.hpp"

namespace rsparse {

namespace {

using Rng = std::mt19937_64;

double student_t_mean_abs(double nu) {
  const double raw = 2.0 * std::sqrt(nu) * std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) /
                     (std::sqrt(M_PI) * (nu - 1.0));
  return raw / std::sqrt(nu / (nu - 2.0));
}

// Draws one standardized variate.
class Sampler {
 public:
  explicit Sampler(const DistributionSpec& spec) : spec_(spec) {
    spec.validate();
    if (spec.family == Family::kStudentT) {
      t_ = std::student_t_distribution<double>(spec.shape);
      scale_ = 1.0 / std::sqrt(spec.shape / (spec.shape - 2.0));
    } else if (spec.family == Family::kParetoSymmetric) {
      const double a = spec.shape;
      scale_ = 1.0 / std::sqrt(2.0 / ((a - 1.0) * (a - 2.0)));
    }
  }

  double operator()(Rng& rng) {
    switch (spec_.family) {
      case Family::kGaussian:
        return normal_(rng);
      case Family::kStudentT:
        return scale_ * t_(rng);
      case Family::kParetoSymmetric: {
        // Lomax (Pareto shifted to start at 0) with a random sign.
        const double u = 1.0 - unif_(rng);  // (0, 1]
        const double mag = std::pow(u, -1.0 / spec_.shape) - 1.0;
        return (unif_(rng) < 0.5 ? -1.0 : 1.0) * scale_ * mag;
      }
      case Family::kScaledRademacher:
        return unif_(rng) < 0.5 ? -1.0 : 1.0;
    }
    return 0.0;
  }

 private:
  DistributionSpec spec_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::student_t_distribution<double> t_{5.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  double scale_ = 1.0;
};

}  // namespace

void DistributionSpec::validate() const {
  if ((family == Family::kStudentT || family == Family::kParetoSymmetric) && !(shape > 4.0)) {
    throw DomainError(name() + ": shape parameter must exceed 4 for a finite fourth moment");
  }
}

double DistributionSpec::kurtosis() const {
  switch (family) {
    case Family::kGaussian: return 3.0;
    case Family::kStudentT: return 3.0 * (shape - 2.0) / (shape - 4.0);
    case Family::kParetoSymmetric: {
      const double a = shape;
      return 6.0 * (a - 1.0) * (a - 2.0) / ((a - 3.0) * (a - 4.0));
    }
    case Family::kScaledRademacher: return 1.0;
  }
  return 3.0;
}

double DistributionSpec::directional_kurtosis() const { return std::max(3.0, kurtosis()); }

double DistributionSpec::mean_abs() const {
  switch (family) {
    case Family::kGaussian: return std::sqrt(2.0 / M_PI);
    case Family::kStudentT: return student_t_mean_abs(shape);
    case Family::kParetoSymmetric: {
      const double a = shape;
      return (1.0 / (a - 1.0)) / std::sqrt(2.0 / ((a - 1.0) * (a - 2.0)));
    }
    case Family::kScaledRademacher: return 1.0;
  }
  return 1.0;
}

std::string DistributionSpec::name() const {
  auto num = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  switch (family) {
    case Family::kGaussian: return "gaussian";
    case Family::kStudentT: return "student_t:" + num(shape);
    case Family::kParetoSymmetric: return "pareto_symmetric:" + num(shape);
    case Family::kScaledRademacher: return "scaled_rademacher";
  }
  return "gaussian";
}

DistributionSpec DistributionSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  double shape = 0.0;
  if (colon != std::string::npos) {
    try {
      shape = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw DomainError("bad distribution shape in '" + text + "'");
    }
  }
  DistributionSpec spec;
  if (head == "gaussian") {
    spec.family = Family::kGaussian;
  } else if (head == "student_t") {
    spec = {Family::kStudentT, colon == std::string::npos ? 5.0 : shape};
  } else if (head == "pareto_symmetric") {
    spec = {Family::kParetoSymmetric, colon == std::string::npos ? 5.0 : shape};
  } else if (head == "scaled_rademacher") {
    spec.family = Family::kScaledRademacher;
  } else {
    throw DomainError("unknown distribution family '" + head + "'");
  }
  spec.validate();
  return spec;
}

void TrueModel::validate() const {
  const long d = beta_star.size();
  if (Sigma.rows() != d || Sigma.cols() != d) throw DomainError("Sigma must be d x d");
  const long nnz = (beta_star.array() != 0.0).count();
  if (nnz != s) throw DomainError("beta_star has " + std::to_string(nnz) + " nonzeros, expected s = " + std::to_string(s));
  if (Sigma.diagonal().maxCoeff() > 1.0 + 1e-12) throw DomainError("Sigma diagonal must not exceed 1");
  if (K < 1.0) throw DomainError("kurtosis constant K must be at least 1");
  if (sigma < 0.0) throw DomainError("noise scale sigma must be nonnegative");
  psd_sqrt(Sigma);
}

TrueModel make_true_model(long d, int s, double sigma, double K, double rho, double beta_magnitude,
                          std::uint64_t seed) {
  if (d < 1 || s < 0 || s > d) throw DomainError("need 0 <= s <= d and d >= 1");
  if (std::abs(rho) >= 1.0) throw DomainError("Toeplitz rho must satisfy |rho| < 1");
  Rng rng(seed);
  std::vector<long> idx(d);
  std::iota(idx.begin(), idx.end(), 0L);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TrueModel m;
  m.beta_star = Vec::Zero(d);
  for (int k = 0; k < s; ++k) m.beta_star[idx[k]] = (unif(rng) < 0.5 ? -1.0 : 1.0) * beta_magnitude;
  m.Sigma = Mat(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) m.Sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  m.s = beta_magnitude == 0.0 ? 0 : s;
  m.sigma = sigma;
  m.K = K;
  m.beta_max = s > 0 ? std::abs(beta_magnitude) : 0.0;
  return m;
}

std::string to_string(ContaminationMode mode) {
  switch (mode) {
    case ContaminationMode::kResponseGross: return "response_gross";
    case ContaminationMode::kCovariateLeverage: return "covariate_leverage";
    case ContaminationMode::kCoordinated: return "coordinated";
  }
  return "response_gross";
}

ContaminationMode parse_contamination_mode(const std::string& text) {
  if (text == "response_gross") return ContaminationMode::kResponseGross;
  if (text == "covariate_leverage") return ContaminationMode::kCovariateLeverage;
  if (text == "coordinated") return ContaminationMode::kCoordinated;
  throw DomainError("unknown contamination mode '" + text + "'");
}

std::vector<long> draw_outlier_set(long n, long o, std::uint64_t seed) {
  if (o < 0 || o > n) throw DomainError("outlier count o = " + std::to_string(o) + " exceeds n = " + std::to_string(n));
  std::vector<long> idx(n);
  std::iota(idx.begin(), idx.end(), 0L);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(o);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat psd_sqrt(const Mat& Sigma) {
  if (Sigma.rows() != Sigma.cols()) throw DomainError("covariance must be square");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Sigma + Sigma.transpose()));
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of covariance failed");
  const double scale = std::max(1.0, Sigma.cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) throw DomainError("covariance is not positive semidefinite");
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

RegressionSample sample_clean(const TrueModel& model, const DistributionSpec& dist_x,
                              const DistributionSpec& dist_xi, long n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample size must be positive");
  const long d = model.beta_star.size();
  const Mat root = psd_sqrt(model.Sigma);
  const bool identity = model.Sigma.isIdentity(0.0);
  Sampler draw_x(dist_x);
  Sampler draw_xi(dist_xi);
  Rng rng(seed);

  Mat Z(n, d);
  Vec noise(n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) Z(i, j) = draw_x(rng);
    noise[i] = draw_xi(rng);
  }
  RegressionSample out;
  out.X = identity ? Z : Mat(Z * root);
  const double noise_scale = model.sigma / dist_xi.mean_abs();
  out.y = out.X * model.beta_star + noise_scale * noise;
  return out;
}

RegressionSample contaminate(const RegressionSample& sample, const ContaminationSpec& spec,
                             const TrueModel& model, std::uint64_t seed) {
  const long n = sample.n();
  const long d = sample.d();
  if (spec.o() > n) throw DomainError("outlier count o = " + std::to_string(spec.o()) + " exceeds n = " + std::to_string(n));
  std::vector<long> sorted = spec.outlier_set;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw DomainError("outlier set has duplicates");
  for (long i : sorted) {
    if (i < 0 || i >= n) throw DomainError("outlier index " + std::to_string(i) + " out of range");
  }

  RegressionSample out = sample;
  const double m = spec.magnitude;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (spec.mode) {
    case ContaminationMode::kResponseGross: {
      const double shift = std::sqrt(static_cast<double>(n)) * m;
      for (long i : spec.outlier_set) out.y[i] += (unif(rng) < 0.5 ? -1.0 : 1.0) * shift;
      break;
    }
    case ContaminationMode::kCovariateLeverage: {
      long j = 0;
      while (j < d && model.beta_star.size() == d && model.beta_star[j] != 0.0) ++j;
      if (j == d) j = 0;
      for (long i : spec.outlier_set) out.X(i, j) += m;
      break;
    }
    case ContaminationMode::kCoordinated: {
      const double bnorm = model.beta_star.norm();
      Vec b = Vec::Zero(d);
      if (bnorm > 0.0) b = model.beta_star / bnorm; else b[0] = 1.0;
      for (long i : spec.outlier_set) {
        out.X.row(i) += m * b.transpose();
        out.y[i] -= m * bnorm;
      }
      break;
    }
  }
  return out;
}

double empirical_kurtosis(const Mat& X, int n_dirs, std::uint64_t seed) {
  if (X.rows() < 4) throw DomainError("empirical_kurtosis needs at least 4 rows");
  const Mat Xc = X.rowwise() - X.colwise().mean();
  const double n = static_cast<double>(X.rows());
  double best = 0.0;
  auto ratio = [&](const Vec& p) {
    const double m2 = p.squaredNorm() / n;
    if (m2 < 1e-12) return;
    const double m4 = p.array().square().square().sum() / n;
    best = std::max(best, m4 / (m2 * m2));
  };
  for (long j = 0; j < X.cols(); ++j) ratio(Xc.col(j));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < n_dirs; ++k) {
    Vec v(X.cols());
    for (long j = 0; j < v.size(); ++j) v[j] = normal(rng);
    v.normalize();
    ratio(Xc * v);
  }
  return best;
}

}  // namespace rsparse
