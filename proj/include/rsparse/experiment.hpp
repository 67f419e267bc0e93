#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsparse/config.hpp"
#include "rsparse/datagen.hpp"
#include "rsparse/io.hpp"
#include "rsparse/pipeline.hpp"

namespace rsparse {

/// splitmix64 of (base, stream); used to fan one seed out into independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// One synthetic data set.
struct Scenario {
  long n = 200;
  long d = 20;
  int s = 3;
  long o = 0;
  double sigma = 1.0;
  DistributionSpec dist_x;
  DistributionSpec dist_xi;
  ContaminationMode mode = ContaminationMode::kResponseGross;
  double magnitude = 10.0;
  double rho = 0.0;
  double beta_magnitude = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GeneratedData {
  TrueModel model;
  RegressionSample sample;
  std::vector<long> outliers;
};

GeneratedData generate(const Scenario& sc);
GroundTruth ground_truth(const Scenario& sc, const GeneratedData& data);

/// Reads a [table] of TheoryConstants keys on top of `base`.
TheoryConstants read_theory_constants(const Config& cfg, const std::string& table, TheoryConstants base);

/// Reads an optional "unit_mean" / "raw" key, raising ConfigError on other values.
WeightScaling read_weight_scaling(const Config& cfg, const std::string& key);

/// True-constant plug-ins for a synthetic model: K, sigma, s and the covariance norms.
ModelConstants oracle_constants(const TrueModel& model);

/// Fills kappa_l from the sparse eigenvalue of Sigma (and kappa from kappa_l) unless
/// they were set explicitly.
TheoryConstants with_model_kappas(TheoryConstants tc, const TrueModel& model, bool kappa_set, bool kappa_l_set);

/// estimator: "1", "2" or "lasso". The lasso baseline runs on the raw sample with the
/// lambda_s of the contamination-aware tuning.
struct EstimatorRun {
  EstimateReport report;
  ResultRow row;
};
EstimatorRun run_estimator(const std::string& estimator, const RegressionSample& sample, long o,
                           const ModelConstants& mc, const TheoryConstants& tc, const EstimateOptions& opts,
                           std::optional<double> tau_suc_override = std::nullopt);

struct ExperimentConfig {
  std::vector<long> n, d, s, o;
  std::vector<double> outlier_fraction;  ///< alternative to `o`: o = round(fraction * n)
  std::vector<double> sigma{1.0};
  std::vector<std::string> dist_x{"gaussian"}, dist_xi{"gaussian"}, mode{"response_gross"};
  std::vector<double> magnitude{10.0};
  std::vector<std::string> estimators{"1"};
  int seeds = 1;
  std::uint64_t base_seed = 1;
  double rho = 0.0;
  double beta_magnitude = 1.0;
  TheoryConstants constants;
  bool kappa_set = false, kappa_l_set = false;
  int max_iter = 20000;
  WeightScaling scaling = WeightScaling::kUnitMean;
  int workers = 1;
  std::string out_dir = "results";

  /// Throws ConfigError naming the offending key.
  static ExperimentConfig from_config(const Config& cfg);
};

struct Cell {
  Scenario scenario;
  std::string estimator;
  int replicate = 0;
  std::string key() const;  ///< resumability key, includes the seed
};

std::vector<Cell> expand_grid(const ExperimentConfig& cfg);

ResultRow run_cell(const Cell& cell, const ExperimentConfig& cfg);

struct RateRow {
  std::string axis;
  std::string group;
  RateFit fit;
  int points = 0;
};

/// Slopes of median err_l2 against each grid axis with at least three positive values.
std::vector<RateRow> compute_rates(const std::vector<ResultRow>& rows);

struct ExperimentSummary {
  std::size_t cells = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};

/// Writes <out_dir>/results.csv (appending, resumable) and <out_dir>/rates.csv.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

std::string row_key(const ResultRow& row);

}  // namespace rsparse
