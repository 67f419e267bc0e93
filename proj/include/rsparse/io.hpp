#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsparse/datagen.hpp"
#include "rsparse/eval.hpp"
#include "rsparse/pipeline.hpp"

namespace rsparse {

/// "%.17g": round-trips every double.
std::string format_double(double v);

/// Header `y,x1,...,xd`, one row per observation.
void write_sample_csv(const std::string& path, const RegressionSample& sample);
/// Throws ConfigError with a line number on malformed input.
RegressionSample read_sample_csv(const std::string& path);

/// Everything needed to score a fit on a generated sample.
struct GroundTruth {
  TrueModel model;
  std::vector<long> outliers;
  std::string dist_x = "gaussian";
  std::string dist_xi = "gaussian";
  std::string mode = "response_gross";
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  long n = 0;
};

void write_truth_json(const std::string& path, const GroundTruth& truth);
GroundTruth read_truth_json(const std::string& path);

/// `sample.csv` -> `sample.truth.json`
std::string truth_path_for(const std::string& sample_path);

/// One estimate in the fixed results schema, plus the cell columns used by the harness.
struct ResultRow {
  long n = 0, d = 0, s = 0, o = 0;
  std::uint64_t seed = 0;
  std::optional<ErrorTriple> err;
  bool weight_fail = false;
  double kkt_residual = 0.0;
  int iterations = 0;
  // Cell description (experiment harness only).
  std::string estimator = "1";
  double sigma = 0.0;
  std::string dist_x, dist_xi, mode;
  double magnitude = 0.0;
  std::string status = "ok";
};

/// The stable columns, in order.
const std::vector<std::string>& result_columns();
/// result_columns() followed by the cell columns.
const std::vector<std::string>& experiment_columns();

std::string format_result_row(const ResultRow& row, bool with_cell_columns);
/// Parses a row written by format_result_row(row, true).
ResultRow parse_result_row(const std::string& line);

/// Flat `key=value` lines, one per field, fixed order.
std::string format_record(const EstimateReport& rep, const ResultRow& row);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace rsparse
