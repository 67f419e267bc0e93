#include "rsparse/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rsparse/config.hpp"

namespace rsparse {

namespace {

using nlohmann::json;

json matrix_to_json(const Mat& M) {
  json rows = json::array();
  for (long i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (long j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(r);
  }
  return rows;
}

double parse_number(const std::string& cell, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + cell + "'", line);
  }
  if (used != cell.size()) throw ConfigError("not a number: '" + cell + "'", line);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

void write_sample_csv(const std::string& path, const RegressionSample& sample) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "y";
  for (long j = 0; j < sample.d(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (long i = 0; i < sample.n(); ++i) {
    out << format_double(sample.y[i]);
    for (long j = 0; j < sample.d(); ++j) out << ',' << format_double(sample.X(i, j));
    out << '\n';
  }
}

RegressionSample read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sample '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty sample file '" + path + "'", 1);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "y") throw ConfigError("sample header must start with 'y,x1'", 1);
  const long d = static_cast<long>(header.size()) - 1;
  std::vector<double> values;
  long n = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (static_cast<long>(cells.size()) != d + 1) {
      throw ConfigError("expected " + std::to_string(d + 1) + " columns, found " + std::to_string(cells.size()), lineno);
    }
    for (const auto& c : cells) values.push_back(parse_number(c, lineno));
    ++n;
  }
  if (n == 0) throw ConfigError("sample has no rows", lineno);
  RegressionSample s;
  s.y.resize(n);
  s.X.resize(n, d);
  for (long i = 0; i < n; ++i) {
    s.y[i] = values[i * (d + 1)];
    for (long j = 0; j < d; ++j) s.X(i, j) = values[i * (d + 1) + 1 + j];
  }
  return s;
}

void write_truth_json(const std::string& path, const GroundTruth& t) {
  json j;
  j["beta_star"] = std::vector<double>(t.model.beta_star.data(), t.model.beta_star.data() + t.model.beta_star.size());
  j["Sigma"] = matrix_to_json(t.model.Sigma);
  j["s"] = t.model.s;
  j["sigma"] = t.model.sigma;
  j["K"] = t.model.K;
  j["beta_max"] = t.model.beta_max;
  j["outliers"] = t.outliers;
  j["dist_x"] = t.dist_x;
  j["dist_xi"] = t.dist_xi;
  j["mode"] = t.mode;
  j["magnitude"] = t.magnitude;
  j["seed"] = t.seed;
  j["n"] = t.n;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

GroundTruth read_truth_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read ground truth '" + path + "'");
  try {
    const json j = json::parse(in);
    GroundTruth t;
    const auto beta = j.at("beta_star").get<std::vector<double>>();
    t.model.beta_star = Eigen::Map<const Vec>(beta.data(), static_cast<long>(beta.size()));
    const auto rows = j.at("Sigma").get<std::vector<std::vector<double>>>();
    t.model.Sigma.resize(static_cast<long>(rows.size()), static_cast<long>(rows.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a].size() != rows.size()) throw ConfigError("Sigma in '" + path + "' is not square");
      for (std::size_t b = 0; b < rows.size(); ++b) t.model.Sigma(a, b) = rows[a][b];
    }
    t.model.s = j.at("s").get<int>();
    t.model.sigma = j.at("sigma").get<double>();
    t.model.K = j.at("K").get<double>();
    t.model.beta_max = j.at("beta_max").get<double>();
    t.outliers = j.at("outliers").get<std::vector<long>>();
    t.dist_x = j.at("dist_x").get<std::string>();
    t.dist_xi = j.at("dist_xi").get<std::string>();
    t.mode = j.at("mode").get<std::string>();
    t.magnitude = j.at("magnitude").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.n = j.at("n").get<long>();
    return t;
  } catch (const json::exception& e) {
    throw ConfigError("malformed ground truth '" + path + "': " + e.what());
  }
}

std::string truth_path_for(const std::string& sample_path) {
  const auto dot = sample_path.rfind(".csv");
  const std::string stem = dot != std::string::npos && dot + 4 == sample_path.size() ? sample_path.substr(0, dot) : sample_path;
  return stem + ".truth.json";
}

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {"n",       "d",       "s",         "o",           "seed",       "err_l1",
                                                "err_l2",  "err_sigma", "weight_fail", "kkt_residual", "iterations"};
  return cols;
}

const std::vector<std::string>& experiment_columns() {
  static const std::vector<std::string> cols = [] {
    auto c = result_columns();
    for (const char* extra : {"estimator", "sigma", "dist_x", "dist_xi", "mode", "magnitude", "status"}) c.push_back(extra);
    return c;
  }();
  return cols;
}

std::string format_result_row(const ResultRow& r, bool with_cell_columns) {
  std::ostringstream os;
  os << r.n << ',' << r.d << ',' << r.s << ',' << r.o << ',' << r.seed << ',';
  if (r.err) {
    os << format_double(r.err->err_l1) << ',' << format_double(r.err->err_l2) << ',' << format_double(r.err->err_sigma);
  } else {
    os << ",,";
  }
  os << ',' << (r.weight_fail ? "true" : "false") << ',' << format_double(r.kkt_residual) << ',' << r.iterations;
  if (with_cell_columns) {
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '"' || c == '\n') c = ';';
    }
    os << ',' << r.estimator << ',' << format_double(r.sigma) << ',' << r.dist_x << ',' << r.dist_xi << ',' << r.mode << ','
       << format_double(r.magnitude) << ',' << status;
  }
  return os.str();
}

ResultRow parse_result_row(const std::string& line) {
  const auto c = split_csv_line(line);
  if (c.size() != experiment_columns().size()) throw ConfigError("results row has " + std::to_string(c.size()) + " columns");
  ResultRow r;
  try {
    r.n = std::stol(c[0]);
    r.d = std::stol(c[1]);
    r.s = std::stol(c[2]);
    r.o = std::stol(c[3]);
    r.seed = std::stoull(c[4]);
    if (!c[5].empty()) r.err = ErrorTriple{std::stod(c[5]), std::stod(c[6]), std::stod(c[7])};
    r.weight_fail = c[8] == "true";
    r.kkt_residual = std::stod(c[9]);
    r.iterations = std::stoi(c[10]);
    r.estimator = c[11];
    r.sigma = std::stod(c[12]);
    r.dist_x = c[13];
    r.dist_xi = c[14];
    r.mode = c[15];
    r.magnitude = std::stod(c[16]);
    r.status = c[17];
  } catch (const std::logic_error&) {
    throw ConfigError("malformed results row: " + line);
  }
  return r;
}

std::string format_record(const EstimateReport& rep, const ResultRow& row) {
  std::ostringstream os;
  const Tuning& t = rep.tuning;
  os << "estimator=" << row.estimator << '\n';
  os << "n=" << row.n << "\nd=" << row.d << "\ns=" << row.s << "\no=" << row.o << "\nseed=" << row.seed << '\n';
  os << "tau_x=" << format_double(t.tau_x) << '\n';
  os << "lambda_o=" << format_double(t.huber.lambda_o) << '\n';
  os << "lambda_s=" << format_double(t.huber.lambda_s) << '\n';
  os << "r_sigma=" << format_double(t.radii.r_sigma) << '\n';
  os << "r_1=" << format_double(t.radii.r_1) << '\n';
  os << "r_2=" << format_double(t.radii.r_2) << '\n';
  if (t.weights) {
    os << "lambda_star=" << format_double(t.weights->lambda_star) << '\n';
    os << "tau_suc=" << format_double(t.weights->tau_suc) << '\n';
    os << "epsilon=" << format_double(t.weights->epsilon) << '\n';
    os << "radius=" << format_double(t.weights->radius) << '\n';
  }
  os << "weight_fail=" << (rep.weight_fail ? "true" : "false") << '\n';
  if (rep.weight_value) os << "weight_value=" << format_double(*rep.weight_value) << '\n';
  os << "objective=" << format_double(rep.fit.objective) << '\n';
  os << "kkt_residual=" << format_double(rep.fit.kkt_residual) << '\n';
  os << "iterations=" << rep.fit.iterations << '\n';
  os << "converged=" << (rep.fit.converged ? "true" : "false") << '\n';
  if (row.err) {
    os << "err_l1=" << format_double(row.err->err_l1) << '\n';
    os << "err_l2=" << format_double(row.err->err_l2) << '\n';
    os << "err_sigma=" << format_double(row.err->err_sigma) << '\n';
  }
  os << "constants_source=" << rep.constants_source << '\n';
  for (const auto& c : rep.conditions) {
    os << "condition." << c.name << '=' << format_double(c.value) << (c.lower ? ">=" : "<=") << format_double(c.bound)
       << (c.ok() ? ":ok" : ":violated") << '\n';
  }
  os << "beta_hat=";
  for (long j = 0; j < rep.beta_hat.size(); ++j) os << (j ? "," : "") << format_double(rep.beta_hat[j]);
  os << '\n';
  return os.str();
}

}  // namespace rsparse
