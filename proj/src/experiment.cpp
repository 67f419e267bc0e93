#include "rsparse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "rsparse/errors.hpp"
#include "rsparse/eval.hpp"

namespace rsparse {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string data_key(const Scenario& sc) {
  std::ostringstream os;
  os << "n=" << sc.n << ";d=" << sc.d << ";s=" << sc.s << ";o=" << sc.o << ";sigma=" << format_double(sc.sigma)
     << ";dist_x=" << sc.dist_x.name() << ";dist_xi=" << sc.dist_xi.name() << ";mode=" << to_string(sc.mode)
     << ";magnitude=" << format_double(sc.magnitude);
  return os.str();
}

}  // namespace

void Scenario::validate() const {
  if (n < 1) throw ConfigError("n must be positive");
  if (d < 1) throw ConfigError("d must be positive");
  if (s < 1 || s > d) throw ConfigError("s must lie in [1, d]");
  if (o < 0 || o > n) throw ConfigError("o must lie in [0, n] (o = " + std::to_string(o) + ", n = " + std::to_string(n) + ")");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  if (!(magnitude > 0.0)) throw ConfigError("magnitude must be positive");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("rho must lie in (-1, 1)");
  dist_x.validate();
  dist_xi.validate();
}

GeneratedData generate(const Scenario& sc) {
  sc.validate();
  GeneratedData g;
  const double K = std::pow(sc.dist_x.directional_kurtosis(), 0.25);
  g.model = make_true_model(sc.d, sc.s, sc.sigma, K, sc.rho, sc.beta_magnitude, derive_seed(sc.seed, 1));
  g.sample = sample_clean(g.model, sc.dist_x, sc.dist_xi, sc.n, derive_seed(sc.seed, 2));
  g.outliers = draw_outlier_set(sc.n, sc.o, derive_seed(sc.seed, 3));
  ContaminationSpec cs{g.outliers, sc.mode, sc.magnitude};
  g.sample = contaminate(g.sample, cs, g.model, derive_seed(sc.seed, 4));
  return g;
}

GroundTruth ground_truth(const Scenario& sc, const GeneratedData& data) {
  GroundTruth t;
  t.model = data.model;
  t.outliers = data.outliers;
  t.dist_x = sc.dist_x.name();
  t.dist_xi = sc.dist_xi.name();
  t.mode = to_string(sc.mode);
  t.magnitude = sc.magnitude;
  t.seed = sc.seed;
  t.n = sc.n;
  return t;
}

TheoryConstants read_theory_constants(const Config& cfg, const std::string& table, TheoryConstants tc) {
  const std::string p = table.empty() ? "" : table + ".";
  tc.c_s = cfg.number_or(p + "c_s", tc.c_s);
  tc.c_r = cfg.number_or(p + "c_r", tc.c_r);
  tc.c_re = cfg.number_or(p + "c_re", tc.c_re);
  tc.kappa = cfg.number_or(p + "kappa", tc.kappa);
  tc.kappa_l = cfg.number_or(p + "kappa_l", tc.kappa_l);
  if (cfg.has(p + "c_star")) tc.c_star = cfg.number(p + "c_star");
  tc.c_eps = cfg.number_or(p + "c_eps", tc.c_eps);
  tc.delta = cfg.number_or(p + "delta", tc.delta);
  tc.c_o = cfg.number_or(p + "c_o", tc.c_o);
  try {
    tc.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[") + table + "]: " + e.what());
  }
  return tc;
}

WeightScaling read_weight_scaling(const Config& cfg, const std::string& key) {
  if (!cfg.has(key)) return WeightScaling::kUnitMean;
  try {
    return parse_weight_scaling(cfg.string(key));
  } catch (const DomainError& e) {
    throw ConfigError(key + ": " + e.what(), cfg.line_of(key));
  }
}

ModelConstants oracle_constants(const TrueModel& model) {
  ModelConstants mc;
  mc.K = model.K;
  mc.sigma = model.sigma;
  mc.s = model.s;
  const auto [op, half] = covariance_norms(model.Sigma);
  mc.sigma_op = op;
  mc.sigma_half_op = half;
  mc.beta_max = model.beta_max;
  mc.beta_l1 = model.beta_star.lpNorm<1>();
  return mc;
}

TheoryConstants with_model_kappas(TheoryConstants tc, const TrueModel& model, bool kappa_set, bool kappa_l_set) {
  if (!kappa_l_set) tc.kappa_l = std::sqrt(sparse_eigen_floor(model.Sigma, model.s));
  if (!kappa_set) tc.kappa = tc.kappa_l;
  return tc;
}

EstimatorRun run_estimator(const std::string& estimator, const RegressionSample& sample, long o,
                           const ModelConstants& mc, const TheoryConstants& tc, const EstimateOptions& opts,
                           std::optional<double> tau_suc_override) {
  EstimatorRun run;
  run.row.n = sample.n();
  run.row.d = sample.d();
  run.row.s = mc.s;
  run.row.o = o;
  run.row.estimator = estimator;
  if (estimator == "1") {
    run.report = estimate_I(sample, tuning_no_outliers(sample.n(), sample.d(), mc, tc), opts);
  } else if (estimator == "2") {
    Tuning t = tuning_with_outliers(sample.n(), sample.d(), o, mc, tc);
    if (tau_suc_override) t.weights->tau_suc = *tau_suc_override;
    run.report = estimate_II(sample, t, opts);
  } else if (estimator == "lasso") {
    const Tuning t = tuning_with_outliers(sample.n(), sample.d(), o, mc, tc);
    run.report.tuning = t;
    run.report.fit = fit_lasso_baseline(sample, t.huber.lambda_s, opts.solver);
    run.report.beta_hat = run.report.fit.beta_hat;
  } else {
    throw ConfigError("unknown estimator '" + estimator + "' (expected 1, 2 or lasso)");
  }
  run.report.conditions = condition_report(run.report.tuning, mc, tc);
  run.row.weight_fail = run.report.weight_fail;
  run.row.kkt_residual = run.report.fit.kkt_residual;
  run.row.iterations = run.report.fit.iterations;
  return run;
}

// ---------------------------------------------------------------------------
// Experiment grids

namespace {

const std::vector<std::string> kExperimentKeys = {
    "grid.n", "grid.d", "grid.s", "grid.o", "grid.outlier_fraction", "grid.sigma", "grid.dist_x", "grid.dist_xi",
    "grid.mode", "grid.magnitude", "grid.estimator", "run.seeds", "run.base_seed", "run.rho", "run.beta_magnitude",
    "run.max_iter", "run.weight_scaling", "run.workers", "run.out", "constants.c_s", "constants.c_r", "constants.c_re", "constants.kappa",
    "constants.kappa_l", "constants.c_star", "constants.c_eps", "constants.delta", "constants.c_o"};

std::vector<long> positive_longs(const Config& cfg, const std::string& key, bool allow_zero) {
  std::vector<long> out;
  for (double v : cfg.numbers(key)) {
    if (v != std::floor(v) || v < (allow_zero ? 0.0 : 1.0)) {
      throw ConfigError(key + ": expected " + (allow_zero ? "nonnegative" : "positive") + " integers", cfg.line_of(key));
    }
    out.push_back(static_cast<long>(v));
  }
  if (out.empty()) throw ConfigError(key + ": empty grid", cfg.line_of(key));
  return out;
}

template <typename T>
std::vector<T> nonempty(std::vector<T> v, const Config& cfg, const std::string& key) {
  if (v.empty()) throw ConfigError(key + ": empty grid", cfg.line_of(key));
  return v;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  cfg.require_known(kExperimentKeys);
  ExperimentConfig ec;
  for (const char* k : {"grid.n", "grid.d", "grid.s"}) {
    if (!cfg.has(k)) throw ConfigError(std::string(k) + ": required grid is missing");
  }
  ec.n = positive_longs(cfg, "grid.n", false);
  ec.d = positive_longs(cfg, "grid.d", false);
  ec.s = positive_longs(cfg, "grid.s", false);
  if (cfg.has("grid.o") && cfg.has("grid.outlier_fraction")) {
    throw ConfigError("grid.o and grid.outlier_fraction are mutually exclusive", cfg.line_of("grid.outlier_fraction"));
  }
  if (cfg.has("grid.outlier_fraction")) {
    ec.outlier_fraction = nonempty(cfg.numbers("grid.outlier_fraction"), cfg, "grid.outlier_fraction");
    for (double f : ec.outlier_fraction) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("grid.outlier_fraction: values must lie in [0, 1]", cfg.line_of("grid.outlier_fraction"));
    }
  } else if (cfg.has("grid.o")) {
    ec.o = positive_longs(cfg, "grid.o", true);
  } else {
    ec.o = {0};
  }
  if (cfg.has("grid.sigma")) ec.sigma = nonempty(cfg.numbers("grid.sigma"), cfg, "grid.sigma");
  if (cfg.has("grid.dist_x")) ec.dist_x = nonempty(cfg.strings("grid.dist_x"), cfg, "grid.dist_x");
  if (cfg.has("grid.dist_xi")) ec.dist_xi = nonempty(cfg.strings("grid.dist_xi"), cfg, "grid.dist_xi");
  if (cfg.has("grid.mode")) ec.mode = nonempty(cfg.strings("grid.mode"), cfg, "grid.mode");
  if (cfg.has("grid.magnitude")) ec.magnitude = nonempty(cfg.numbers("grid.magnitude"), cfg, "grid.magnitude");
  if (cfg.has("grid.estimator")) ec.estimators = nonempty(cfg.texts("grid.estimator"), cfg, "grid.estimator");
  for (const auto& e : ec.estimators) {
    if (e != "1" && e != "2" && e != "lasso") {
      throw ConfigError("grid.estimator: unknown estimator '" + e + "'", cfg.line_of("grid.estimator"));
    }
  }
  for (const auto& name : ec.dist_x) {
    try {
      DistributionSpec::parse(name).validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("grid.dist_x: ") + e.what(), cfg.line_of("grid.dist_x"));
    }
  }
  for (const auto& name : ec.dist_xi) {
    try {
      DistributionSpec::parse(name).validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("grid.dist_xi: ") + e.what(), cfg.line_of("grid.dist_xi"));
    }
  }
  for (const auto& m : ec.mode) {
    try {
      parse_contamination_mode(m);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("grid.mode: ") + e.what(), cfg.line_of("grid.mode"));
    }
  }
  ec.seeds = static_cast<int>(cfg.integer_or("run.seeds", 1));
  if (ec.seeds < 1) throw ConfigError("run.seeds must be at least 1", cfg.line_of("run.seeds"));
  const long base = cfg.integer_or("run.base_seed", 1);
  if (base < 0) throw ConfigError("run.base_seed must be nonnegative", cfg.line_of("run.base_seed"));
  ec.base_seed = static_cast<std::uint64_t>(base);
  ec.rho = cfg.number_or("run.rho", 0.0);
  ec.beta_magnitude = cfg.number_or("run.beta_magnitude", 1.0);
  ec.max_iter = static_cast<int>(cfg.integer_or("run.max_iter", 20000));
  ec.scaling = read_weight_scaling(cfg, "run.weight_scaling");
  ec.workers = static_cast<int>(cfg.integer_or("run.workers", 1));
  if (ec.workers < 1) throw ConfigError("run.workers must be at least 1", cfg.line_of("run.workers"));
  ec.out_dir = cfg.string_or("run.out", "results");
  ec.constants = read_theory_constants(cfg, "constants", TheoryConstants{});
  ec.kappa_set = cfg.has("constants.kappa");
  ec.kappa_l_set = cfg.has("constants.kappa_l");

  // Validate every cell up front so a bad combination fails before any work.
  for (const Cell& c : expand_grid(ec)) {
    try {
      c.scenario.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }
  return ec;
}

std::string Cell::key() const {
  return data_key(scenario) + ";estimator=" + estimator + ";seed=" + std::to_string(scenario.seed);
}

std::vector<Cell> expand_grid(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  const bool by_fraction = !cfg.outlier_fraction.empty();
  const std::vector<double> o_axis =
      by_fraction ? cfg.outlier_fraction : std::vector<double>(cfg.o.begin(), cfg.o.end());
  for (long n : cfg.n)
    for (long d : cfg.d)
      for (long s : cfg.s)
        for (double ov : o_axis)
          for (double sigma : cfg.sigma)
            for (const auto& dx : cfg.dist_x)
              for (const auto& dxi : cfg.dist_xi)
                for (const auto& mode : cfg.mode)
                  for (double mag : cfg.magnitude) {
                    Scenario sc;
                    sc.n = n;
                    sc.d = d;
                    sc.s = static_cast<int>(s);
                    sc.o = by_fraction ? std::lround(ov * static_cast<double>(n)) : static_cast<long>(ov);
                    sc.sigma = sigma;
                    sc.dist_x = DistributionSpec::parse(dx);
                    sc.dist_xi = DistributionSpec::parse(dxi);
                    sc.mode = parse_contamination_mode(mode);
                    sc.magnitude = mag;
                    sc.rho = cfg.rho;
                    sc.beta_magnitude = cfg.beta_magnitude;
                    const std::uint64_t cell_hash = fnv1a(data_key(sc));
                    for (int r = 0; r < cfg.seeds; ++r) {
                      // Estimators on the same (cell, replicate) share the data.
                      sc.seed = derive_seed(cfg.base_seed ^ cell_hash, static_cast<std::uint64_t>(r)) >> 1;
                      for (const auto& est : cfg.estimators) cells.push_back(Cell{sc, est, r});
                    }
                  }
  return cells;
}

ResultRow run_cell(const Cell& cell, const ExperimentConfig& cfg) {
  const Scenario& sc = cell.scenario;
  ResultRow row;
  row.n = sc.n;
  row.d = sc.d;
  row.s = sc.s;
  row.o = sc.o;
  row.seed = sc.seed;
  row.estimator = cell.estimator;
  row.sigma = sc.sigma;
  row.dist_x = sc.dist_x.name();
  row.dist_xi = sc.dist_xi.name();
  row.mode = to_string(sc.mode);
  row.magnitude = sc.magnitude;
  try {
    const GeneratedData g = generate(sc);
    const ModelConstants mc = oracle_constants(g.model);
    const TheoryConstants tc = with_model_kappas(cfg.constants, g.model, cfg.kappa_set, cfg.kappa_l_set);
    EstimateOptions opts;
    opts.solver.max_iter = cfg.max_iter;
    opts.scaling = cfg.scaling;
    EstimatorRun run = run_estimator(cell.estimator, g.sample, sc.o, mc, tc, opts);
    run.report.constants_source = "oracle";
    row.err = error_metrics(run.report.beta_hat, g.model.beta_star, g.model.Sigma);
    row.weight_fail = run.row.weight_fail;
    row.kkt_residual = run.row.kkt_residual;
    row.iterations = run.row.iterations;
    row.status = run.report.weight_fail ? "weight_fail" : (run.report.fit.converged ? "ok" : "not_converged");
  } catch (const NumericalFailure& e) {
    row.status = std::string("numerical_failure: ") + e.what();
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

std::string row_key(const ResultRow& r) {
  std::ostringstream os;
  os << "n=" << r.n << ";d=" << r.d << ";s=" << r.s << ";o=" << r.o << ";sigma=" << format_double(r.sigma)
     << ";dist_x=" << r.dist_x << ";dist_xi=" << r.dist_xi << ";mode=" << r.mode
     << ";magnitude=" << format_double(r.magnitude) << ";estimator=" << r.estimator << ";seed=" << r.seed;
  return os.str();
}

std::vector<RateRow> compute_rates(const std::vector<ResultRow>& rows) {
  struct Axis {
    const char* name;
    long ResultRow::*field;
  };
  const Axis axes[] = {{"n", &ResultRow::n}, {"d", &ResultRow::d}, {"s", &ResultRow::s}, {"o", &ResultRow::o}};
  std::vector<RateRow> out;
  for (const Axis& ax : axes) {
    // group -> axis value -> errors
    std::map<std::string, std::map<long, std::vector<double>>> groups;
    for (const ResultRow& r : rows) {
      if (!r.err || !(r.err->err_l2 > 0.0) || r.*(ax.field) <= 0) continue;
      std::ostringstream g;
      for (const Axis& other : axes) {
        if (other.field != ax.field) g << other.name << '=' << r.*(other.field) << ';';
      }
      g << "sigma=" << format_double(r.sigma) << ";dist_x=" << r.dist_x << ";dist_xi=" << r.dist_xi
        << ";mode=" << r.mode << ";magnitude=" << format_double(r.magnitude) << ";estimator=" << r.estimator;
      groups[g.str()][r.*(ax.field)].push_back(r.err->err_l2);
    }
    for (const auto& [group, by_x] : groups) {
      if (by_x.size() < 3) continue;
      std::vector<std::pair<double, double>> pts;
      for (const auto& [x, errs] : by_x) pts.emplace_back(static_cast<double>(x), median(errs));
      out.push_back(RateRow{ax.name, group, rate_fit(pts), static_cast<int>(pts.size())});
    }
  }
  return out;
}

namespace {

// Appends rows to results.csv; the only code that touches the file during a run.
class ResultWriter {
 public:
  explicit ResultWriter(const fs::path& path) : out_(path, std::ios::app) {
    if (!out_) throw ConfigError("cannot open '" + path.string() + "' for writing");
  }
  void write(const ResultRow& row) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << format_result_row(row, true) << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::string header_line() {
  std::string h;
  for (const auto& c : experiment_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::vector<ResultRow> read_results(const fs::path& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != header_line()) throw ConfigError("existing '" + path.string() + "' has a different column layout");
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_result_row(line));
  }
  return rows;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  const std::vector<Cell> cells = expand_grid(cfg);
  if (cells.empty()) throw ConfigError("experiment grid is empty");
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const fs::path results = dir / "results.csv";

  std::set<std::string> done;
  bool fresh = !fs::exists(results) || fs::file_size(results) == 0;
  if (!fresh) {
    for (const ResultRow& r : read_results(results)) done.insert(row_key(r));
  }
  if (fresh) {
    std::ofstream(results) << header_line() << '\n';
  }

  std::vector<const Cell*> todo;
  for (const Cell& c : cells) {
    if (!done.count(c.key())) todo.push_back(&c);
  }

  ExperimentSummary summary;
  summary.cells = cells.size();
  summary.skipped = cells.size() - todo.size();
  {
    ResultWriter writer(results);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failed{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < todo.size(); i = next++) {
        const ResultRow row = run_cell(*todo[i], cfg);
        if (!row.err) ++failed;
        writer.write(row);
      }
    };
    const int nw = std::max(1, std::min<int>(cfg.workers, static_cast<int>(todo.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    summary.failed = failed;
  }

  // Canonical order so reruns and resumed runs produce identical files.
  std::vector<ResultRow> rows = read_results(results);
  auto order = [](const ResultRow& r) {
    return std::make_tuple(r.n, r.d, r.s, r.o, r.sigma, r.dist_x, r.dist_xi, r.mode, r.magnitude, r.estimator, r.seed);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return order(a) < order(b); });
  {
    std::ofstream out(results, std::ios::trunc);
    out << header_line() << '\n';
    for (const auto& r : rows) out << format_result_row(r, true) << '\n';
  }

  std::ofstream rates(dir / "rates.csv", std::ios::trunc);
  rates << "axis,group,slope,intercept,points\n";
  for (const RateRow& rr : compute_rates(rows)) {
    rates << rr.axis << ',' << '"' << rr.group << '"' << ',' << format_double(rr.fit.slope) << ','
          << format_double(rr.fit.intercept) << ',' << rr.points << '\n';
  }
  return summary;
}

}  // namespace rsparse
