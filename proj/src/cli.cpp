#include "rsparse/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rsparse/config.hpp"
#include "rsparse/errors.hpp"
#include "rsparse/eval.hpp"
#include "rsparse/experiment.hpp"
#include "rsparse/io.hpp"
#include "rsparse/thresholding.hpp"

namespace rsparse {

namespace {

const std::vector<std::string> kDataKeys = {"data.n",     "data.d",         "data.s",       "data.o",
                                            "data.sigma", "data.dist_x",    "data.dist_xi", "data.mode",
                                            "data.magnitude", "data.rho",   "data.beta_magnitude", "data.seed"};

const std::vector<std::string> kConstantsKeys = {
    "constants.c_s",   "constants.c_r",   "constants.c_re", "constants.kappa", "constants.kappa_l",
    "constants.c_star", "constants.c_eps", "constants.delta", "constants.c_o",  "model.s",
    "model.o",         "model.K",         "model.sigma",    "model.sigma_op",  "solver.max_iter", "solver.weight_scaling"};

long checked_integer(const Config& cfg, const std::string& key, long fallback) {
  if (!cfg.has(key)) return fallback;
  return cfg.integer(key);
}

Scenario scenario_from(const Config& cfg) {
  cfg.require_known(kDataKeys);
  Scenario sc;
  sc.n = checked_integer(cfg, "data.n", sc.n);
  sc.d = checked_integer(cfg, "data.d", sc.d);
  sc.s = static_cast<int>(checked_integer(cfg, "data.s", sc.s));
  sc.o = checked_integer(cfg, "data.o", sc.o);
  sc.sigma = cfg.number_or("data.sigma", sc.sigma);
  sc.magnitude = cfg.number_or("data.magnitude", sc.magnitude);
  sc.rho = cfg.number_or("data.rho", sc.rho);
  sc.beta_magnitude = cfg.number_or("data.beta_magnitude", sc.beta_magnitude);
  const long seed = checked_integer(cfg, "data.seed", 1);
  if (seed < 0) throw ConfigError("data.seed must be nonnegative", cfg.line_of("data.seed"));
  sc.seed = static_cast<std::uint64_t>(seed);
  auto field = [&](const char* key, auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(std::string(key) + ": " + e.what(), cfg.line_of(key));
    }
  };
  field("data.dist_x", [&] { sc.dist_x = DistributionSpec::parse(cfg.string_or("data.dist_x", "gaussian")); sc.dist_x.validate(); });
  field("data.dist_xi", [&] { sc.dist_xi = DistributionSpec::parse(cfg.string_or("data.dist_xi", "gaussian")); sc.dist_xi.validate(); });
  field("data.mode", [&] { sc.mode = parse_contamination_mode(cfg.string_or("data.mode", "response_gross")); });
  const char* checks[][2] = {{"data.n", "n"}, {"data.d", "d"}, {"data.s", "s"}, {"data.o", "o"},
                             {"data.sigma", "sigma"}, {"data.magnitude", "magnitude"}, {"data.rho", "rho"}};
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    // Name the offending field with its line.
    const std::string msg = e.what();
    for (const auto& kv : checks) {
      if (msg.rfind(kv[1], 0) == 0) throw ConfigError(std::string(kv[0]) + ": " + msg, cfg.line_of(kv[0]));
    }
    throw;
  }
  return sc;
}

struct FitInputs {
  RegressionSample sample;
  std::optional<GroundTruth> truth;
  ModelConstants mc;
  TheoryConstants tc;
  long o = 0;
  int max_iter = 20000;
  WeightScaling scaling = WeightScaling::kUnitMean;
};

FitInputs load_fit_inputs(const std::string& sample_path, const std::string& constants_file,
                          const std::string& truth_file, std::uint64_t seed) {
  FitInputs in;
  in.sample = read_sample_csv(sample_path);
  Config cfg;
  if (!constants_file.empty()) {
    cfg = Config::load(constants_file);
    cfg.require_known(kConstantsKeys);
  }
  in.tc = read_theory_constants(cfg, "constants", TheoryConstants{});
  in.max_iter = static_cast<int>(cfg.integer_or("solver.max_iter", 20000));
  in.scaling = read_weight_scaling(cfg, "solver.weight_scaling");

  std::string tpath = truth_file;
  if (tpath.empty() && std::filesystem::exists(truth_path_for(sample_path))) tpath = truth_path_for(sample_path);
  if (!tpath.empty()) {
    in.truth = read_truth_json(tpath);
    if (in.truth->model.beta_star.size() != in.sample.d() || in.truth->n != in.sample.n()) {
      throw ConfigError("ground truth '" + tpath + "' does not match the sample dimensions");
    }
    in.mc = oracle_constants(in.truth->model);
    in.tc = with_model_kappas(in.tc, in.truth->model, cfg.has("constants.kappa"), cfg.has("constants.kappa_l"));
    in.o = static_cast<long>(in.truth->outliers.size());
  } else {
    if (!cfg.has("model.s")) throw ConfigError("without a ground-truth file, model.s must be given in the constants file");
    in.mc = estimate_model_constants(in.sample, static_cast<int>(cfg.integer("model.s")), seed);
  }
  if (cfg.has("model.s")) in.mc.s = static_cast<int>(cfg.integer("model.s"));
  if (cfg.has("model.K")) in.mc.K = cfg.number("model.K");
  if (cfg.has("model.sigma")) in.mc.sigma = cfg.number("model.sigma");
  if (cfg.has("model.sigma_op")) {
    in.mc.sigma_op = cfg.number("model.sigma_op");
    in.mc.sigma_half_op = std::sqrt(in.mc.sigma_op);
  }
  if (cfg.has("model.o")) in.o = cfg.integer("model.o");
  if (in.mc.s < 1 || in.mc.s > in.sample.d()) throw ConfigError("model.s must lie in [1, d]");
  if (in.o < 0 || in.o > in.sample.n()) throw ConfigError("model.o must lie in [0, n]");
  return in;
}

int cmd_generate(const std::string& config_path, std::optional<long> seed, std::string out_path, std::ostream& out) {
  const Config cfg = Config::load(config_path);
  Scenario sc = scenario_from(cfg);
  if (seed) {
    if (*seed < 0) throw ConfigError("--seed must be nonnegative");
    sc.seed = static_cast<std::uint64_t>(*seed);
  }
  if (out_path.empty()) out_path = "sample.csv";
  const GeneratedData g = generate(sc);
  write_sample_csv(out_path, g.sample);
  const std::string tpath = truth_path_for(out_path);
  write_truth_json(tpath, ground_truth(sc, g));
  out << "sample=" << out_path << "\ntruth=" << tpath << '\n';
  return kExitOk;
}

int cmd_fit(const std::string& sample_path, const std::string& estimator, const std::string& constants_file,
            const std::string& truth_file, const std::string& out_path, std::optional<double> tau_suc,
            std::uint64_t seed, std::ostream& out) {
  FitInputs in = load_fit_inputs(sample_path, constants_file, truth_file, seed);
  EstimateOptions opts;
  opts.solver.max_iter = in.max_iter;
  opts.scaling = in.scaling;
  EstimatorRun run = run_estimator(estimator, in.sample, in.o, in.mc, in.tc, opts, tau_suc);
  run.row.seed = in.truth ? in.truth->seed : seed;
  run.report.constants_source = in.truth ? "oracle" : "estimated";
  if (in.truth) run.row.err = error_metrics(run.report.beta_hat, in.truth->model.beta_star, in.truth->model.Sigma);
  out << format_record(run.report, run.row);
  if (!out_path.empty()) {
    const bool fresh = !std::filesystem::exists(out_path) || std::filesystem::file_size(out_path) == 0;
    std::ofstream csv(out_path, std::ios::app);
    if (!csv) throw ConfigError("cannot write '" + out_path + "'");
    if (fresh) {
      std::string h;
      for (const auto& c : result_columns()) h += (h.empty() ? "" : ",") + c;
      csv << h << '\n';
    }
    csv << format_result_row(run.row, false) << '\n';
  }
  return run.report.weight_fail ? kExitWeightFail : kExitOk;
}

int cmd_weights(const std::string& sample_path, const std::string& constants_file, const std::string& truth_file,
                const std::string& out_path, std::optional<double> tau_suc, std::uint64_t seed, std::ostream& out) {
  FitInputs in = load_fit_inputs(sample_path, constants_file, truth_file, seed);
  Tuning t = tuning_with_outliers(in.sample.n(), in.sample.d(), in.o, in.mc, in.tc);
  if (tau_suc) t.weights->tau_suc = *tau_suc;
  const Mat Xt = threshold_matrix(in.sample.X, t.tau_x);
  const ComputeWeightResult cw = compute_weights(Xt, *t.weights);
  out << "weight_fail=" << (cw.success ? "false" : "true") << '\n';
  out << "weight_value=" << format_double(cw.upper_bound) << '\n';
  out << "uniform_value=" << format_double(cw.uniform_value) << '\n';
  out << "tau_suc=" << format_double(cw.tau_suc) << '\n';
  out << "outer_iterations=" << cw.outer_iterations << '\n';
  std::ostringstream rows;
  rows << "index,weight\n";
  for (long i = 0; i < cw.weights.w.size(); ++i) rows << i << ',' << format_double(cw.weights.w[i]) << '\n';
  if (out_path.empty()) {
    out << rows.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw ConfigError("cannot write '" + out_path + "'");
    f << rows.str();
  }
  return cw.success ? kExitOk : kExitWeightFail;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir, std::optional<int> workers,
                   std::ostream& out) {
  ExperimentConfig ec = ExperimentConfig::from_config(Config::load(config_path));
  if (!out_dir.empty()) ec.out_dir = out_dir;
  if (workers) ec.workers = std::max(1, *workers);
  const ExperimentSummary s = run_experiment(ec);
  out << "cells=" << s.cells << "\nskipped=" << s.skipped << "\nfailed=" << s.failed << "\nout=" << ec.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust sparse regression under heavy tails and outliers", "rsparse"};
  app.require_subcommand(1);

  std::string config, out_path, sample, estimator = "1", constants_file, truth;
  std::optional<long> seed;
  std::optional<double> tau_suc;
  std::optional<int> workers;

  auto* gen = app.add_subcommand("generate", "Write a synthetic sample CSV and its ground-truth sidecar");
  gen->add_option("--config", config, "data config (TOML subset)")->required();
  gen->add_option("--seed", seed, "override data.seed");
  gen->add_option("--out", out_path, "sample CSV path (default sample.csv)");

  auto* fit = app.add_subcommand("fit", "Fit estimator I or II to a sample CSV");
  fit->add_option("sample", sample, "sample CSV")->required();
  fit->add_option("--estimator", estimator, "1, 2 or lasso")->check(CLI::IsMember({"1", "2", "lasso"}));
  fit->add_option("--constants-file", constants_file, "[constants] and [model] overrides");
  fit->add_option("--truth", truth, "ground-truth sidecar (default: <sample>.truth.json if present)");
  fit->add_option("--out", out_path, "append a results CSV row here");
  fit->add_option("--tau-suc", tau_suc, "override the weight-stage success threshold");
  fit->add_option("--seed", seed, "seed for constant estimation");

  auto* wts = app.add_subcommand("weights", "Compute and dump sample weights");
  wts->add_option("sample", sample, "sample CSV")->required();
  wts->add_option("--constants-file", constants_file, "[constants] and [model] overrides");
  wts->add_option("--truth", truth, "ground-truth sidecar");
  wts->add_option("--out", out_path, "weights CSV path (default: standard output)");
  wts->add_option("--tau-suc", tau_suc, "override the success threshold");
  wts->add_option("--seed", seed, "seed for constant estimation");

  auto* exp = app.add_subcommand("experiment", "Run a grid experiment");
  exp->add_option("--config", config, "experiment config")->required();
  exp->add_option("--out", out_path, "output directory (overrides run.out)");
  exp->add_option("--workers", workers, "worker threads (overrides run.workers)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::uint64_t fit_seed = seed ? static_cast<std::uint64_t>(std::max(0L, *seed)) : 1;
  try {
    if (*gen) return cmd_generate(config, seed, out_path, out);
    if (*fit) return cmd_fit(sample, estimator, constants_file, truth, out_path, tau_suc, fit_seed, out);
    if (*wts) return cmd_weights(sample, constants_file, truth, out_path, tau_suc, fit_seed, out);
    if (*exp) return cmd_experiment(config, out_path, workers, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace rsparse
