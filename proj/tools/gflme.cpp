// Command-line front end: dataset ingestion, estimator fits, simulation
// studies, and bootstrap confidence bands.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gflme/bootstrap.hpp"
#include "gflme/csv.hpp"
#include "gflme/dataset.hpp"
#include "gflme/goldens.hpp"
#include "gflme/montecarlo.hpp"
#include "gflme/pipeline.hpp"
#include "gflme/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace gflme;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return msg;
}

void write_coefficients_csv(const FitResult& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "label,estimate,exp_estimate\n";
  const VectorXd& coef = fit.glm_diag.coefficients;
  for (Eigen::Index c = 0; c < coef.size(); ++c)
    out << fit.coef_labels[c] << ',' << fmt_double(coef(c)) << ','
        << fmt_double(std::exp(coef(c))) << '\n';
}

void write_beta1_csv(const FitResult& fit, const Grid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "t,estimate\n";
  for (Eigen::Index h = 0; h < grid.size(); ++h)
    out << fmt_double(grid.points(h)) << ',' << fmt_double(fit.beta1_on_grid(h)) << '\n';
}

struct DataFlags {
  std::string functional, scalar, outcomes;
  std::string true_functional, true_scalar;
  std::string family = "binomial";
  long grid_points = 0;
};

void add_data_flags(CLI::App* cmd, DataFlags& flags) {
  cmd->add_option("--functional", flags.functional,
                  "long CSV: subject_id,replicate,time_index,value")
      ->required();
  cmd->add_option("--scalar", flags.scalar, "long CSV: subject_id,replicate,value")
      ->required();
  cmd->add_option("--outcomes", flags.outcomes, "CSV: subject_id,y[,z...]")->required();
  cmd->add_option("--family", flags.family, "binomial | gaussian")
      ->check(CLI::IsMember({"binomial", "gaussian"}));
  cmd->add_option("--grid-points", flags.grid_points,
                  "grid size; 0 infers it from the largest time_index");
  cmd->add_option("--true-functional", flags.true_functional,
                  "true curves (oracle estimator only)");
  cmd->add_option("--true-scalar", flags.true_scalar,
                  "true scalars (oracle estimator only)");
}

struct EstimatorFlags {
  std::string estimator;
  int kn = 0;
  int naive_session = 1;
  std::vector<double> simex_lambdas;
  int simex_s = 200;
  bool no_intercept = false;
  bool rc_smooth = false;
  int rc_window = 5;
  std::string known_cov_matrix, known_cov_scalar;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& flags) {
  cmd->add_option("--estimator", flags.estimator, "oracle | average | naive | simex | rc")
      ->required()
      ->check(CLI::IsMember({"oracle", "average", "naive", "simex", "rc"}));
  cmd->add_option("--kn", flags.kn, "basis dimension; 0 selects from sample size");
  cmd->add_option("--naive-session", flags.naive_session, "1-based session for naive");
  cmd->add_option("--simex-lambdas", flags.simex_lambdas, "SIMEX lambda grid")
      ->delimiter(',');
  cmd->add_option("--simex-s", flags.simex_s, "SIMEX repetitions per lambda");
  cmd->add_flag("--no-intercept", flags.no_intercept, "drop the intercept column");
  cmd->add_flag("--rc-smooth", flags.rc_smooth, "smooth calibrated curves along t");
  cmd->add_option("--rc-window", flags.rc_window, "moving-average window for --rc-smooth");
  cmd->add_option("--known-cov-matrix", flags.known_cov_matrix,
                  "known error covariance matrix CSV");
  cmd->add_option("--known-cov-scalar", flags.known_cov_scalar,
                  "known scalar error variance CSV");
  cmd->add_option("--seed", flags.seed, "RNG seed");
  cmd->add_option("--threads", flags.threads, "worker threads; 0 = all cores");
}

PipelineConfig make_pipeline_config(const EstimatorFlags& flags, Eigen::Index grid_size) {
  PipelineConfig cfg;
  cfg.kn = flags.kn;
  cfg.intercept = !flags.no_intercept;
  cfg.naive_session = flags.naive_session;
  if (!flags.simex_lambdas.empty()) cfg.simex.lambda_grid = flags.simex_lambdas;
  cfg.simex.repetitions = flags.simex_s;
  cfg.simex.seed = flags.seed;
  cfg.rc.smooth = flags.rc_smooth;
  cfg.rc.smooth_window = flags.rc_window;
  if (!flags.known_cov_matrix.empty() || !flags.known_cov_scalar.empty()) {
    if (flags.known_cov_matrix.empty() || flags.known_cov_scalar.empty())
      throw UsageError("--known-cov-matrix and --known-cov-scalar must be given together");
    cfg.known_errcov =
        load_known_cov(flags.known_cov_matrix, flags.known_cov_scalar, grid_size);
  }
  return cfg;
}

GflmDataset load_from_flags(const DataFlags& flags, EstimatorKind kind) {
  if (kind == EstimatorKind::Oracle &&
      (flags.true_functional.empty() || flags.true_scalar.empty()))
    throw UsageError("--estimator oracle requires --true-functional and --true-scalar");
  GflmDataset ds = load_dataset(flags.functional, flags.scalar, flags.outcomes,
                                flags.grid_points, family_from_string(flags.family));
  if (!flags.true_functional.empty() && !flags.true_scalar.empty())
    attach_truth(ds, flags.true_functional, flags.true_scalar);
  return ds;
}

void validate_simex_flags(const EstimatorFlags& flags) {
  if (flags.simex_s < 2) throw UsageError("--simex-s must be >= 2");
  for (double l : flags.simex_lambdas)
    if (!(l >= 0.0)) throw UsageError("--simex-lambdas values must be >= 0");
  if (flags.naive_session < 1) throw UsageError("--naive-session must be >= 1");
}

int run_fit(const DataFlags& data_flags, const EstimatorFlags& est_flags,
            const std::string& out_dir, bool dump_trace, bool dump_calibration) {
  validate_simex_flags(est_flags);
  const EstimatorKind kind = estimator_from_string(est_flags.estimator);
  const GflmDataset ds = load_from_flags(data_flags, kind);
  const PipelineConfig cfg = make_pipeline_config(est_flags, ds.W1.grid.size());
  fs::create_directories(out_dir);

  FitResult fit;
  if (kind == EstimatorKind::Simex) {
    const ErrorCovariance errcov =
        cfg.known_errcov ? *cfg.known_errcov : estimate_error_cov(ds.W1, ds.W2);
    const BSplineBasis basis = cfg.make_basis(ds.n());
    auto [res, trace] =
        run_simex(ds.W1, ds.W2, ds.Z, ds.z_labels, ds.y, basis, ds.W1.grid, ds.family,
                  cfg.simex, errcov, cfg.intercept, cfg.glm, est_flags.threads);
    fit = std::move(res);
    if (dump_trace) write_trace_csv(trace, out_dir + "/trace.csv");
  } else {
    fit = run_estimator(ds, kind, cfg, est_flags.threads);
    if (kind == EstimatorKind::Rc && dump_calibration)
      write_calibration_csv(ds.W1.grid, calibrate_functional(ds.W1, cfg.rc),
                            out_dir + "/calibration.csv");
  }
  write_coefficients_csv(fit, out_dir + "/coefficients.csv");
  write_beta1_csv(fit, ds.W1.grid, out_dir + "/beta1.csv");
  return 0;
}

int run_simulate(const std::string& scenario_path, std::optional<int> replications,
                 std::optional<std::uint64_t> seed, const std::string& out_dir,
                 unsigned threads) {
  SimScenario sc = load_scenario(scenario_path);
  if (replications) {
    if (*replications < 1) throw UsageError("--replications must be >= 1");
    sc.n_replications = *replications;
  }
  if (seed) sc.seed = *seed;
  const MetricsReport report = run_study(sc, threads);
  fs::create_directories(out_dir);
  write_metrics_csv(report, out_dir + "/metrics.csv");
  if (report.flagged)
    std::cerr << "warning: more than 2% of replications failed for at least one estimator\n";
  return 0;
}

int run_bootstrap_cmd(const DataFlags& data_flags, const EstimatorFlags& est_flags, int B,
                      const std::string& out_dir) {
  validate_simex_flags(est_flags);
  if (B < 2) throw UsageError("--b must be >= 2");
  const EstimatorKind kind = estimator_from_string(est_flags.estimator);
  const GflmDataset ds = load_from_flags(data_flags, kind);
  const PipelineConfig cfg = make_pipeline_config(est_flags, ds.W1.grid.size());
  const BootstrapBands bands =
      bootstrap_ci(ds, kind, cfg, B, est_flags.seed, 0.95, est_flags.threads);
  fs::create_directories(out_dir);
  write_beta1_bands_csv(bands, ds.W1.grid, out_dir + "/beta1_bands.csv");
  write_scalar_bands_csv(bands, out_dir + "/scalar_bands.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized functional linear models with measurement-error correction"};
  app.require_subcommand(1);

  DataFlags fit_data, boot_data;
  EstimatorFlags fit_est, boot_est;
  std::string fit_out, boot_out, sim_out;
  bool dump_trace = false, dump_calibration = false;

  CLI::App* fit = app.add_subcommand("fit", "fit one estimator to a dataset");
  add_data_flags(fit, fit_data);
  add_estimator_flags(fit, fit_est);
  fit->add_option("--out", fit_out, "output directory")->required();
  fit->add_flag("--dump-trace", dump_trace, "write the SIMEX trace CSV");
  fit->add_flag("--dump-calibration", dump_calibration, "write RC calibration diagnostics");

  std::string scenario_path;
  std::optional<int> replications;
  std::optional<std::uint64_t> sim_seed;
  unsigned sim_threads = 0;
  CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo scenario");
  sim->add_option("--scenario", scenario_path, "scenario key=value file")->required();
  sim->add_option("--replications", replications, "override scenario n_replications");
  sim->add_option("--seed", sim_seed, "override scenario seed");
  sim->add_option("--threads", sim_threads, "worker threads; 0 = all cores");
  sim->add_option("--out", sim_out, "output directory")->required();

  int B = 500;
  CLI::App* boot = app.add_subcommand("bootstrap", "percentile bootstrap bands");
  add_data_flags(boot, boot_data);
  add_estimator_flags(boot, boot_est);
  boot->add_option("--b", B, "number of bootstrap resamples");
  boot->add_option("--out", boot_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 1;
  }

  try {
    if (fit->parsed()) return run_fit(fit_data, fit_est, fit_out, dump_trace, dump_calibration);
    if (sim->parsed())
      return run_simulate(scenario_path, replications, sim_seed, sim_out, sim_threads);
    if (boot->parsed()) return run_bootstrap_cmd(boot_data, boot_est, B, boot_out);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << one_line(e.what()) << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: data: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: data: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: numeric: " << one_line(e.what()) << '\n';
    return 3;
  }
  return 0;
}
