#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gflme/common.hpp"
#include "gflme/csv.hpp"
#include "gflme/error_cov.hpp"
#include "gflme/estimators.hpp"
#include "gflme/parallel.hpp"

namespace gflme {

enum class Extrapolant { Quadratic };

struct SimexConfig {
  std::vector<double> lambda_grid{0.0, 0.5, 1.0, 1.5, 2.0};
  int repetitions = 200;  // S
  Extrapolant extrapolant = Extrapolant::Quadratic;
  std::uint64_t seed = 0;
  double max_lambda = 2.0;        // default upper bound, overridable
  double max_failure_frac = 0.05; // per-lambda fit failure budget

  void validate() const {
    if (repetitions < 2) throw ConfigError("simex: repetitions must be >= 2");
    if (lambda_grid.size() < 3)
      throw ConfigError("simex: quadratic extrapolation needs at least 3 lambda values");
    std::set<double> seen;
    double prev = -1.0;
    for (double l : lambda_grid) {
      if (!(l >= 0.0)) throw ConfigError("simex: lambda values must be >= 0");
      if (l > max_lambda) throw ConfigError("simex: lambda exceeds the configured bound");
      if (!seen.insert(l).second) throw ConfigError("simex: lambda values must be distinct");
      if (l < prev) throw ConfigError("simex: lambda grid must be ordered");
      prev = l;
    }
  }
};

/// Per-lambda averages of the refitted coefficients, plus how many of the S
/// pseudo-data fits were skipped at each lambda.
struct SimexTrace {
  std::vector<double> lambdas;
  MatrixXd mean_coefficients;  // |lambda_grid| x n_coef
  std::vector<int> failures;
  std::vector<std::string> coef_labels;
};

/// Ordinary least-squares quadratic in lambda, evaluated at lambda = -1.
inline double extrapolate_quadratic(const std::vector<double>& lambdas,
                                    const VectorXd& means) {
  const Eigen::Index k = static_cast<Eigen::Index>(lambdas.size());
  if (k != means.size())
    throw ShapeError("extrapolate_quadratic: lambda/mean length mismatch");
  if (k < 3)
    throw std::invalid_argument("extrapolate_quadratic: need at least 3 lambda values");
  std::set<double> distinct(lambdas.begin(), lambdas.end());
  if (static_cast<Eigen::Index>(distinct.size()) < 3)
    throw std::invalid_argument("extrapolate_quadratic: lambda values must be distinct");
  MatrixXd V(k, 3);
  for (Eigen::Index r = 0; r < k; ++r) {
    V(r, 0) = 1.0;
    V(r, 1) = lambdas[r];
    V(r, 2) = lambdas[r] * lambdas[r];
  }
  const VectorXd c = V.colPivHouseholderQr().solve(means);
  return c(0) - c(1) + c(2);
}

namespace detail {

// Holds the factored pseudo-error generator for one error covariance so the
// Cholesky is computed once per SIMEX run.
struct PseudoErrorSampler {
  MatrixXd chol_lower;
  double scalar_sd = 0.0;

  explicit PseudoErrorSampler(const ErrorCovariance& errcov)
      : chol_lower(cholesky_with_jitter(errcov.functional.matrix)),
        scalar_sd(std::sqrt(errcov.scalar_var)) {}

  // W_lambda = Wbar + sqrt(lambda) * fresh error draw. lambda == 0 returns
  // the inputs untouched without consuming randomness.
  std::pair<MatrixXd, VectorXd> apply(const MatrixXd& w1_bar, const VectorXd& w2_bar,
                                      double lambda, Rng& rng) const {
    if (lambda < 0.0) throw std::invalid_argument("simex: lambda must be >= 0");
    if (lambda == 0.0) return {w1_bar, w2_bar};
    const double root = std::sqrt(lambda);
    MatrixXd z(w1_bar.rows(), w1_bar.cols());
    fill_standard_normal(z, rng);
    MatrixXd w1 = w1_bar + root * (z * chol_lower.transpose());
    VectorXd u2(w2_bar.size());
    fill_standard_normal(u2, rng);
    VectorXd w2 = w2_bar + (root * scalar_sd) * u2;
    return {std::move(w1), std::move(w2)};
  }
};

}  // namespace detail

/// Pseudo-data with the measurement error inflated by a factor lambda: adds
/// sqrt(lambda)-scaled independent draws from GP(0, Sigma-hat) to the
/// averaged curves and N(0, sigma2-hat) to the averaged scalars.
inline std::pair<MatrixXd, VectorXd> make_pseudo_data(const MatrixXd& w1_bar,
                                                      const VectorXd& w2_bar,
                                                      const ErrorCovariance& errcov,
                                                      double lambda, Rng& rng) {
  if (w1_bar.cols() != errcov.functional.size())
    throw ShapeError("make_pseudo_data: error covariance does not match grid");
  return detail::PseudoErrorSampler(errcov).apply(w1_bar, w2_bar, lambda, rng);
}

/// Full SIMEX procedure: for each lambda, average the coefficients of S
/// pseudo-data refits (skipping and counting failed fits), then extrapolate
/// each coefficient quadratically to lambda = -1. Identical seeds and config
/// give bit-identical results; threads only changes scheduling.
inline std::pair<FitResult, SimexTrace> run_simex(
    const FunctionalReplicates& w1, const ScalarReplicates& w2, const MatrixXd& Z,
    const std::vector<std::string>& z_labels, const VectorXd& y,
    const BSplineBasis& basis, const Grid& grid, Family family, const SimexConfig& cfg,
    const ErrorCovariance& errcov, bool intercept = true, const GlmOptions& glm_opts = {},
    unsigned n_threads = 1) {
  cfg.validate();
  if (errcov.functional.size() != grid.size())
    throw ShapeError("run_simex: error covariance does not match grid");

  const MatrixXd w1_bar = replicate_mean(w1);
  const VectorXd w2_bar = replicate_mean(w2);
  const detail::PseudoErrorSampler sampler(errcov);
  const int S = cfg.repetitions;
  const Eigen::Index n_lambda = static_cast<Eigen::Index>(cfg.lambda_grid.size());

  SimexTrace trace;
  trace.lambdas = cfg.lambda_grid;
  trace.failures.assign(cfg.lambda_grid.size(), 0);

  auto fit_once = [&](const MatrixXd& curves, const VectorXd& scalars) {
    return fit_with_covariates(curves, scalars, Z, z_labels, y, basis, grid, family,
                               EstimatorKind::Simex, intercept, glm_opts);
  };

  // The lambda = 0 point is the fit on the averaged surrogates themselves;
  // it anchors the labels and the coefficient count.
  const FitResult base = fit_once(w1_bar, w2_bar);
  trace.coef_labels = base.coef_labels;
  const Eigen::Index n_coef = base.glm_diag.coefficients.size();
  trace.mean_coefficients.resize(n_lambda, n_coef);

  for (Eigen::Index li = 0; li < n_lambda; ++li) {
    const double lambda = cfg.lambda_grid[li];
    if (lambda == 0.0) {
      if (!base.glm_diag.converged || !base.glm_diag.coefficients.allFinite())
        throw NumericError("simex: fit on the averaged surrogates did not converge");
      trace.mean_coefficients.row(li) = base.glm_diag.coefficients.transpose();
      continue;
    }
    MatrixXd draws(S, n_coef);
    std::vector<char> ok(S, 0);
    parallel_for(static_cast<std::size_t>(S), n_threads, [&](std::size_t s) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(li) * S + s));
      auto [w1_l, w2_l] = sampler.apply(w1_bar, w2_bar, lambda, rng);
      const FitResult fit = fit_once(w1_l, w2_l);
      if (fit.glm_diag.converged && fit.glm_diag.coefficients.allFinite()) {
        draws.row(static_cast<Eigen::Index>(s)) = fit.glm_diag.coefficients.transpose();
        ok[s] = 1;
      }
    });
    int n_ok = 0;
    VectorXd sum = VectorXd::Zero(n_coef);
    for (int s = 0; s < S; ++s) {
      if (ok[s]) {
        sum += draws.row(s).transpose();
        ++n_ok;
      }
    }
    trace.failures[static_cast<std::size_t>(li)] = S - n_ok;
    const double fail_frac = static_cast<double>(S - n_ok) / static_cast<double>(S);
    if (fail_frac > cfg.max_failure_frac)
      throw NumericError("simex: " + std::to_string(S - n_ok) + " of " + std::to_string(S) +
                         " fits failed at lambda=" + fmt_double(lambda));
    trace.mean_coefficients.row(li) = (sum / static_cast<double>(n_ok)).transpose();
  }

  VectorXd extrapolated(n_coef);
  for (Eigen::Index c = 0; c < n_coef; ++c)
    extrapolated(c) = extrapolate_quadratic(trace.lambdas, trace.mean_coefficients.col(c));

  FitResult result = base;
  result.glm_diag.coefficients = extrapolated;
  Eigen::Index c = 0;
  result.intercept = intercept ? extrapolated(c++) : 0.0;
  result.gamma = extrapolated.segment(c, basis.num_basis);
  c += basis.num_basis;
  result.beta2 = extrapolated(c++);
  result.alpha = extrapolated.segment(c, Z.cols());
  result.beta1_on_grid = expand_coefficients(result.gamma, basis, grid);
  return {std::move(result), std::move(trace)};
}

inline void write_trace_csv(const SimexTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "lambda,coefficient,mean,failures\n";
  for (std::size_t li = 0; li < trace.lambdas.size(); ++li)
    for (Eigen::Index c = 0; c < trace.mean_coefficients.cols(); ++c)
      out << fmt_double(trace.lambdas[li]) << ',' << trace.coef_labels[c] << ','
          << fmt_double(trace.mean_coefficients(static_cast<Eigen::Index>(li), c)) << ','
          << trace.failures[li] << '\n';
}

}  // namespace gflme
