#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gflme/common.hpp"
#include "gflme/csv.hpp"
#include "gflme/parallel.hpp"
#include "gflme/pipeline.hpp"

namespace gflme {

/// Quantile of a sample by linear interpolation between order statistics at
/// rank h = (n+1)p, clamped to the observed extremes. With two draws the
/// 2.5th/97.5th percentiles are therefore the min and max.
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) + 1.0) * p;
  if (h <= 1.0) return values.front();
  if (h >= static_cast<double>(values.size())) return values.back();
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

/// Raw bootstrap refit results: one row per successful resample.
struct BootstrapDraws {
  MatrixXd beta1;        // B_ok x grid points
  MatrixXd scalars;      // B_ok x (intercept? + beta2 + alpha)
  std::vector<std::string> scalar_labels;
  int requested = 0;
  int failures = 0;
};

struct BootstrapBands {
  VectorXd beta1_estimate, beta1_lower, beta1_upper;
  std::vector<std::string> scalar_labels;
  VectorXd scalar_estimate, scalar_lower, scalar_upper;
  int B = 0;
  double level = 0.95;
};

namespace detail {

inline VectorXd scalar_coefficients(const FitResult& fit, bool intercept) {
  VectorXd out((intercept ? 1 : 0) + 1 + fit.alpha.size());
  Eigen::Index c = 0;
  if (intercept) out(c++) = fit.intercept;
  out(c++) = fit.beta2;
  out.segment(c, fit.alpha.size()) = fit.alpha;
  return out;
}

inline std::vector<std::string> scalar_labels(const GflmDataset& ds, bool intercept) {
  std::vector<std::string> labels;
  if (intercept) labels.push_back("(Intercept)");
  labels.push_back("x2");
  labels.insert(labels.end(), ds.z_labels.begin(), ds.z_labels.end());
  return labels;
}

}  // namespace detail

/// Draws B subject-level resamples (replicate blocks travel with their
/// subject) and reruns the full estimator pipeline on each, including error
/// covariance re-estimation. Failed refits are skipped; more than 5% of them
/// is an error.
inline BootstrapDraws run_bootstrap(const GflmDataset& ds, EstimatorKind kind,
                                    const PipelineConfig& cfg, int B, std::uint64_t seed,
                                    unsigned n_threads = 0) {
  if (B < 2) throw std::invalid_argument("bootstrap needs B >= 2 resamples");
  ds.validate();
  const Eigen::Index n = ds.n();
  const Eigen::Index m = ds.W1.grid.size();
  const auto labels = detail::scalar_labels(ds, cfg.intercept);
  const Eigen::Index k = static_cast<Eigen::Index>(labels.size());

  MatrixXd beta1(B, m), scalars(B, k);
  std::vector<char> ok(static_cast<std::size_t>(B), 0);
  parallel_for(static_cast<std::size_t>(B), n_threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b + 1));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = pick(rng);
    try {
      const GflmDataset resample = resample_subjects(ds, idx);
      PipelineConfig rcfg = cfg;
      rcfg.simex.seed = derive_seed(derive_seed(seed, b + 1), 2);
      const FitResult fit = run_estimator(resample, kind, rcfg);
      if (fit.beta1_on_grid.allFinite() && std::isfinite(fit.beta2)) {
        beta1.row(static_cast<Eigen::Index>(b)) = fit.beta1_on_grid.transpose();
        scalars.row(static_cast<Eigen::Index>(b)) =
            detail::scalar_coefficients(fit, cfg.intercept).transpose();
        ok[b] = 1;
      }
    } catch (const std::exception&) {
      // skipped and counted
    }
  });

  int n_ok = 0;
  for (char c : ok) n_ok += c;
  BootstrapDraws draws;
  draws.requested = B;
  draws.failures = B - n_ok;
  if (static_cast<double>(draws.failures) > 0.05 * static_cast<double>(B))
    throw NumericError("bootstrap: " + std::to_string(draws.failures) + " of " +
                       std::to_string(B) + " refits failed for estimator " +
                       to_string(kind));
  draws.beta1.resize(n_ok, m);
  draws.scalars.resize(n_ok, k);
  Eigen::Index row = 0;
  for (int b = 0; b < B; ++b) {
    if (ok[static_cast<std::size_t>(b)]) {
      draws.beta1.row(row) = beta1.row(b);
      draws.scalars.row(row) = scalars.row(b);
      ++row;
    }
  }
  draws.scalar_labels = labels;
  return draws;
}

/// Pointwise percentile bands at the given level from an existing set of
/// bootstrap draws.
inline BootstrapBands bands_from_draws(const BootstrapDraws& draws,
                                       const FitResult& point_fit, bool intercept,
                                       double level = 0.95) {
  if (level <= 0.0 || level >= 1.0)
    throw std::invalid_argument("bootstrap level must lie in (0,1)");
  const double lo_p = (1.0 - level) / 2.0, hi_p = 1.0 - lo_p;
  BootstrapBands bands;
  bands.B = draws.requested;
  bands.level = level;
  const Eigen::Index m = draws.beta1.cols(), k = draws.scalars.cols();
  bands.beta1_estimate = point_fit.beta1_on_grid;
  bands.beta1_lower.resize(m);
  bands.beta1_upper.resize(m);
  for (Eigen::Index h = 0; h < m; ++h) {
    std::vector<double> col(draws.beta1.col(h).data(),
                            draws.beta1.col(h).data() + draws.beta1.rows());
    bands.beta1_lower(h) = quantile(col, lo_p);
    bands.beta1_upper(h) = quantile(std::move(col), hi_p);
  }
  bands.scalar_labels = draws.scalar_labels;
  bands.scalar_estimate = detail::scalar_coefficients(point_fit, intercept);
  bands.scalar_lower.resize(k);
  bands.scalar_upper.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    std::vector<double> col(draws.scalars.col(c).data(),
                            draws.scalars.col(c).data() + draws.scalars.rows());
    bands.scalar_lower(c) = quantile(col, lo_p);
    bands.scalar_upper(c) = quantile(std::move(col), hi_p);
  }
  return bands;
}

/// Nonparametric percentile bootstrap confidence bands for one estimator.
inline BootstrapBands bootstrap_ci(const GflmDataset& ds, EstimatorKind kind,
                                   const PipelineConfig& cfg, int B, std::uint64_t seed,
                                   double level = 0.95, unsigned n_threads = 0) {
  PipelineConfig point_cfg = cfg;
  point_cfg.simex.seed = derive_seed(seed, 0);
  const FitResult point_fit = run_estimator(ds, kind, point_cfg, n_threads);
  const BootstrapDraws draws = run_bootstrap(ds, kind, cfg, B, seed, n_threads);
  return bands_from_draws(draws, point_fit, cfg.intercept, level);
}

inline void write_beta1_bands_csv(const BootstrapBands& bands, const Grid& grid,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "t,estimate,lower,upper\n";
  for (Eigen::Index h = 0; h < grid.size(); ++h)
    out << fmt_double(grid.points(h)) << ',' << fmt_double(bands.beta1_estimate(h)) << ','
        << fmt_double(bands.beta1_lower(h)) << ',' << fmt_double(bands.beta1_upper(h))
        << '\n';
}

inline void write_scalar_bands_csv(const BootstrapBands& bands, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "label,estimate,lower,upper\n";
  for (std::size_t c = 0; c < bands.scalar_labels.size(); ++c) {
    const Eigen::Index i = static_cast<Eigen::Index>(c);
    out << bands.scalar_labels[c] << ',' << fmt_double(bands.scalar_estimate(i)) << ','
        << fmt_double(bands.scalar_lower(i)) << ',' << fmt_double(bands.scalar_upper(i))
        << '\n';
  }
}

}  // namespace gflme
