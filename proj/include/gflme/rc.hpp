#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "gflme/common.hpp"
#include "gflme/csv.hpp"
#include "gflme/estimators.hpp"
#include "gflme/grid.hpp"

namespace gflme {

/// Closed-form ANOVA fit of the one-way random-intercept model
/// W_ij = mu + b_i + e_ij at a single location.
struct RandomInterceptFit {
  double mu = 0.0;
  double sigma2_between = 0.0;
  double sigma2_within = 0.0;
  double shrinkage = 1.0;  // sigma2_b / (sigma2_b + sigma2_e / J)
};

inline RandomInterceptFit fit_random_intercept(const MatrixXd& values) {
  const Eigen::Index n = values.rows(), J = values.cols();
  if (J < 2)
    throw IdentifiabilityError("random-intercept fit requires J >= 2 replicates");
  if (!values.allFinite())
    throw std::invalid_argument("random-intercept fit: values must be finite");

  RandomInterceptFit fit;
  fit.mu = values.mean();
  const VectorXd subject_means = values.rowwise().mean();

  double sse = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < J; ++j) {
      const double d = values(i, j) - subject_means(i);
      sse += d * d;
    }
  fit.sigma2_within = sse / (static_cast<double>(n) * static_cast<double>(J - 1));

  double msb = 0.0;
  if (n > 1) {
    double ssb = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = subject_means(i) - fit.mu;
      ssb += d * d;
    }
    msb = static_cast<double>(J) * ssb / static_cast<double>(n - 1);
  }
  fit.sigma2_between = std::max(0.0, (msb - fit.sigma2_within) / static_cast<double>(J));

  const double denom = fit.sigma2_between + fit.sigma2_within / static_cast<double>(J);
  // Both components zero: the data are degenerate and Wbar is already exact.
  fit.shrinkage = denom > 0.0 ? fit.sigma2_between / denom : 1.0;
  return fit;
}

struct RcOptions {
  bool smooth = false;  // optional moving average along t; not part of the core method
  int smooth_window = 5;
};

struct FunctionalCalibration {
  MatrixXd xhat;  // n x grid points
  std::vector<RandomInterceptFit> pointwise;
};

struct ScalarCalibration {
  VectorXd xhat;
  RandomInterceptFit fit;
};

namespace detail {

inline MatrixXd moving_average_rows(const MatrixXd& in, int window) {
  if (window < 2) return in;
  const int half = window / 2;
  MatrixXd out(in.rows(), in.cols());
  for (Eigen::Index h = 0; h < in.cols(); ++h) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, h - half);
    const Eigen::Index hi = std::min<Eigen::Index>(in.cols() - 1, h + half);
    out.col(h) = in.middleCols(lo, hi - lo + 1).rowwise().mean();
  }
  return out;
}

}  // namespace detail

/// Fast univariate calibration: an independent random-intercept fit at each
/// grid point, with the subject prediction mu + shrinkage * (Wbar_i - mu).
inline FunctionalCalibration calibrate_functional(const FunctionalReplicates& w1,
                                                  const RcOptions& opts = {}) {
  if (w1.n_replicates < 2)
    throw IdentifiabilityError("functional calibration requires J >= 2 replicates");
  const Eigen::Index n = w1.n_subjects, J = w1.n_replicates, m = w1.grid.size();
  FunctionalCalibration cal;
  cal.xhat.resize(n, m);
  cal.pointwise.reserve(m);
  MatrixXd slice(n, J);
  for (Eigen::Index h = 0; h < m; ++h) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < J; ++j) slice(i, j) = w1.curve(i, j)(h);
    const RandomInterceptFit fit = fit_random_intercept(slice);
    cal.pointwise.push_back(fit);
    const VectorXd wbar = slice.rowwise().mean();
    cal.xhat.col(h) = (fit.mu + (fit.shrinkage * (wbar.array() - fit.mu))).matrix();
  }
  if (opts.smooth) cal.xhat = detail::moving_average_rows(cal.xhat, opts.smooth_window);
  return cal;
}

inline ScalarCalibration calibrate_scalar(const ScalarReplicates& w2) {
  if (w2.n_replicates < 2)
    throw IdentifiabilityError("scalar calibration requires J >= 2 replicates");
  ScalarCalibration cal;
  cal.fit = fit_random_intercept(w2.values);
  const VectorXd wbar = w2.values.rowwise().mean();
  cal.xhat = (cal.fit.mu + (cal.fit.shrinkage * (wbar.array() - cal.fit.mu))).matrix();
  return cal;
}

/// Regression calibration: recalibrate both covariate blocks, then run the
/// standard reduce-and-fit pipeline on the predictions.
inline FitResult fit_rc(const FunctionalReplicates& w1, const ScalarReplicates& w2,
                        const MatrixXd& Z, const std::vector<std::string>& z_labels,
                        const VectorXd& y, const BSplineBasis& basis, const Grid& grid,
                        Family family, bool intercept = true,
                        const GlmOptions& glm_opts = {}, const RcOptions& opts = {}) {
  const FunctionalCalibration fc = calibrate_functional(w1, opts);
  const ScalarCalibration sc = calibrate_scalar(w2);
  return fit_with_covariates(fc.xhat, sc.xhat, Z, z_labels, y, basis, grid, family,
                             EstimatorKind::Rc, intercept, glm_opts);
}

/// Diagnostics dump: one row per grid point with the calibration components.
inline void write_calibration_csv(const Grid& grid, const FunctionalCalibration& cal,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "t,mu,sigma2_between,sigma2_within,shrinkage\n";
  for (std::size_t h = 0; h < cal.pointwise.size(); ++h) {
    const RandomInterceptFit& f = cal.pointwise[h];
    out << fmt_double(grid.points(static_cast<Eigen::Index>(h))) << ',' << fmt_double(f.mu)
        << ',' << fmt_double(f.sigma2_between) << ',' << fmt_double(f.sigma2_within) << ','
        << fmt_double(f.shrinkage) << '\n';
  }
}

}  // namespace gflme
