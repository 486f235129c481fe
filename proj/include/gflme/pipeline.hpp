#pragma once

#include <optional>

#include "gflme/dataset.hpp"
#include "gflme/error_cov.hpp"
#include "gflme/estimators.hpp"
#include "gflme/rc.hpp"
#include "gflme/simex.hpp"

namespace gflme {

/// Everything needed to run any estimator on a dataset. kn = 0 selects the
/// basis dimension from the sample size.
struct PipelineConfig {
  int kn = 0;
  int degree = 3;
  bool intercept = true;
  int naive_session = 1;
  GlmOptions glm;
  SimexConfig simex;
  RcOptions rc;
  std::optional<ErrorCovariance> known_errcov;  // used by SIMEX when J < 2

  BSplineBasis make_basis(Eigen::Index n) const {
    return build_basis(select_kn(n, kn), degree);
  }
};

/// Uniform entry point used by the CLI and the bootstrap: dispatches to the
/// requested estimator arm with the dataset's own grid and family.
inline FitResult run_estimator(const GflmDataset& ds, EstimatorKind kind,
                               const PipelineConfig& cfg, unsigned n_threads = 1) {
  ds.validate();
  const Grid& grid = ds.W1.grid;
  const BSplineBasis basis = cfg.make_basis(ds.n());
  switch (kind) {
    case EstimatorKind::Oracle:
      if (!ds.has_truth)
        throw std::invalid_argument("oracle estimator requires true covariates");
      return fit_oracle(ds.X1_true, ds.X2_true, ds.Z, ds.z_labels, ds.y, basis, grid,
                        ds.family, cfg.intercept, cfg.glm);
    case EstimatorKind::Average:
      return fit_average(ds.W1, ds.W2, ds.Z, ds.z_labels, ds.y, basis, grid, ds.family,
                         cfg.intercept, cfg.glm);
    case EstimatorKind::Naive:
      return fit_naive(ds.W1, ds.W2, ds.Z, ds.z_labels, ds.y, basis, grid, ds.family,
                       cfg.naive_session, cfg.intercept, cfg.glm);
    case EstimatorKind::Rc:
      return fit_rc(ds.W1, ds.W2, ds.Z, ds.z_labels, ds.y, basis, grid, ds.family,
                    cfg.intercept, cfg.glm, cfg.rc);
    case EstimatorKind::Simex: {
      const ErrorCovariance errcov = cfg.known_errcov
                                         ? *cfg.known_errcov
                                         : estimate_error_cov(ds.W1, ds.W2);
      return run_simex(ds.W1, ds.W2, ds.Z, ds.z_labels, ds.y, basis, grid, ds.family,
                       cfg.simex, errcov, cfg.intercept, cfg.glm, n_threads)
          .first;
    }
  }
  throw std::invalid_argument("unknown estimator kind");
}

}  // namespace gflme
