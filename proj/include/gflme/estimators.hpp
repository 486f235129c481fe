#pragma once

#include <string>
#include <vector>

#include "gflme/bspline.hpp"
#include "gflme/common.hpp"
#include "gflme/glm.hpp"
#include "gflme/grid.hpp"

namespace gflme {

enum class EstimatorKind { Oracle, Average, Naive, Simex, Rc };

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Oracle: return "oracle";
    case EstimatorKind::Average: return "average";
    case EstimatorKind::Naive: return "naive";
    case EstimatorKind::Simex: return "simex";
    case EstimatorKind::Rc: return "rc";
  }
  return "?";
}

inline EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "oracle") return EstimatorKind::Oracle;
  if (s == "average") return EstimatorKind::Average;
  if (s == "naive") return EstimatorKind::Naive;
  if (s == "simex") return EstimatorKind::Simex;
  if (s == "rc") return EstimatorKind::Rc;
  throw ConfigError("unknown estimator: '" + s +
                    "' (expected oracle | average | naive | simex | rc)");
}

/// Fitted coefficients of the functional linear model: spline coefficients
/// gamma, their pointwise expansion beta1(t) on the grid, the error-prone
/// scalar coefficient beta2, and the error-free coefficients alpha.
struct FitResult {
  VectorXd gamma;
  VectorXd beta1_on_grid;
  double beta2 = 0.0;
  VectorXd alpha;
  double intercept = 0.0;
  EstimatorKind kind = EstimatorKind::Oracle;
  GlmFit glm_diag;
  std::vector<std::string> coef_labels;  // aligned with glm_diag.coefficients
};

// Every fit pipeline goes through this one assembly routine so estimator
// arms differ only in which covariate version they supply.
inline DesignMatrix assemble_design(const MatrixXd& scores, const VectorXd& x2,
                                    const MatrixXd& Z,
                                    const std::vector<std::string>& z_labels,
                                    bool intercept) {
  const Eigen::Index n = scores.rows();
  if (x2.size() != n || Z.rows() != n)
    throw ShapeError("assemble_design: covariate blocks disagree on n");
  if (static_cast<Eigen::Index>(z_labels.size()) != Z.cols())
    throw ShapeError("assemble_design: z labels do not match Z");
  const Eigen::Index p = (intercept ? 1 : 0) + scores.cols() + 1 + Z.cols();
  DesignMatrix design;
  design.X.resize(n, p);
  Eigen::Index c = 0;
  if (intercept) {
    design.X.col(c).setOnes();
    design.labels.push_back("(Intercept)");
    ++c;
  }
  for (Eigen::Index k = 0; k < scores.cols(); ++k) {
    design.X.col(c++) = scores.col(k);
    design.labels.push_back("gamma_" + std::to_string(k + 1));
  }
  design.X.col(c++) = x2;
  design.labels.push_back("x2");
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    design.X.col(c++) = Z.col(j);
    design.labels.push_back(z_labels[j]);
  }
  return design;
}

inline FitResult unpack_fit(const GlmFit& gfit, const DesignMatrix& design,
                            const BSplineBasis& basis, const Grid& grid,
                            bool intercept, Eigen::Index n_z, EstimatorKind kind) {
  FitResult out;
  out.kind = kind;
  out.glm_diag = gfit;
  out.coef_labels = design.labels;
  Eigen::Index c = 0;
  out.intercept = intercept ? gfit.coefficients(c++) : 0.0;
  out.gamma = gfit.coefficients.segment(c, basis.num_basis);
  c += basis.num_basis;
  out.beta2 = gfit.coefficients(c++);
  out.alpha = gfit.coefficients.segment(c, n_z);
  out.beta1_on_grid = expand_coefficients(out.gamma, basis, grid);
  return out;
}

/// Shared pipeline: reduce the curves to basis scores, fit the GLM, expand
/// the spline coefficients back onto the grid.
inline FitResult fit_with_covariates(const MatrixXd& curves, const VectorXd& scalars,
                                     const MatrixXd& Z,
                                     const std::vector<std::string>& z_labels,
                                     const VectorXd& y, const BSplineBasis& basis,
                                     const Grid& grid, Family family,
                                     EstimatorKind kind, bool intercept = true,
                                     const GlmOptions& glm_opts = {}) {
  const MatrixXd scores = reduce(curves, basis, grid);
  const DesignMatrix design = assemble_design(scores, scalars, Z, z_labels, intercept);
  const GlmFit gfit = fit_glm(design, y, family, glm_opts);
  return unpack_fit(gfit, design, basis, grid, intercept, Z.cols(), kind);
}

/// Fit from the true covariates (simulation benchmark).
inline FitResult fit_oracle(const MatrixXd& x1_true, const VectorXd& x2_true,
                            const MatrixXd& Z, const std::vector<std::string>& z_labels,
                            const VectorXd& y, const BSplineBasis& basis, const Grid& grid,
                            Family family, bool intercept = true,
                            const GlmOptions& glm_opts = {}) {
  return fit_with_covariates(x1_true, x2_true, Z, z_labels, y, basis, grid, family,
                             EstimatorKind::Oracle, intercept, glm_opts);
}

/// Fit from the replicate means of the observed surrogates.
inline FitResult fit_average(const FunctionalReplicates& w1, const ScalarReplicates& w2,
                             const MatrixXd& Z, const std::vector<std::string>& z_labels,
                             const VectorXd& y, const BSplineBasis& basis, const Grid& grid,
                             Family family, bool intercept = true,
                             const GlmOptions& glm_opts = {}) {
  return fit_with_covariates(replicate_mean(w1), replicate_mean(w2), Z, z_labels, y, basis,
                             grid, family, EstimatorKind::Average, intercept, glm_opts);
}

/// Fit from a single replicate session (1-based, default the first).
inline FitResult fit_naive(const FunctionalReplicates& w1, const ScalarReplicates& w2,
                           const MatrixXd& Z, const std::vector<std::string>& z_labels,
                           const VectorXd& y, const BSplineBasis& basis, const Grid& grid,
                           Family family, int session = 1, bool intercept = true,
                           const GlmOptions& glm_opts = {}) {
  if (session < 1 || session > w1.n_replicates || session > w2.n_replicates)
    throw std::invalid_argument("fit_naive: session index out of range");
  return fit_with_covariates(w1.session(session - 1), w2.session(session - 1), Z, z_labels,
                             y, basis, grid, family, EstimatorKind::Naive, intercept,
                             glm_opts);
}

}  // namespace gflme
