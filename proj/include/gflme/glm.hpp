#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gflme/common.hpp"

namespace gflme {

enum class Family { BinomialLogit, GaussianIdentity };

inline std::string to_string(Family f) {
  return f == Family::BinomialLogit ? "binomial" : "gaussian";
}

inline Family family_from_string(const std::string& s) {
  if (s == "binomial") return Family::BinomialLogit;
  if (s == "gaussian") return Family::GaussianIdentity;
  throw ConfigError("unknown family: '" + s + "' (expected binomial | gaussian)");
}

/// Inverse logit, clipped away from 0 and 1 so downstream logs and IRLS
/// weights stay finite even under separation.
inline double expit(double eta) {
  double p;
  if (eta >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-eta));
  } else {
    const double e = std::exp(eta);
    p = e / (1.0 + e);
  }
  if (eta > 35.0 || p > 1.0 - 1e-15) p = 1.0 - 1e-15;
  if (eta < -35.0 || p < 1e-15) p = 1e-15;
  return p;
}

struct DesignMatrix {
  MatrixXd X;
  std::vector<std::string> labels;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

struct GlmOptions {
  int max_iter = 100;
  double tol = 1e-8;
  double ridge = 0.0;  // applied to the normal equations only on singularity
};

struct GlmFit {
  VectorXd coefficients;
  bool converged = false;
  int n_iter = 0;
  double deviance = 0.0;
  Family family = Family::BinomialLogit;
  bool used_ridge = false;
};

namespace detail {

inline double binomial_deviance(const VectorXd& y, const VectorXd& mu) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    dev -= 2.0 * (y(i) * std::log(mu(i)) + (1.0 - y(i)) * std::log(1.0 - mu(i)));
  return dev;
}

// Weighted least squares via QR on the sqrt(w)-scaled system. Falls back to
// ridge-regularized normal equations when the design is rank deficient.
inline VectorXd solve_wls(const MatrixXd& X, const VectorXd& z, const VectorXd& w,
                          double ridge, bool* used_ridge) {
  const VectorXd sw = w.array().sqrt();
  const MatrixXd Xw = sw.asDiagonal() * X;
  const VectorXd zw = sw.asDiagonal() * z;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Xw);
  if (qr.rank() == X.cols()) return qr.solve(zw);
  if (used_ridge) *used_ridge = true;
  MatrixXd A = Xw.transpose() * Xw;
  A.diagonal().array() += ridge;
  return A.ldlt().solve(Xw.transpose() * zw);
}

}  // namespace detail

/// Fits the GLM by iteratively reweighted least squares. Gaussian-identity
/// reduces to a single ordinary least squares solve. Non-convergence (e.g.
/// separation) is reported through the converged flag, not an exception.
inline GlmFit fit_glm(const DesignMatrix& design, const VectorXd& y, Family family,
                      const GlmOptions& opts = {}) {
  const MatrixXd& X = design.X;
  if (X.rows() != y.size()) throw ShapeError("fit_glm: y length does not match design");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("fit_glm: design or outcome contains non-finite values");
  if (X.rows() <= X.cols())
    throw std::invalid_argument("fit_glm: need more observations than coefficients");

  GlmFit fit;
  fit.family = family;

  if (family == Family::GaussianIdentity) {
    fit.coefficients =
        detail::solve_wls(X, y, VectorXd::Ones(y.size()), opts.ridge, &fit.used_ridge);
    fit.n_iter = 1;
    fit.converged = true;
    fit.deviance = (y - X * fit.coefficients).squaredNorm();
    return fit;
  }

  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0)
      throw std::invalid_argument("fit_glm: binomial outcomes must be 0 or 1");

  VectorXd beta = VectorXd::Zero(X.cols());
  VectorXd eta = VectorXd::Zero(y.size());
  VectorXd mu(y.size()), w(y.size()), z(y.size());
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      mu(i) = expit(eta(i));
      w(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-10);
      z(i) = eta(i) + (y(i) - mu(i)) / w(i);
    }
    const VectorXd beta_new = detail::solve_wls(X, z, w, opts.ridge, &fit.used_ridge);
    const double delta = (beta_new - beta).cwiseAbs().maxCoeff();
    beta = beta_new;
    eta = X * beta;
    fit.n_iter = iter;
    if (!beta.allFinite()) break;
    if (delta < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) mu(i) = expit(eta(i));
  fit.deviance = detail::binomial_deviance(y, mu);
  if (!beta.allFinite()) fit.converged = false;
  // A vanishing deviance means the data are separated and the MLE sits at
  // infinity; the returned coefficients are a boundary iterate.
  if (fit.deviance < 1e-6) fit.converged = false;
  return fit;
}

inline VectorXd linear_predictor(const GlmFit& fit, const DesignMatrix& design) {
  if (design.X.cols() != fit.coefficients.size())
    throw ShapeError("linear_predictor: design width does not match fit");
  return design.X * fit.coefficients;
}

inline VectorXd fitted_means(const GlmFit& fit, const DesignMatrix& design) {
  VectorXd eta = linear_predictor(fit, design);
  if (fit.family == Family::GaussianIdentity) return eta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = expit(eta(i));
  return eta;
}

}  // namespace gflme
