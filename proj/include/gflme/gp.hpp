#pragma once

#include <cmath>
#include <string>

#include "gflme/common.hpp"
#include "gflme/grid.hpp"

namespace gflme {

enum class CovKind { CompoundSymmetric, AR1, SquaredExponential, Unstructured };

inline std::string to_string(CovKind k) {
  switch (k) {
    case CovKind::CompoundSymmetric: return "CS";
    case CovKind::AR1: return "AR1";
    case CovKind::SquaredExponential: return "SqExp";
    case CovKind::Unstructured: return "Unstructured";
  }
  return "?";
}

inline CovKind cov_kind_from_string(const std::string& s) {
  if (s == "CS") return CovKind::CompoundSymmetric;
  if (s == "AR1") return CovKind::AR1;
  if (s == "SqExp") return CovKind::SquaredExponential;
  if (s == "Unstructured") return CovKind::Unstructured;
  throw ConfigError("unknown covariance kind: '" + s +
                    "' (expected CS | AR1 | SqExp | Unstructured)");
}

/// Named covariance structure over the grid.
///  - CS:           sigma^2 * (1 if a==b else rho)
///  - AR1:          sigma^2 * rho^|a-b|            (index distance)
///  - SqExp:        sigma^2 * exp(-(t_a-t_b)^2 / (2 l^2))
///  - Unstructured: adjacent correlations drawn iid Uniform on
///                  [max(0, rho-0.25), min(rho+0.25, 1)] from jitter_seed,
///                  completed multiplicatively: corr(a,b) = prod of the
///                  adjacent correlations between a and b.
struct CovarianceSpec {
  CovKind kind = CovKind::SquaredExponential;
  double sigma = 1.0;
  double rho = 0.0;
  double length_scale = 0.0;
  std::uint64_t jitter_seed = 0;

  void validate() const {
    if (!(sigma >= 0.0)) throw std::invalid_argument("covariance: sigma must be >= 0");
    switch (kind) {
      case CovKind::SquaredExponential:
        if (!(length_scale > 0.0))
          throw std::invalid_argument("SqExp covariance: length_scale must be > 0");
        break;
      case CovKind::CompoundSymmetric:
      case CovKind::AR1:
      case CovKind::Unstructured:
        if (!(rho >= 0.0 && rho <= 1.0))
          throw std::invalid_argument("covariance: rho must lie in [0,1]");
        break;
    }
  }
};

struct CovarianceMatrix {
  MatrixXd matrix;
  Eigen::Index size() const { return matrix.rows(); }
};

inline CovarianceMatrix build_covariance(const CovarianceSpec& spec, const Grid& grid) {
  spec.validate();
  const Eigen::Index m = grid.size();
  const double s2 = spec.sigma * spec.sigma;
  MatrixXd cov(m, m);
  switch (spec.kind) {
    case CovKind::SquaredExponential: {
      const double denom = 2.0 * spec.length_scale * spec.length_scale;
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) {
          const double d = grid.points(a) - grid.points(b);
          const double v = s2 * std::exp(-(d * d) / denom);
          cov(a, b) = v;
          cov(b, a) = v;
        }
      break;
    }
    case CovKind::CompoundSymmetric: {
      cov.setConstant(s2 * spec.rho);
      cov.diagonal().setConstant(s2);
      break;
    }
    case CovKind::AR1: {
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) {
          const double v = s2 * std::pow(spec.rho, static_cast<double>(a - b));
          cov(a, b) = v;
          cov(b, a) = v;
        }
      break;
    }
    case CovKind::Unstructured: {
      Rng rng(spec.jitter_seed);
      const double lo = std::max(0.0, spec.rho - 0.25);
      const double hi = std::min(spec.rho + 0.25, 1.0);
      std::uniform_real_distribution<double> unif(lo, hi);
      VectorXd adjacent(m > 1 ? m - 1 : 0);
      for (Eigen::Index h = 0; h + 1 < m; ++h) adjacent(h) = unif(rng);
      // Multiplicative chain: cumulative products along the diagonal axis.
      // This first-order completion keeps the matrix positive semidefinite.
      for (Eigen::Index a = 0; a < m; ++a) {
        cov(a, a) = s2;
        double corr = 1.0;
        for (Eigen::Index b = a + 1; b < m; ++b) {
          corr *= adjacent(b - 1);
          cov(a, b) = s2 * corr;
          cov(b, a) = s2 * corr;
        }
      }
      break;
    }
  }
  return CovarianceMatrix{std::move(cov)};
}

/// Lower Cholesky factor with an escalating diagonal jitter fallback:
/// 1e-12 * scale, x10 per retry, giving up beyond 1e-8 * scale where scale
/// is the largest diagonal entry. A zero matrix factors to zero.
inline MatrixXd cholesky_with_jitter(const MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw ShapeError("cholesky: matrix not square");
  const double scale = cov.diagonal().maxCoeff();
  if (scale == 0.0) return MatrixXd::Zero(cov.rows(), cov.cols());
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (double jitter = 1e-12 * scale; jitter <= 1e-8 * scale * (1.0 + 1e-9); jitter *= 10.0) {
    MatrixXd jittered = cov;
    jittered.diagonal().array() += jitter;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericError("covariance matrix is not positive semidefinite (jitter exhausted)");
}

/// Draws n_draws independent mean-zero Gaussian vectors with the given
/// covariance; row r is draw r. Deterministic given the generator state.
inline MatrixXd sample_gp(const CovarianceMatrix& cov, Eigen::Index n_draws, Rng& rng) {
  if (n_draws < 0) throw std::invalid_argument("sample_gp: n_draws must be >= 0");
  const MatrixXd L = cholesky_with_jitter(cov.matrix);
  MatrixXd z(n_draws, cov.size());
  fill_standard_normal(z, rng);
  return z * L.transpose();
}

}  // namespace gflme
