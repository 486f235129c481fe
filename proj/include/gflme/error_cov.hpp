#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "gflme/common.hpp"
#include "gflme/csv.hpp"
#include "gflme/gp.hpp"
#include "gflme/grid.hpp"

namespace gflme {

/// Covariance of the replicate-averaged measurement errors: the functional
/// block is Cov{U-bar_1(t), U-bar_1(t')} over the grid, the scalar block is
/// Var(U-bar_2). Both carry the 1/J mean-error scaling.
struct ErrorCovariance {
  CovarianceMatrix functional;
  double scalar_var = 0.0;
};

/// Replicate-based estimator:
///   Sigma-hat(t,t') = sum_i sum_j [W_ij(t')-Wbar_i(t')][W_ij(t)-Wbar_i(t)] / (n (J-1) J)
/// and the analogous scalar variance. Each block uses its own J; both need
/// J >= 2 to be identified.
inline ErrorCovariance estimate_error_cov(const FunctionalReplicates& w1,
                                          const ScalarReplicates& w2) {
  if (w1.n_replicates < 2 || w2.n_replicates < 2)
    throw IdentifiabilityError(
        "error covariance requires J >= 2 replicates; with a single replicate "
        "supply a known covariance instead");

  const Eigen::Index n1 = w1.n_subjects, j1 = w1.n_replicates, m = w1.grid.size();
  MatrixXd deviations(n1 * j1, m);
  for (Eigen::Index i = 0; i < n1; ++i) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m);
    for (Eigen::Index j = 0; j < j1; ++j) mean += w1.curve(i, j);
    mean /= static_cast<double>(j1);
    for (Eigen::Index j = 0; j < j1; ++j)
      deviations.row(i * j1 + j) = w1.curve(i, j) - mean;
  }
  const double denom1 = static_cast<double>(n1) * static_cast<double>(j1 - 1) *
                        static_cast<double>(j1);
  MatrixXd sigma = (deviations.transpose() * deviations) / denom1;
  sigma = ((sigma + sigma.transpose()) / 2.0).eval();

  const Eigen::Index n2 = w2.n_subjects, j2 = w2.n_replicates;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n2; ++i) {
    const double mean = w2.values.row(i).mean();
    for (Eigen::Index j = 0; j < j2; ++j) {
      const double d = w2.values(i, j) - mean;
      ss += d * d;
    }
  }
  const double denom2 = static_cast<double>(n2) * static_cast<double>(j2 - 1) *
                        static_cast<double>(j2);

  ErrorCovariance out;
  out.functional = CovarianceMatrix{std::move(sigma)};
  out.scalar_var = ss / denom2;
  return out;
}

/// Loads a previously estimated error covariance: a headerless square CSV
/// matrix (one row per grid point) plus a single-value CSV for the scalar
/// variance. Set expected_points to 0 to skip the dimension check.
inline ErrorCovariance load_known_cov(const std::string& matrix_path,
                                      const std::string& scalar_path,
                                      Eigen::Index expected_points = 0) {
  const auto rows = read_csv(matrix_path);
  if (rows.empty()) throw DataError("known covariance file is empty: " + matrix_path);
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  MatrixXd cov(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    if (static_cast<Eigen::Index>(rows[a].size()) != m)
      throw DataError("known covariance matrix is not square in " + matrix_path);
    for (Eigen::Index b = 0; b < m; ++b)
      cov(a, b) = parse_double(rows[a][b], matrix_path);
  }
  if (expected_points > 0 && m != expected_points)
    throw DataError("known covariance dimension " + std::to_string(m) +
                    " does not match grid size " + std::to_string(expected_points));
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DataError("known covariance matrix is not symmetric: " + matrix_path);
  cholesky_with_jitter(cov);  // PSD gate; throws NumericError on failure

  const auto svals = read_csv(scalar_path);
  if (svals.size() != 1 || svals[0].size() != 1)
    throw DataError("scalar variance file must hold exactly one value: " + scalar_path);
  const double s2 = parse_double(svals[0][0], scalar_path);
  if (!(s2 >= 0.0)) throw DataError("scalar variance must be >= 0 in " + scalar_path);

  return ErrorCovariance{CovarianceMatrix{std::move(cov)}, s2};
}

inline void save_error_cov(const ErrorCovariance& cov, const std::string& matrix_path,
                           const std::string& scalar_path) {
  std::ofstream mout(matrix_path);
  if (!mout) throw DataError("cannot write file: " + matrix_path);
  const MatrixXd& s = cov.functional.matrix;
  for (Eigen::Index a = 0; a < s.rows(); ++a) {
    for (Eigen::Index b = 0; b < s.cols(); ++b) {
      if (b) mout << ',';
      mout << fmt_double(s(a, b));
    }
    mout << '\n';
  }
  std::ofstream sout(scalar_path);
  if (!sout) throw DataError("cannot write file: " + scalar_path);
  sout << fmt_double(cov.scalar_var) << '\n';
}

}  // namespace gflme
