#pragma once

#include <cmath>
#include <string>

#include "gflme/common.hpp"

namespace gflme {

/// Observation grid on [0,1] together with quadrature weights so that
/// sum_h weights[h] * f(points[h]) approximates the integral of f over the
/// grid span.
struct Grid {
  VectorXd points;
  VectorXd weights;

  Grid() = default;
  Grid(VectorXd pts, VectorXd wts) : points(std::move(pts)), weights(std::move(wts)) {
    validate();
  }

  Eigen::Index size() const { return points.size(); }

  void validate() const {
    if (points.size() < 2) throw std::invalid_argument("grid needs at least 2 points");
    if (points.size() != weights.size())
      throw ShapeError("grid points/weights length mismatch");
    if (points(0) < 0.0 || points(points.size() - 1) > 1.0)
      throw std::invalid_argument("grid points must lie in [0,1]");
    for (Eigen::Index h = 1; h < points.size(); ++h)
      if (!(points(h) > points(h - 1)))
        throw std::invalid_argument("grid points must be strictly increasing");
    for (Eigen::Index h = 0; h < weights.size(); ++h)
      if (!(weights(h) > 0.0)) throw std::invalid_argument("grid weights must be positive");
    const double span = points(points.size() - 1) - points(0);
    if (std::abs(weights.sum() - span) > 1e-12)
      throw std::invalid_argument("grid weights must sum to the grid span");
  }
};

/// Equally spaced points 0, 1/(n-1), ..., 1 with trapezoidal weights.
inline Grid make_uniform_grid(Eigen::Index n_points) {
  if (n_points < 2) throw std::invalid_argument("make_uniform_grid: n_points must be >= 2");
  const double h = 1.0 / static_cast<double>(n_points - 1);
  VectorXd pts(n_points), wts(n_points);
  for (Eigen::Index i = 0; i < n_points; ++i) pts(i) = static_cast<double>(i) * h;
  pts(n_points - 1) = 1.0;
  wts.setConstant(h);
  wts(0) = h / 2.0;
  wts(n_points - 1) = h / 2.0;
  return Grid(std::move(pts), std::move(wts));
}

/// Quadrature inner product  sum_h w_h f(t_h) g(t_h).
inline double inner_product(const VectorXd& f, const VectorXd& g, const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw ShapeError("inner_product: vector length does not match grid");
  return (f.array() * g.array() * grid.weights.array()).sum();
}

/// Per-subject repeated curves observed on a shared grid. Replicate j of
/// subject i is stored in row i * n_replicates + j.
struct FunctionalReplicates {
  Eigen::Index n_subjects = 0;
  Eigen::Index n_replicates = 0;
  Grid grid;
  MatrixXd values;  // (n_subjects * n_replicates) x grid.size()

  FunctionalReplicates() = default;
  FunctionalReplicates(Eigen::Index n, Eigen::Index j, Grid g, MatrixXd v)
      : n_subjects(n), n_replicates(j), grid(std::move(g)), values(std::move(v)) {
    if (n_subjects < 1 || n_replicates < 1)
      throw std::invalid_argument("functional replicates need n >= 1 and J >= 1");
    if (values.rows() != n_subjects * n_replicates || values.cols() != grid.size())
      throw ShapeError("functional replicate array has inconsistent dimensions");
    if (!values.allFinite())
      throw std::invalid_argument("functional replicate values must be finite");
  }

  Eigen::Ref<const Eigen::RowVectorXd> curve(Eigen::Index subject, Eigen::Index rep) const {
    return values.row(subject * n_replicates + rep);
  }

  /// Curves from one replicate session across all subjects (n x points).
  MatrixXd session(Eigen::Index rep) const {
    if (rep < 0 || rep >= n_replicates)
      throw std::invalid_argument("session index out of range");
    MatrixXd out(n_subjects, grid.size());
    for (Eigen::Index i = 0; i < n_subjects; ++i) out.row(i) = curve(i, rep);
    return out;
  }
};

/// Per-subject repeated scalar surrogates.
struct ScalarReplicates {
  Eigen::Index n_subjects = 0;
  Eigen::Index n_replicates = 0;
  MatrixXd values;  // n_subjects x n_replicates

  ScalarReplicates() = default;
  ScalarReplicates(Eigen::Index n, Eigen::Index j, MatrixXd v)
      : n_subjects(n), n_replicates(j), values(std::move(v)) {
    if (n_subjects < 1 || n_replicates < 1)
      throw std::invalid_argument("scalar replicates need n >= 1 and J >= 1");
    if (values.rows() != n_subjects || values.cols() != n_replicates)
      throw ShapeError("scalar replicate array has inconsistent dimensions");
    if (!values.allFinite())
      throw std::invalid_argument("scalar replicate values must be finite");
  }

  VectorXd session(Eigen::Index rep) const {
    if (rep < 0 || rep >= n_replicates)
      throw std::invalid_argument("session index out of range");
    return values.col(rep);
  }
};

/// Arithmetic mean over the replicate axis, per subject and time point.
inline MatrixXd replicate_mean(const FunctionalReplicates& reps) {
  MatrixXd out = MatrixXd::Zero(reps.n_subjects, reps.grid.size());
  for (Eigen::Index i = 0; i < reps.n_subjects; ++i) {
    for (Eigen::Index j = 0; j < reps.n_replicates; ++j) out.row(i) += reps.curve(i, j);
    out.row(i) /= static_cast<double>(reps.n_replicates);
  }
  return out;
}

inline VectorXd replicate_mean(const ScalarReplicates& reps) {
  return reps.values.rowwise().mean();
}

}  // namespace gflme
