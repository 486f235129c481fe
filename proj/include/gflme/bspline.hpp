#pragma once

#include <cmath>
#include <vector>

#include "gflme/common.hpp"
#include "gflme/grid.hpp"

namespace gflme {

/// Clamped B-spline basis on [0,1] with equally spaced interior knots.
/// num_basis = #interior knots + degree + 1; the basis functions are
/// nonnegative, have local support, and sum to one at every t in [0,1].
struct BSplineBasis {
  int degree = 3;
  int num_basis = 0;
  VectorXd knots;  // full clamped knot vector, size num_basis + degree + 1

  Eigen::Index n_interior() const { return num_basis - degree - 1; }

  /// All basis function values at t; entries outside the active knot span
  /// are exact zeros.
  VectorXd evaluate(double t) const {
    if (t < 0.0 || t > 1.0)
      throw std::invalid_argument("basis evaluation outside [0,1]");
    VectorXd out = VectorXd::Zero(num_basis);
    const int d = degree;
    // Locate the knot span [knots[s], knots[s+1}) containing t, clamping the
    // right endpoint into the last nontrivial span.
    int s = d;
    const int last = num_basis - 1;
    while (s < last && t >= knots(s + 1)) ++s;
    // Cox-de Boor recursion for the d+1 active functions N_{s-d..s}.
    std::vector<double> N(d + 1, 0.0), left(d + 1, 0.0), right(d + 1, 0.0);
    N[0] = 1.0;
    for (int j = 1; j <= d; ++j) {
      left[j] = t - knots(s + 1 - j);
      right[j] = knots(s + j) - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = N[r] / (right[r + 1] + left[j - r]);
        N[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      N[j] = saved;
    }
    for (int r = 0; r <= d; ++r) out(s - d + r) = N[r];
    return out;
  }
};

inline BSplineBasis build_basis(int num_basis, int degree = 3) {
  if (degree < 0) throw std::invalid_argument("build_basis: degree must be >= 0");
  if (num_basis < degree + 1)
    throw std::invalid_argument("build_basis: need at least degree+1 basis functions");
  BSplineBasis basis;
  basis.degree = degree;
  basis.num_basis = num_basis;
  const int n_interior = num_basis - degree - 1;
  const int n_spans = n_interior + 1;
  basis.knots.resize(num_basis + degree + 1);
  for (int i = 0; i <= degree; ++i) basis.knots(i) = 0.0;
  for (int i = 1; i <= n_interior; ++i)
    basis.knots(degree + i) = static_cast<double>(i) / static_cast<double>(n_spans);
  for (int i = 0; i <= degree; ++i) basis.knots(num_basis + i) = 1.0;
  return basis;
}

/// Number of basis functions as a function of sample size:
/// max(5, ceil(2 n^{1/5})), unless a positive override is supplied.
inline int select_kn(long n, int override_kn = 0) {
  if (override_kn > 0) return override_kn;
  if (n < 1) throw std::invalid_argument("select_kn: n must be >= 1");
  const int rule = static_cast<int>(std::ceil(2.0 * std::pow(static_cast<double>(n), 0.2)));
  return std::max(5, rule);
}

/// Basis functions evaluated on the grid, one column per basis function.
inline MatrixXd basis_matrix(const BSplineBasis& basis, const Grid& grid) {
  MatrixXd B(grid.size(), basis.num_basis);
  for (Eigen::Index h = 0; h < grid.size(); ++h)
    B.row(h) = basis.evaluate(grid.points(h)).transpose();
  return B;
}

/// Dimension reduction: entry (i,k) is the quadrature inner product of
/// curve i with basis function k.
inline MatrixXd reduce(const MatrixXd& curves, const BSplineBasis& basis, const Grid& grid) {
  if (curves.cols() != grid.size())
    throw ShapeError("reduce: curve length does not match grid");
  const MatrixXd wB = grid.weights.asDiagonal() * basis_matrix(basis, grid);
  return curves * wB;
}

/// Pointwise expansion sum_k gamma_k b_k(t_h) on the grid.
inline VectorXd expand_coefficients(const VectorXd& gamma, const BSplineBasis& basis,
                                    const Grid& grid) {
  if (gamma.size() != basis.num_basis)
    throw ShapeError("expand_coefficients: coefficient length does not match basis");
  return basis_matrix(basis, grid) * gamma;
}

}  // namespace gflme
