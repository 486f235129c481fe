#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gflme/error_cov.hpp"
#include "gflme/gp.hpp"

using namespace gflme;

namespace {

FunctionalReplicates make_reps(Eigen::Index n, Eigen::Index J, const Grid& grid,
                               const MatrixXd& values) {
  return FunctionalReplicates(n, J, grid, values);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("identical replicates give a zero estimate") {
  const Grid grid = make_uniform_grid(5);
  MatrixXd v(4, 5);
  v << 1, 2, 3, 4, 5, 1, 2, 3, 4, 5, -1, 0, 1, 0, -1, -1, 0, 1, 0, -1;
  const FunctionalReplicates w1 = make_reps(2, 2, grid, v);
  MatrixXd s(2, 2);
  s << 3, 3, 7, 7;
  const ScalarReplicates w2(2, 2, s);
  const ErrorCovariance cov = estimate_error_cov(w1, w2);
  REQUIRE(cov.functional.matrix.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(cov.scalar_var == 0.0);
}

TEST_CASE("hand evaluation of the scalar estimator") {
  // n=1, J=2, values {0,2}: ((0-1)^2 + (2-1)^2) / (1*1*2) = 1
  const Grid grid = make_uniform_grid(3);
  const FunctionalReplicates w1 = make_reps(1, 2, grid, MatrixXd::Zero(2, 3));
  MatrixXd s(1, 2);
  s << 0, 2;
  const ScalarReplicates w2(1, 2, s);
  REQUIRE(estimate_error_cov(w1, w2).scalar_var == 1.0);
}

TEST_CASE("single replicate is unidentified") {
  const Grid grid = make_uniform_grid(3);
  const FunctionalReplicates w1 = make_reps(2, 1, grid, MatrixXd::Ones(2, 3));
  const ScalarReplicates w2(2, 2, MatrixXd::Ones(2, 2));
  REQUIRE_THROWS_AS(estimate_error_cov(w1, w2), IdentifiabilityError);
  const FunctionalReplicates w1b = make_reps(2, 2, grid, MatrixXd::Ones(4, 3));
  const ScalarReplicates w2b(2, 1, MatrixXd::Ones(2, 1));
  REQUIRE_THROWS_AS(estimate_error_cov(w1b, w2b), IdentifiabilityError);
}

TEST_CASE("J-scaled estimate is consistent for the error covariance") {
  const Grid grid = make_uniform_grid(40);
  const CovarianceSpec spec{CovKind::SquaredExponential, 2.0, 0.0, 0.15, 0};
  const CovarianceMatrix truth = build_covariance(spec, grid);
  const Eigen::Index n = 2000, J = 5;
  Rng rng(314);
  MatrixXd values(n * J, grid.size());
  // subjects share a latent curve; only the error part enters the estimator
  const MatrixXd latent = sample_gp(build_covariance({CovKind::SquaredExponential, 3.0,
                                                      0.0, 0.05, 0}, grid), n, rng);
  const MatrixXd errors = sample_gp(truth, n * J, rng);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < J; ++j)
      values.row(i * J + j) = latent.row(i) + errors.row(i * J + j);
  const FunctionalReplicates w1 = make_reps(n, J, grid, values);
  MatrixXd s(n, 2);
  s.col(0).setZero();
  s.col(1).setOnes();
  const ScalarReplicates w2(n, 2, s);

  const ErrorCovariance est = estimate_error_cov(w1, w2);
  const MatrixXd scaled = static_cast<double>(J) * est.functional.matrix;
  const double rel = (scaled - truth.matrix).norm() / truth.matrix.norm();
  REQUIRE(rel < 0.1);
}

TEST_CASE("estimator ignores subject-specific constant shifts") {
  const Grid grid = make_uniform_grid(8);
  Rng rng(9);
  MatrixXd v(6, 8);
  fill_standard_normal(v, rng);
  const FunctionalReplicates base = make_reps(3, 2, grid, v);
  MatrixXd shifted = v;
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      shifted.row(i * 2 + j).array() += 10.0 * static_cast<double>(i + 1);
  const FunctionalReplicates moved = make_reps(3, 2, grid, shifted);
  MatrixXd s(3, 2);
  s << 0, 1, 2, 5, -3, 4;
  const ScalarReplicates w2(3, 2, s);
  const MatrixXd a = estimate_error_cov(base, w2).functional.matrix;
  const MatrixXd b = estimate_error_cov(moved, w2).functional.matrix;
  REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("estimate scales quadratically and ignores replicate order") {
  const Grid grid = make_uniform_grid(6);
  Rng rng(13);
  MatrixXd v(8, 6);
  fill_standard_normal(v, rng);
  MatrixXd s(4, 2);
  fill_standard_normal(s, rng);
  const FunctionalReplicates w1 = make_reps(4, 2, grid, v);
  const ScalarReplicates w2(4, 2, s);
  const ErrorCovariance est = estimate_error_cov(w1, w2);

  const FunctionalReplicates w1c = make_reps(4, 2, grid, (3.0 * v).eval());
  const ScalarReplicates w2c(4, 2, (3.0 * s).eval());
  const ErrorCovariance est_c = estimate_error_cov(w1c, w2c);
  REQUIRE((est_c.functional.matrix - 9.0 * est.functional.matrix).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE(std::abs(est_c.scalar_var - 9.0 * est.scalar_var) < 1e-12);

  MatrixXd swapped(8, 6);
  for (Eigen::Index i = 0; i < 4; ++i) {
    swapped.row(i * 2) = v.row(i * 2 + 1);
    swapped.row(i * 2 + 1) = v.row(i * 2);
  }
  const FunctionalReplicates w1s = make_reps(4, 2, grid, swapped);
  const ErrorCovariance est_s = estimate_error_cov(w1s, w2);
  REQUIRE((est_s.functional.matrix - est.functional.matrix).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("unequal replicate counts use their own J") {
  const Grid grid = make_uniform_grid(4);
  Rng rng(21);
  MatrixXd v(9, 4);
  fill_standard_normal(v, rng);
  const FunctionalReplicates w1 = make_reps(3, 3, grid, v);  // J1 = 3
  MatrixXd s(3, 2);                                          // J2 = 2
  s << 0, 2, 1, 1, -1, 3;
  const ScalarReplicates w2(3, 2, s);
  const ErrorCovariance est = estimate_error_cov(w1, w2);
  // scalar block: sum of squared deviations / (3 * 1 * 2)
  double ss = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double mean = (s(i, 0) + s(i, 1)) / 2.0;
    ss += (s(i, 0) - mean) * (s(i, 0) - mean) + (s(i, 1) - mean) * (s(i, 1) - mean);
  }
  REQUIRE(std::abs(est.scalar_var - ss / 6.0) < 1e-14);
}

TEST_CASE("known covariance round trip is bit identical") {
  const Grid grid = make_uniform_grid(7);
  const CovarianceMatrix cov =
      build_covariance({CovKind::SquaredExponential, 1.7, 0.0, 0.23, 0}, grid);
  const ErrorCovariance out{cov, 0.12345678901234567};
  const std::string mpath = temp_path("gflme_cov_rt.csv");
  const std::string spath = temp_path("gflme_var_rt.csv");
  save_error_cov(out, mpath, spath);
  const ErrorCovariance in = load_known_cov(mpath, spath, grid.size());
  REQUIRE(in.functional.matrix == cov.matrix);
  REQUIRE(in.scalar_var == out.scalar_var);
}

TEST_CASE("identity matrix file loads as the identity") {
  const std::string mpath = temp_path("gflme_cov_eye.csv");
  const std::string spath = temp_path("gflme_var_eye.csv");
  {
    std::ofstream m(mpath);
    m << "1,0,0\n0,1,0\n0,0,1\n";
    std::ofstream s(spath);
    s << "0.5\n";
  }
  const ErrorCovariance in = load_known_cov(mpath, spath, 3);
  REQUIRE(in.functional.matrix == MatrixXd::Identity(3, 3));
  REQUIRE(in.scalar_var == 0.5);
}

TEST_CASE("asymmetric or mismatched files are rejected") {
  const std::string mpath = temp_path("gflme_cov_bad.csv");
  const std::string spath = temp_path("gflme_var_bad.csv");
  {
    std::ofstream m(mpath);
    m << "1,0.5,0\n0.2,1,0\n0,0,1\n";  // deliberately asymmetric
    std::ofstream s(spath);
    s << "1\n";
  }
  REQUIRE_THROWS_AS(load_known_cov(mpath, spath, 3), DataError);
  {
    std::ofstream m(mpath);
    m << "1,0\n0,1\n";
    std::ofstream s(spath);
    s << "1\n";
  }
  REQUIRE_THROWS_AS(load_known_cov(mpath, spath, 3), DataError);  // dimension mismatch
}
