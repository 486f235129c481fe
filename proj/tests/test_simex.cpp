#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gflme/montecarlo.hpp"
#include "gflme/simex.hpp"

using namespace gflme;

namespace {

const std::vector<std::string> kZ = {"z1", "z2"};

ErrorCovariance zero_errcov(const Grid& grid) {
  return ErrorCovariance{CovarianceMatrix{MatrixXd::Zero(grid.size(), grid.size())}, 0.0};
}

}  // namespace

TEST_CASE("quadratic extrapolation exact cases") {
  const std::vector<double> lambdas = {0.0, 0.5, 1.0, 1.5, 2.0};
  VectorXd constant = VectorXd::Constant(5, 3.25);
  REQUIRE(std::abs(extrapolate_quadratic(lambdas, constant) - 3.25) < 1e-12);

  VectorXd linear(5);
  for (int i = 0; i < 5; ++i) linear(i) = lambdas[static_cast<std::size_t>(i)];
  REQUIRE(std::abs(extrapolate_quadratic(lambdas, linear) - (-1.0)) < 1e-12);

  VectorXd quad(5);
  for (int i = 0; i < 5; ++i)
    quad(i) = lambdas[static_cast<std::size_t>(i)] * lambdas[static_cast<std::size_t>(i)];
  REQUIRE(std::abs(extrapolate_quadratic(lambdas, quad) - 1.0) < 1e-12);

  // theta(lambda) = 1 + 2 lambda - 0.5 lambda^2 -> theta(-1) = -1.5
  VectorXd theta(5);
  for (int i = 0; i < 5; ++i) {
    const double l = lambdas[static_cast<std::size_t>(i)];
    theta(i) = 1.0 + 2.0 * l - 0.5 * l * l;
  }
  REQUIRE(std::abs(extrapolate_quadratic(lambdas, theta) - (-1.5)) < 1e-10);
}

TEST_CASE("extrapolation recovers arbitrary quadratics on irregular grids") {
  const std::vector<double> lambdas = {0.1, 0.35, 0.8, 1.3, 1.9};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = unif(rng), b = unif(rng), c = unif(rng);
    VectorXd means(5);
    for (int i = 0; i < 5; ++i) {
      const double l = lambdas[static_cast<std::size_t>(i)];
      means(i) = a + b * l + c * l * l;
    }
    REQUIRE(std::abs(extrapolate_quadratic(lambdas, means) - (a - b + c)) < 1e-10);
  }
}

TEST_CASE("extrapolation input validation") {
  REQUIRE_THROWS_AS(extrapolate_quadratic({0.0, 1.0}, VectorXd::Zero(2)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(extrapolate_quadratic({0.0, 1.0, 1.0}, VectorXd::Zero(3)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(extrapolate_quadratic({0.0, 0.5, 1.0}, VectorXd::Zero(4)), ShapeError);
}

TEST_CASE("simex config validation") {
  SimexConfig cfg;
  cfg.lambda_grid = {0.0, 0.5};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambda_grid = {0.0, 0.5, 3.0};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);  // above default bound
  cfg.max_lambda = 4.0;
  REQUIRE_NOTHROW(cfg.validate());  // bound is overridable
  cfg.lambda_grid = {0.0, 0.5, 0.5};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambda_grid = {0.0, -0.5, 1.0};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SimexConfig{};
  cfg.repetitions = 1;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("pseudo data at lambda 0 is the input, bitwise") {
  const Grid grid = make_uniform_grid(20);
  Rng rng(1);
  MatrixXd w1(15, 20);
  fill_standard_normal(w1, rng);
  VectorXd w2(15);
  fill_standard_normal(w2, rng);
  const ErrorCovariance errcov{
      CovarianceMatrix{build_covariance({CovKind::SquaredExponential, 1.0, 0.0, 0.15, 0},
                                        grid)
                           .matrix},
      2.0};
  Rng draw_rng(7);
  const auto before = draw_rng();
  Rng draw_rng2(7);
  auto [p1, p2] = make_pseudo_data(w1, w2, errcov, 0.0, draw_rng2);
  REQUIRE(p1 == w1);
  REQUIRE(p2 == w2);
  REQUIRE(draw_rng2() == before);  // no draw consumed
}

TEST_CASE("zero scalar variance leaves the scalars unchanged at any lambda") {
  const Grid grid = make_uniform_grid(10);
  Rng rng(3);
  MatrixXd w1(8, 10);
  fill_standard_normal(w1, rng);
  VectorXd w2(8);
  fill_standard_normal(w2, rng);
  ErrorCovariance errcov = zero_errcov(grid);
  errcov.functional.matrix =
      build_covariance({CovKind::SquaredExponential, 0.5, 0.0, 0.2, 0}, grid).matrix;
  Rng draw_rng(11);
  auto [p1, p2] = make_pseudo_data(w1, w2, errcov, 1.5, draw_rng);
  REQUIRE(p2 == w2);
  REQUIRE(p1 != w1);
}

TEST_CASE("negative lambda is rejected") {
  const Grid grid = make_uniform_grid(5);
  Rng rng(1);
  REQUIRE_THROWS_AS(make_pseudo_data(MatrixXd::Zero(2, 5), VectorXd::Zero(2),
                                     zero_errcov(grid), -0.5, rng),
                    std::invalid_argument);
}

TEST_CASE("pseudo scalar variance scales like lambda") {
  const Grid grid = make_uniform_grid(4);
  const Eigen::Index n = 100000;
  const double sigma2 = 1.7, lambda = 2.0;
  ErrorCovariance errcov = zero_errcov(grid);
  errcov.scalar_var = sigma2;
  const VectorXd w2 = VectorXd::Zero(n);
  Rng rng(99);
  auto [p1, p2] = make_pseudo_data(MatrixXd::Zero(n, 4), w2, errcov, lambda, rng);
  const double mean = p2.mean();
  const double var = (p2.array() - mean).square().sum() / static_cast<double>(n);
  REQUIRE(std::abs(var - lambda * sigma2) < 0.03 * lambda * sigma2);
}

TEST_CASE("zero error covariance collapses SIMEX onto the average fit") {
  SimScenario sc;
  sc.n = 150;
  sc.t_points = 30;
  sc.cov_U1 = {CovKind::SquaredExponential, 1.0, 0.0, 0.15, 0};
  sc.seed = 31;
  Rng rng(derive_seed(sc.seed, 0));
  const SimulatedData d = generate_dataset(sc, rng);
  const BSplineBasis basis = build_basis(5, 3);
  SimexConfig cfg;
  cfg.repetitions = 10;
  cfg.seed = 5;
  const auto [fit, trace] = run_simex(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family,
                                      cfg, zero_errcov(d.grid));
  const FitResult avg = fit_average(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family);
  REQUIRE((fit.glm_diag.coefficients - avg.glm_diag.coefficients).cwiseAbs().maxCoeff() <
          1e-8);
  // constant trace: every row equals the lambda = 0 row
  for (Eigen::Index r = 1; r < trace.mean_coefficients.rows(); ++r)
    REQUIRE((trace.mean_coefficients.row(r) - trace.mean_coefficients.row(0))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
}

TEST_CASE("trace row at lambda 0 equals the average-fit coefficients") {
  SimScenario sc;
  sc.n = 120;
  sc.t_points = 25;
  sc.seed = 37;
  Rng rng(derive_seed(sc.seed, 0));
  const SimulatedData d = generate_dataset(sc, rng);
  const BSplineBasis basis = build_basis(5, 3);
  const ErrorCovariance errcov = estimate_error_cov(d.W1, d.W2);
  SimexConfig cfg;
  cfg.repetitions = 5;
  cfg.seed = 8;
  const auto [fit, trace] =
      run_simex(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family, cfg, errcov);
  const FitResult avg = fit_average(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family);
  REQUIRE((trace.mean_coefficients.row(0).transpose() - avg.glm_diag.coefficients)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  REQUIRE(trace.failures[0] == 0);
}

TEST_CASE("identical seeds give bit-identical SIMEX results, serial or parallel") {
  SimScenario sc;
  sc.n = 100;
  sc.t_points = 20;
  sc.seed = 41;
  Rng rng(derive_seed(sc.seed, 0));
  const SimulatedData d = generate_dataset(sc, rng);
  const BSplineBasis basis = build_basis(5, 3);
  const ErrorCovariance errcov = estimate_error_cov(d.W1, d.W2);
  SimexConfig cfg;
  cfg.repetitions = 12;
  cfg.seed = 2024;
  const auto [fit1, trace1] =
      run_simex(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family, cfg, errcov, true, {}, 1);
  const auto [fit2, trace2] =
      run_simex(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family, cfg, errcov, true, {}, 4);
  REQUIRE(fit1.glm_diag.coefficients == fit2.glm_diag.coefficients);
  REQUIRE(trace1.mean_coefficients == trace2.mean_coefficients);
  REQUIRE(fit1.beta1_on_grid == fit2.beta1_on_grid);
}

TEST_CASE("attenuation grows along the lambda trace") {
  // inflating the error pushes the scalar coefficient further toward zero
  SimScenario sc;
  sc.n = 1500;
  sc.t_points = 40;
  sc.cov_U1 = {CovKind::SquaredExponential, 3.0, 0.0, 0.15, 0};
  sc.sigma_U2 = 3.0;
  sc.seed = 47;
  const BSplineBasis basis = build_basis(select_kn(sc.n), 3);
  int monotone = 0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(sc.seed, static_cast<std::uint64_t>(r)));
    const SimulatedData d = generate_dataset(sc, rng);
    const ErrorCovariance errcov = estimate_error_cov(d.W1, d.W2);
    SimexConfig cfg;
    cfg.repetitions = 40;
    cfg.seed = derive_seed(sc.seed, 1000 + static_cast<std::uint64_t>(r));
    const auto [fit, trace] =
        run_simex(d.W1, d.W2, d.Z, kZ, d.y, basis, d.grid, sc.family, cfg, errcov, true,
                  {}, 2);
    // beta2 column: intercept + K basis columns come first
    const Eigen::Index b2 = 1 + basis.num_basis;
    bool decreasing = true;
    for (Eigen::Index row = 1; row < trace.mean_coefficients.rows(); ++row)
      if (trace.mean_coefficients(row, b2) >= trace.mean_coefficients(row - 1, b2))
        decreasing = false;
    if (decreasing) ++monotone;
  }
  REQUIRE(monotone >= static_cast<int>(0.95 * reps));
}
