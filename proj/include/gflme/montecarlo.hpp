#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "gflme/common.hpp"
#include "gflme/csv.hpp"
#include "gflme/dataset.hpp"
#include "gflme/error_cov.hpp"
#include "gflme/estimators.hpp"
#include "gflme/gp.hpp"
#include "gflme/parallel.hpp"
#include "gflme/rc.hpp"
#include "gflme/simex.hpp"

namespace gflme {

/// Named shape functions usable for the true coefficient curve and the mean
/// curve of the functional covariate.
inline double named_curve(const std::string& name, double t) {
  if (name == "sin2pi") return std::sin(2.0 * M_PI * t);
  if (name == "logistic8") return 1.0 / (1.0 + std::exp(8.0 * (t - 0.5)));
  if (name == "zero") return 0.0;
  if (name == "one") return 1.0;
  if (name == "linear") return t;
  throw ConfigError("unknown curve name: '" + name +
                    "' (expected sin2pi | logistic8 | zero | one | linear)");
}

inline VectorXd named_curve_on_grid(const std::string& name, const Grid& grid) {
  VectorXd out(grid.size());
  for (Eigen::Index h = 0; h < grid.size(); ++h) out(h) = named_curve(name, grid.points(h));
  return out;
}

/// Full generative specification of one simulation scenario.
struct SimScenario {
  long n = 500;
  int t_points = 100;
  int J = 5;
  std::string beta1_shape = "sin2pi";
  double beta2 = 1.0;
  VectorXd alpha = (VectorXd(2) << 1.0, 1.0).finished();
  std::string X1_mean = "logistic8";
  CovarianceSpec cov_X1{CovKind::SquaredExponential, 3.0, 0.0, 0.05, 0};
  CovarianceSpec cov_U1{CovKind::SquaredExponential, 1.5, 0.0, 0.15, 0};
  double sigma_X2 = 3.0;
  double sigma_U2 = 1.5;
  double mu_X2 = 2.0;
  double sigma_Z = 1.0;
  double z2_prob = 0.6;
  int n_replications = 500;
  Family family = Family::BinomialLogit;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 1) throw ConfigError("scenario: n must be >= 1");
    if (t_points < 2) throw ConfigError("scenario: t_points must be >= 2");
    if (J < 1) throw ConfigError("scenario: J must be >= 1");
    if (n_replications < 1) throw ConfigError("scenario: n_replications must be >= 1");
    if (!(sigma_X2 >= 0.0 && sigma_U2 >= 0.0 && sigma_Z >= 0.0))
      throw ConfigError("scenario: standard deviations must be >= 0");
    if (!(z2_prob >= 0.0 && z2_prob <= 1.0))
      throw ConfigError("scenario: z2_prob must lie in [0,1]");
    if (alpha.size() != 2)
      throw ConfigError("scenario: alpha must have two entries (Z is N(2,s2) + Bernoulli)");
    cov_X1.validate();
    cov_U1.validate();
    named_curve(beta1_shape, 0.5);
    named_curve(X1_mean, 0.5);
  }
};

/// True covariates plus the error-contaminated surrogate blocks for one
/// simulated sample.
struct SimulatedData {
  Grid grid;
  MatrixXd X1;  // n x points
  VectorXd X2;
  MatrixXd Z;   // n x 2
  VectorXd y;
  FunctionalReplicates W1;
  ScalarReplicates W2;
};

/// Draws one dataset from the scenario. The draw order (X1 process, X2, Z1,
/// Z2, outcome, then replicate errors) is fixed and part of the determinism
/// contract.
inline SimulatedData generate_dataset(const SimScenario& sc, Rng& rng) {
  sc.validate();
  SimulatedData data;
  data.grid = make_uniform_grid(sc.t_points);
  const Eigen::Index n = sc.n, m = data.grid.size(), J = sc.J;

  const CovarianceMatrix cov_x = build_covariance(sc.cov_X1, data.grid);
  const CovarianceMatrix cov_u = build_covariance(sc.cov_U1, data.grid);
  const VectorXd mean_curve = named_curve_on_grid(sc.X1_mean, data.grid);
  const VectorXd beta1 = named_curve_on_grid(sc.beta1_shape, data.grid);

  data.X1 = sample_gp(cov_x, n, rng);
  data.X1.rowwise() += mean_curve.transpose();

  data.X2.resize(n);
  fill_standard_normal(data.X2, rng);
  data.X2 = (sc.mu_X2 + sc.sigma_X2 * data.X2.array()).matrix();

  data.Z.resize(n, 2);
  VectorXd z1(n);
  fill_standard_normal(z1, rng);
  data.Z.col(0) = (2.0 + sc.sigma_Z * z1.array()).matrix();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    data.Z(i, 1) = unif(rng) < sc.z2_prob ? 1.0 : 0.0;

  const VectorXd weighted_beta1 =
      (beta1.array() * data.grid.weights.array()).matrix();
  VectorXd eta = data.X1 * weighted_beta1 + sc.beta2 * data.X2 + data.Z * sc.alpha;

  data.y.resize(n);
  if (sc.family == Family::BinomialLogit) {
    for (Eigen::Index i = 0; i < n; ++i)
      data.y(i) = unif(rng) < expit(eta(i)) ? 1.0 : 0.0;
  } else {
    VectorXd noise(n);
    fill_standard_normal(noise, rng);
    data.y = eta + noise;
  }

  MatrixXd w1_values(n * J, m);
  for (Eigen::Index j = 0; j < J; ++j) {
    const MatrixXd u = sample_gp(cov_u, n, rng);
    for (Eigen::Index i = 0; i < n; ++i)
      w1_values.row(i * J + j) = data.X1.row(i) + u.row(i);
  }
  data.W1 = FunctionalReplicates(n, J, data.grid, std::move(w1_values));

  MatrixXd w2_values(n, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    VectorXd u2(n);
    fill_standard_normal(u2, rng);
    w2_values.col(j) = data.X2 + sc.sigma_U2 * u2;
  }
  data.W2 = ScalarReplicates(n, J, std::move(w2_values));
  return data;
}

inline GflmDataset to_gflm_dataset(SimulatedData&& data, Family family) {
  GflmDataset ds;
  ds.family = family;
  ds.y = std::move(data.y);
  ds.Z = std::move(data.Z);
  ds.z_labels = {"z1", "z2"};
  ds.W1 = std::move(data.W1);
  ds.W2 = std::move(data.W2);
  ds.X1_true = std::move(data.X1);
  ds.X2_true = std::move(data.X2);
  ds.has_truth = true;
  ds.subject_ids.resize(static_cast<std::size_t>(ds.y.size()));
  for (std::size_t i = 0; i < ds.subject_ids.size(); ++i)
    ds.subject_ids[i] = static_cast<long long>(i + 1);
  return ds;
}

/// Monte Carlo performance summary for one estimator arm. All divisors are
/// the replication count R (not R-1), matching the reported definitions, so
/// AIMSE = ABias2 + AVar and MSE = Bias2 + Var hold exactly.
struct EstimatorMetrics {
  double abias2 = 0.0;
  double avar = 0.0;
  double aimse = 0.0;
  double bias2 = 0.0;
  double var = 0.0;
  double mse = 0.0;
  double mean_beta2 = 0.0;
  int n_used = 0;
};

inline EstimatorMetrics compute_metrics(const std::vector<VectorXd>& beta1_draws,
                                        const std::vector<double>& beta2_draws,
                                        const VectorXd& beta1_truth, double beta2_truth) {
  const std::size_t R = beta1_draws.size();
  if (R == 0 || beta2_draws.size() != R)
    throw std::invalid_argument("compute_metrics: need at least one replication");
  const Eigen::Index m = beta1_truth.size();
  EstimatorMetrics out;
  out.n_used = static_cast<int>(R);

  VectorXd mean_curve = VectorXd::Zero(m);
  for (const VectorXd& b : beta1_draws) {
    if (b.size() != m) throw ShapeError("compute_metrics: curve length mismatch");
    mean_curve += b;
  }
  mean_curve /= static_cast<double>(R);
  out.abias2 = (mean_curve - beta1_truth).squaredNorm() / static_cast<double>(m);
  double avar = 0.0;
  for (const VectorXd& b : beta1_draws) avar += (b - mean_curve).squaredNorm();
  out.avar = avar / static_cast<double>(R) / static_cast<double>(m);
  out.aimse = out.abias2 + out.avar;

  double mean_b2 = 0.0;
  for (double b : beta2_draws) mean_b2 += b;
  mean_b2 /= static_cast<double>(R);
  out.mean_beta2 = mean_b2;
  out.bias2 = (mean_b2 - beta2_truth) * (mean_b2 - beta2_truth);
  double var = 0.0;
  for (double b : beta2_draws) var += (b - mean_b2) * (b - mean_b2);
  out.var = var / static_cast<double>(R);
  out.mse = out.bias2 + out.var;
  return out;
}

constexpr std::array<EstimatorKind, 5> kAllEstimators = {
    EstimatorKind::Oracle, EstimatorKind::Simex, EstimatorKind::Rc,
    EstimatorKind::Average, EstimatorKind::Naive};

struct MetricsReport {
  SimScenario scenario;
  int n_replications = 0;
  std::array<EstimatorMetrics, 5> metrics;  // indexed like kAllEstimators
  std::array<int, 5> failures{};
  bool flagged = false;  // any arm lost more than 2% of its replications

  const EstimatorMetrics& for_estimator(EstimatorKind k) const {
    for (std::size_t a = 0; a < kAllEstimators.size(); ++a)
      if (kAllEstimators[a] == k) return metrics[a];
    throw std::invalid_argument("unknown estimator");
  }
};

/// Runs the full simulation study: R independent replications, each drawing
/// a dataset and fitting all five estimators, reduced to the bias/variance
/// summaries. Replications are parallelized over seed-split streams and
/// gathered into per-replication slots, so the report is independent of the
/// thread count.
inline MetricsReport run_study(const SimScenario& sc, unsigned n_threads = 0,
                               const SimexConfig& simex_base = {}) {
  sc.validate();
  const Grid grid = make_uniform_grid(sc.t_points);
  const BSplineBasis basis = build_basis(select_kn(sc.n), 3);
  const VectorXd beta1_truth = named_curve_on_grid(sc.beta1_shape, grid);
  const std::vector<std::string> z_labels = {"z1", "z2"};
  const std::size_t R = static_cast<std::size_t>(sc.n_replications);

  struct Slot {
    std::array<VectorXd, 5> beta1;
    std::array<double, 5> beta2{};
    std::array<char, 5> ok{};
  };
  std::vector<Slot> slots(R);

  parallel_for(R, n_threads, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(sc.seed, r);
    Rng rng(derive_seed(rep_seed, 1));
    SimulatedData data = generate_dataset(sc, rng);

    auto record = [&](std::size_t arm, const std::function<FitResult()>& fit) {
      try {
        const FitResult res = fit();
        if (res.beta1_on_grid.allFinite() && std::isfinite(res.beta2)) {
          slots[r].beta1[arm] = res.beta1_on_grid;
          slots[r].beta2[arm] = res.beta2;
          slots[r].ok[arm] = 1;
        }
      } catch (const std::exception&) {
        // counted below as a failed replication for this arm
      }
    };

    record(0, [&] {
      return fit_oracle(data.X1, data.X2, data.Z, z_labels, data.y, basis, grid, sc.family);
    });
    record(1, [&] {
      const ErrorCovariance errcov = estimate_error_cov(data.W1, data.W2);
      SimexConfig cfg = simex_base;
      cfg.seed = derive_seed(rep_seed, 2);
      return run_simex(data.W1, data.W2, data.Z, z_labels, data.y, basis, grid, sc.family,
                       cfg, errcov)
          .first;
    });
    record(2, [&] {
      return fit_rc(data.W1, data.W2, data.Z, z_labels, data.y, basis, grid, sc.family);
    });
    record(3, [&] {
      return fit_average(data.W1, data.W2, data.Z, z_labels, data.y, basis, grid, sc.family);
    });
    record(4, [&] {
      return fit_naive(data.W1, data.W2, data.Z, z_labels, data.y, basis, grid, sc.family);
    });
  });

  MetricsReport report;
  report.scenario = sc;
  report.n_replications = sc.n_replications;
  for (std::size_t arm = 0; arm < kAllEstimators.size(); ++arm) {
    std::vector<VectorXd> b1;
    std::vector<double> b2;
    b1.reserve(R);
    b2.reserve(R);
    for (const Slot& s : slots) {
      if (s.ok[arm]) {
        b1.push_back(s.beta1[arm]);
        b2.push_back(s.beta2[arm]);
      }
    }
    report.failures[arm] = static_cast<int>(R - b1.size());
    if (b1.empty())
      throw NumericError("simulation study: every replication failed for estimator " +
                         to_string(kAllEstimators[arm]));
    report.metrics[arm] = compute_metrics(b1, b2, beta1_truth, sc.beta2);
    if (static_cast<double>(report.failures[arm]) > 0.02 * static_cast<double>(R))
      report.flagged = true;
  }
  return report;
}

inline const std::array<std::string, 6> kMetricNames = {"ABias2", "AVar", "AIMSE",
                                                        "Bias2",  "Var",  "MSE"};

inline double metric_value(const EstimatorMetrics& m, const std::string& name) {
  if (name == "ABias2") return m.abias2;
  if (name == "AVar") return m.avar;
  if (name == "AIMSE") return m.aimse;
  if (name == "Bias2") return m.bias2;
  if (name == "Var") return m.var;
  if (name == "MSE") return m.mse;
  throw std::invalid_argument("unknown metric: " + name);
}

/// One row per (estimator, metric), in the fixed estimator and metric order.
inline void write_metrics_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "estimator,metric,value\n";
  for (std::size_t arm = 0; arm < kAllEstimators.size(); ++arm)
    for (const std::string& name : kMetricNames)
      out << to_string(kAllEstimators[arm]) << ',' << name << ','
          << fmt_double(metric_value(report.metrics[arm], name)) << '\n';
}

}  // namespace gflme
