#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gflme/common.hpp"
#include "gflme/csv.hpp"
#include "gflme/glm.hpp"
#include "gflme/grid.hpp"

namespace gflme {

/// One analysis-ready dataset: outcomes, error-free covariates, and the two
/// replicated surrogate blocks on a shared grid. True covariates are present
/// only when attached explicitly (simulation or oracle runs).
struct GflmDataset {
  std::vector<long long> subject_ids;  // sorted ascending
  VectorXd y;
  MatrixXd Z;
  std::vector<std::string> z_labels;
  FunctionalReplicates W1;
  ScalarReplicates W2;
  Family family = Family::BinomialLogit;

  bool has_truth = false;
  MatrixXd X1_true;
  VectorXd X2_true;

  Eigen::Index n() const { return y.size(); }

  void validate() const {
    const Eigen::Index n_ = y.size();
    if (Z.rows() != n_ || W1.n_subjects != n_ || W2.n_subjects != n_)
      throw ShapeError("dataset blocks disagree on the number of subjects");
    if (static_cast<Eigen::Index>(subject_ids.size()) != n_)
      throw ShapeError("dataset subject ids do not match n");
    if (family == Family::BinomialLogit)
      for (Eigen::Index i = 0; i < n_; ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
          throw DataError("binomial outcomes must be 0 or 1");
    if (has_truth && (X1_true.rows() != n_ || X2_true.size() != n_))
      throw ShapeError("true covariate blocks disagree on the number of subjects");
  }
};

namespace detail {

struct LongFunctional {
  std::vector<long long> ids;                 // sorted subject ids
  std::vector<long long> replicate_labels;    // sorted original replicate ids
  MatrixXd values;                            // (n*J) x n_points
  Eigen::Index n_points = 0;
};

// Reads the long format (subject_id, replicate, time_index, value), pivots
// onto a dense grid, and rejects any incomplete (subject, replicate) block.
inline LongFunctional read_long_functional(const std::string& path,
                                           Eigen::Index n_points_expected) {
  auto rows = read_csv(path);
  if (rows.empty()) throw DataError("empty functional file: " + path);
  const std::vector<std::string> header = {"subject_id", "replicate", "time_index", "value"};
  if (rows[0] != header)
    throw DataError("functional file must have header subject_id,replicate,time_index,value: " +
                    path);

  struct Cell {
    long long id;
    long long rep;
    long long t;
    double v;
  };
  std::vector<Cell> cells;
  cells.reserve(rows.size() - 1);
  long long max_t = -1;
  std::set<long long> id_set, rep_set;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 4) throw DataError("bad row in " + path);
    Cell c;
    c.id = parse_int(rows[r][0], path);
    c.rep = parse_int(rows[r][1], path);
    c.t = parse_int(rows[r][2], path);
    c.v = parse_double(rows[r][3], path);
    if (c.t < 0) throw DataError("negative time_index in " + path);
    max_t = std::max(max_t, c.t);
    id_set.insert(c.id);
    rep_set.insert(c.rep);
    cells.push_back(c);
  }
  LongFunctional out;
  out.n_points = n_points_expected > 0 ? n_points_expected : max_t + 1;
  if (max_t >= out.n_points)
    throw DataError("time_index " + std::to_string(max_t) + " exceeds grid size " +
                    std::to_string(out.n_points) + " in " + path);
  out.ids.assign(id_set.begin(), id_set.end());
  out.replicate_labels.assign(rep_set.begin(), rep_set.end());

  std::map<long long, Eigen::Index> id_index, rep_index;
  for (std::size_t i = 0; i < out.ids.size(); ++i)
    id_index[out.ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t j = 0; j < out.replicate_labels.size(); ++j)
    rep_index[out.replicate_labels[j]] = static_cast<Eigen::Index>(j);

  const Eigen::Index n = static_cast<Eigen::Index>(out.ids.size());
  const Eigen::Index J = static_cast<Eigen::Index>(out.replicate_labels.size());
  out.values.resize(n * J, out.n_points);
  MatrixXd seen = MatrixXd::Zero(n * J, out.n_points);
  for (const Cell& c : cells) {
    const Eigen::Index row = id_index[c.id] * J + rep_index[c.rep];
    if (seen(row, c.t) != 0.0)
      throw DataError("duplicate (subject " + std::to_string(c.id) + ", replicate " +
                      std::to_string(c.rep) + ", time_index " + std::to_string(c.t) +
                      ") in " + path);
    seen(row, c.t) = 1.0;
    out.values(row, c.t) = c.v;
  }
  std::string offenders;
  int n_offenders = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < J; ++j) {
      Eigen::Index have = static_cast<Eigen::Index>(seen.row(i * J + j).sum());
      if (have != out.n_points) {
        if (n_offenders < 10)
          offenders += " (subject " + std::to_string(out.ids[i]) + ", replicate " +
                       std::to_string(out.replicate_labels[j]) + ": " +
                       std::to_string(have) + "/" + std::to_string(out.n_points) + ")";
        ++n_offenders;
      }
    }
  if (n_offenders > 0)
    throw DataError("incomplete functional blocks in " + path + ":" + offenders +
                    (n_offenders > 10 ? " ..." : ""));
  return out;
}

struct LongScalar {
  std::vector<long long> ids;
  std::vector<long long> replicate_labels;
  MatrixXd values;  // n x J
};

inline LongScalar read_long_scalar(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw DataError("empty scalar file: " + path);
  const std::vector<std::string> header = {"subject_id", "replicate", "value"};
  if (rows[0] != header)
    throw DataError("scalar file must have header subject_id,replicate,value: " + path);
  std::set<long long> id_set, rep_set;
  std::vector<std::tuple<long long, long long, double>> cells;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw DataError("bad row in " + path);
    const long long id = parse_int(rows[r][0], path);
    const long long rep = parse_int(rows[r][1], path);
    const double v = parse_double(rows[r][2], path);
    id_set.insert(id);
    rep_set.insert(rep);
    cells.emplace_back(id, rep, v);
  }
  LongScalar out;
  out.ids.assign(id_set.begin(), id_set.end());
  out.replicate_labels.assign(rep_set.begin(), rep_set.end());
  std::map<long long, Eigen::Index> id_index, rep_index;
  for (std::size_t i = 0; i < out.ids.size(); ++i)
    id_index[out.ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t j = 0; j < out.replicate_labels.size(); ++j)
    rep_index[out.replicate_labels[j]] = static_cast<Eigen::Index>(j);
  const Eigen::Index n = static_cast<Eigen::Index>(out.ids.size());
  const Eigen::Index J = static_cast<Eigen::Index>(out.replicate_labels.size());
  out.values.resize(n, J);
  MatrixXd seen = MatrixXd::Zero(n, J);
  for (auto& [id, rep, v] : cells) {
    const Eigen::Index i = id_index[id], j = rep_index[rep];
    if (seen(i, j) != 0.0)
      throw DataError("duplicate (subject " + std::to_string(id) + ", replicate " +
                      std::to_string(rep) + ") in " + path);
    seen(i, j) = 1.0;
    out.values(i, j) = v;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < J; ++j)
      if (seen(i, j) == 0.0)
        throw DataError("missing replicate " + std::to_string(out.replicate_labels[j]) +
                        " for subject " + std::to_string(out.ids[i]) + " in " + path);
  return out;
}

inline void require_same_ids(const std::vector<long long>& a,
                             const std::vector<long long>& b, const std::string& what) {
  if (a == b) return;
  for (long long id : a)
    if (!std::binary_search(b.begin(), b.end(), id))
      throw DataError("subject " + std::to_string(id) + " missing from " + what);
  for (long long id : b)
    if (!std::binary_search(a.begin(), a.end(), id))
      throw DataError("subject " + std::to_string(id) + " present only in " + what);
  throw DataError("subject ids disagree with " + what);
}

}  // namespace detail

/// Loads the three CSVs (long functional, long scalar, per-subject outcomes)
/// into one dataset. Subjects are sorted by id; the join is strict, so any
/// id present in one file but not another is an error. n_points = 0 infers
/// the grid size from the largest time_index.
inline GflmDataset load_dataset(const std::string& functional_path,
                                const std::string& scalar_path,
                                const std::string& outcomes_path, Eigen::Index n_points,
                                Family family) {
  auto fun = detail::read_long_functional(functional_path, n_points);
  auto sca = detail::read_long_scalar(scalar_path);

  auto orows = read_csv(outcomes_path);
  if (orows.empty()) throw DataError("empty outcomes file: " + outcomes_path);
  if (orows[0].size() < 2 || orows[0][0] != "subject_id" || orows[0][1] != "y")
    throw DataError("outcomes file must have header subject_id,y[,z...]: " + outcomes_path);
  std::vector<std::string> z_labels(orows[0].begin() + 2, orows[0].end());
  const Eigen::Index p = static_cast<Eigen::Index>(z_labels.size());

  std::map<long long, std::pair<double, VectorXd>> outcome_map;
  for (std::size_t r = 1; r < orows.size(); ++r) {
    if (static_cast<Eigen::Index>(orows[r].size()) != p + 2)
      throw DataError("bad row in " + outcomes_path);
    const long long id = parse_int(orows[r][0], outcomes_path);
    if (outcome_map.count(id))
      throw DataError("duplicate subject " + std::to_string(id) + " in " + outcomes_path);
    VectorXd z(p);
    for (Eigen::Index c = 0; c < p; ++c)
      z(c) = parse_double(orows[r][c + 2], outcomes_path);
    outcome_map[id] = {parse_double(orows[r][1], outcomes_path), std::move(z)};
  }
  std::vector<long long> outcome_ids;
  outcome_ids.reserve(outcome_map.size());
  for (auto& [id, _] : outcome_map) outcome_ids.push_back(id);

  detail::require_same_ids(fun.ids, outcome_ids, outcomes_path);
  detail::require_same_ids(fun.ids, sca.ids, scalar_path);

  const Eigen::Index n = static_cast<Eigen::Index>(fun.ids.size());
  GflmDataset ds;
  ds.subject_ids = fun.ids;
  ds.family = family;
  ds.z_labels = std::move(z_labels);
  ds.y.resize(n);
  ds.Z.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [yv, z] = outcome_map[ds.subject_ids[i]];
    ds.y(i) = yv;
    ds.Z.row(i) = z.transpose();
  }
  ds.W1 = FunctionalReplicates(n, static_cast<Eigen::Index>(fun.replicate_labels.size()),
                               make_uniform_grid(fun.n_points), std::move(fun.values));
  ds.W2 = ScalarReplicates(n, static_cast<Eigen::Index>(sca.replicate_labels.size()),
                           std::move(sca.values));
  ds.validate();
  return ds;
}

/// Attaches true covariates from single-replicate files of the same formats.
inline void attach_truth(GflmDataset& ds, const std::string& true_functional_path,
                         const std::string& true_scalar_path) {
  auto fun = detail::read_long_functional(true_functional_path, ds.W1.grid.size());
  auto sca = detail::read_long_scalar(true_scalar_path);
  if (fun.replicate_labels.size() != 1 || sca.replicate_labels.size() != 1)
    throw DataError("true covariate files must contain exactly one replicate");
  detail::require_same_ids(ds.subject_ids, fun.ids, true_functional_path);
  detail::require_same_ids(ds.subject_ids, sca.ids, true_scalar_path);
  ds.X1_true = std::move(fun.values);
  ds.X2_true = sca.values.col(0);
  ds.has_truth = true;
  ds.validate();
}

/// Emits the dataset back out in the canonical sorted order; a save/load
/// round trip reproduces the dataset exactly.
inline void save_dataset(const GflmDataset& ds, const std::string& functional_path,
                         const std::string& scalar_path, const std::string& outcomes_path) {
  std::ofstream f(functional_path);
  if (!f) throw DataError("cannot write file: " + functional_path);
  f << "subject_id,replicate,time_index,value\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = 0; j < ds.W1.n_replicates; ++j)
      for (Eigen::Index h = 0; h < ds.W1.grid.size(); ++h)
        f << ds.subject_ids[i] << ',' << (j + 1) << ',' << h << ','
          << fmt_double(ds.W1.curve(i, j)(h)) << '\n';

  std::ofstream s(scalar_path);
  if (!s) throw DataError("cannot write file: " + scalar_path);
  s << "subject_id,replicate,value\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = 0; j < ds.W2.n_replicates; ++j)
      s << ds.subject_ids[i] << ',' << (j + 1) << ',' << fmt_double(ds.W2.values(i, j))
        << '\n';

  std::ofstream o(outcomes_path);
  if (!o) throw DataError("cannot write file: " + outcomes_path);
  o << "subject_id,y";
  for (const auto& l : ds.z_labels) o << ',' << l;
  o << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    o << ds.subject_ids[i] << ',' << fmt_double(ds.y(i));
    for (Eigen::Index c = 0; c < ds.Z.cols(); ++c) o << ',' << fmt_double(ds.Z(i, c));
    o << '\n';
  }
}

/// Subject-level resample: replicate blocks, outcome, covariates, and any
/// attached truth travel together. Indices may repeat.
inline GflmDataset resample_subjects(const GflmDataset& ds,
                                     const std::vector<Eigen::Index>& idx) {
  GflmDataset out;
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  out.family = ds.family;
  out.z_labels = ds.z_labels;
  out.subject_ids.resize(idx.size());
  out.y.resize(n);
  out.Z.resize(n, ds.Z.cols());
  MatrixXd w1(n * ds.W1.n_replicates, ds.W1.grid.size());
  MatrixXd w2(n, ds.W2.n_replicates);
  if (ds.has_truth) {
    out.X1_true.resize(n, ds.X1_true.cols());
    out.X2_true.resize(n);
    out.has_truth = true;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = idx[static_cast<std::size_t>(k)];
    if (i < 0 || i >= ds.n()) throw std::invalid_argument("resample index out of range");
    out.subject_ids[static_cast<std::size_t>(k)] = ds.subject_ids[static_cast<std::size_t>(i)];
    out.y(k) = ds.y(i);
    out.Z.row(k) = ds.Z.row(i);
    for (Eigen::Index j = 0; j < ds.W1.n_replicates; ++j)
      w1.row(k * ds.W1.n_replicates + j) = ds.W1.curve(i, j);
    w2.row(k) = ds.W2.values.row(i);
    if (ds.has_truth) {
      out.X1_true.row(k) = ds.X1_true.row(i);
      out.X2_true(k) = ds.X2_true(i);
    }
  }
  out.W1 = FunctionalReplicates(n, ds.W1.n_replicates, ds.W1.grid, std::move(w1));
  out.W2 = ScalarReplicates(n, ds.W2.n_replicates, std::move(w2));
  return out;
}

}  // namespace gflme
