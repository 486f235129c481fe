#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gflme/csv.hpp"
#include "gflme/montecarlo.hpp"

namespace gflme {

namespace detail {

inline void apply_cov_key(CovarianceSpec& spec, const std::string& sub,
                          const std::string& value, const std::string& key) {
  if (sub == "kind") {
    spec.kind = cov_kind_from_string(value);
  } else if (sub == "sigma") {
    spec.sigma = parse_double(value, key);
  } else if (sub == "rho") {
    spec.rho = parse_double(value, key);
  } else if (sub == "length_scale") {
    spec.length_scale = parse_double(value, key);
  } else if (sub == "jitter_seed") {
    spec.jitter_seed = static_cast<std::uint64_t>(parse_int(value, key));
  } else {
    throw ConfigError("unknown scenario key: " + key);
  }
}

}  // namespace detail

/// Parses the flat key=value scenario format. Keys are named exactly after
/// the scenario fields (covariance blocks use cov_X1.* / cov_U1.* sub-keys);
/// anything else is rejected rather than silently defaulted. '#' starts a
/// comment.
inline SimScenario parse_scenario(std::istream& in, const std::string& origin) {
  SimScenario sc;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key or value");

    if (key == "n") {
      sc.n = parse_int(value, key);
    } else if (key == "t_points") {
      sc.t_points = static_cast<int>(parse_int(value, key));
    } else if (key == "J") {
      sc.J = static_cast<int>(parse_int(value, key));
    } else if (key == "beta1_shape") {
      sc.beta1_shape = value;
    } else if (key == "beta2") {
      sc.beta2 = parse_double(value, key);
    } else if (key == "alpha") {
      const auto parts = split_csv_line(value);
      sc.alpha.resize(static_cast<Eigen::Index>(parts.size()));
      for (std::size_t i = 0; i < parts.size(); ++i)
        sc.alpha(static_cast<Eigen::Index>(i)) = parse_double(parts[i], key);
    } else if (key == "X1_mean") {
      sc.X1_mean = value;
    } else if (key.rfind("cov_X1.", 0) == 0) {
      detail::apply_cov_key(sc.cov_X1, key.substr(7), value, key);
    } else if (key.rfind("cov_U1.", 0) == 0) {
      detail::apply_cov_key(sc.cov_U1, key.substr(7), value, key);
    } else if (key == "sigma_X2") {
      sc.sigma_X2 = parse_double(value, key);
    } else if (key == "sigma_U2") {
      sc.sigma_U2 = parse_double(value, key);
    } else if (key == "mu_X2") {
      sc.mu_X2 = parse_double(value, key);
    } else if (key == "sigma_Z") {
      sc.sigma_Z = parse_double(value, key);
    } else if (key == "z2_prob") {
      sc.z2_prob = parse_double(value, key);
    } else if (key == "n_replications") {
      sc.n_replications = static_cast<int>(parse_int(value, key));
    } else if (key == "family") {
      sc.family = family_from_string(value);
    } else if (key == "seed") {
      sc.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown scenario key: " + key);
    }
  }
  sc.validate();
  return sc;
}

inline SimScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  return parse_scenario(in, path);
}

inline std::string format_scenario(const SimScenario& sc) {
  std::ostringstream out;
  out << "n = " << sc.n << '\n';
  out << "t_points = " << sc.t_points << '\n';
  out << "J = " << sc.J << '\n';
  out << "beta1_shape = " << sc.beta1_shape << '\n';
  out << "beta2 = " << fmt_double(sc.beta2) << '\n';
  out << "alpha = ";
  for (Eigen::Index i = 0; i < sc.alpha.size(); ++i)
    out << (i ? "," : "") << fmt_double(sc.alpha(i));
  out << '\n';
  out << "X1_mean = " << sc.X1_mean << '\n';
  for (const auto& [name, spec] :
       {std::pair<std::string, const CovarianceSpec*>{"cov_X1", &sc.cov_X1},
        std::pair<std::string, const CovarianceSpec*>{"cov_U1", &sc.cov_U1}}) {
    out << name << ".kind = " << to_string(spec->kind) << '\n';
    out << name << ".sigma = " << fmt_double(spec->sigma) << '\n';
    if (spec->kind == CovKind::SquaredExponential)
      out << name << ".length_scale = " << fmt_double(spec->length_scale) << '\n';
    else
      out << name << ".rho = " << fmt_double(spec->rho) << '\n';
    if (spec->kind == CovKind::Unstructured)
      out << name << ".jitter_seed = " << spec->jitter_seed << '\n';
  }
  out << "sigma_X2 = " << fmt_double(sc.sigma_X2) << '\n';
  out << "sigma_U2 = " << fmt_double(sc.sigma_U2) << '\n';
  out << "mu_X2 = " << fmt_double(sc.mu_X2) << '\n';
  out << "sigma_Z = " << fmt_double(sc.sigma_Z) << '\n';
  out << "z2_prob = " << fmt_double(sc.z2_prob) << '\n';
  out << "n_replications = " << sc.n_replications << '\n';
  out << "family = " << to_string(sc.family) << '\n';
  out << "seed = " << sc.seed << '\n';
  return out.str();
}

}  // namespace gflme
