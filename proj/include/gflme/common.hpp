#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gflme {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes (usage=1, data=2, numeric=3).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdentifiabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All randomness flows through explicitly seeded 64-bit generators; there is
// no ambient global RNG anywhere in the library.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a stream index.
// The splitmix64 scramble keeps nearby indices from producing correlated
// mt19937_64 states.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0x51c6a3d9e1f24b87ULL));
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  return n01(rng);
}

// Fills row-major so the draw order is part of the determinism contract.
inline void fill_standard_normal(MatrixXd& out, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = n01(rng);
}

inline void fill_standard_normal(VectorXd& out, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = n01(rng);
}

}  // namespace gflme
