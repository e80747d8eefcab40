#pragma once

// Seeded generators and independent oracles shared by the test binaries.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "mlra/linalg.hpp"
#include "mlra/bit_matrix.hpp"

namespace mlra::testing {

inline RealMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return gaussian_matrix(r, c, rng);
}

inline BitMatrix random_bits(std::size_t r, std::size_t c, double p_one, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p_one);
  BitMatrix b(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) b.set(i, j, coin(rng));
  return b;
}

inline RealMatrix random_low_rank(std::size_t r, std::size_t c, std::size_t k, std::mt19937_64& rng) {
  return multiply_nt(gaussian_matrix(r, k, rng), gaussian_matrix(c, k, rng));
}

inline Eigen::MatrixXd to_eigen(const RealMatrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

/// Singular values from Eigen's Jacobi SVD, descending.
inline std::vector<double> oracle_singular_values(const RealMatrix& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a));
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

/// sigma_{k+1}^2 + ... from the oracle spectrum.
inline double oracle_tail(const RealMatrix& a, std::size_t k) {
  const auto s = oracle_singular_values(a);
  double t = 0.0;
  for (std::size_t i = k; i < s.size(); ++i) t += s[i] * s[i];
  return t;
}

/// Numerical rank via the oracle spectrum.
inline std::size_t oracle_rank(const RealMatrix& a, double rel = 1e-9) {
  const auto s = oracle_singular_values(a);
  if (s.empty() || s[0] == 0.0) return 0;
  std::size_t r = 0;
  for (double x : s) r += x > rel * s[0] ? 1 : 0;
  return r;
}

/// Direct double loop: sum over W = 1 of (A - L)^2 with L given densely.
inline double direct_masked_sq(const RealMatrix& a, const BitMatrix& w, const RealMatrix& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (w(i, j)) s += (a(i, j) - l(i, j)) * (a(i, j) - l(i, j));
  return s;
}

}  // namespace mlra::testing
