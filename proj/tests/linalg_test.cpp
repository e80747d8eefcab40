#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mlra/linalg.hpp"
#include "support.hpp"

namespace mlra {
namespace {

using testing::oracle_tail;
using testing::random_matrix;

TEST(Hadamard, IdentityMaskKeepsDiagonal) {
  const auto a = RealMatrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(hadamard(a, RealMatrix::identity(2)), RealMatrix::from_rows({{1, 0}, {0, 4}}));
}

TEST(Hadamard, OnesAndZerosMasks) {
  std::mt19937_64 rng(1);
  const auto a = random_matrix(3, 5, rng);
  EXPECT_EQ(hadamard(a, RealMatrix(3, 5, 1.0)), a);
  EXPECT_EQ(hadamard(a, RealMatrix(3, 5, 0.0)), RealMatrix(3, 5, 0.0));
}

TEST(Hadamard, ShapeMismatchThrows) {
  EXPECT_THROW(hadamard(RealMatrix(2, 2), RealMatrix(2, 3)), ShapeError);
  EXPECT_THROW(RealMatrix(2, 2, std::vector<double>(3)), ShapeError);
}

TEST(EntrywiseNorm, SmallExamples) {
  const auto a = RealMatrix::from_rows({{3, 4}});
  EXPECT_DOUBLE_EQ(entrywise_norm(a, NormKind::squared_frobenius()), 25.0);
  EXPECT_DOUBLE_EQ(entrywise_norm(a, NormKind::entrywise_zero()), 2.0);
  EXPECT_DOUBLE_EQ(entrywise_norm(a, NormKind::entrywise_p(1.0)), 7.0);
  EXPECT_THROW(NormKind::entrywise_p(0.0), ParameterError);
}

TEST(EntrywiseNorm, FrobeniusMatchesSpectrum) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_matrix(5, 5, rng);
    const double f = frobenius_sq(a);
    EXPECT_NEAR(f, oracle_tail(a, 0), 1e-9 * f);
  }
}

TEST(Svd, RankOneIsRecovered) {
  const auto a = multiply_nt(RealMatrix::from_rows({{1}, {2}, {-1}}), RealMatrix::from_rows({{3}, {0.5}, {2}, {1}}));
  const auto f = svd_truncated(a, 1);
  EXPECT_LE(std::sqrt(residual_sq(a, f)), 1e-10 * std::sqrt(frobenius_sq(a)));
}

TEST(Svd, IdentityFullRankIsExact) {
  const auto f = svd_truncated(RealMatrix::identity(3), 3);
  EXPECT_NEAR(residual_sq(RealMatrix::identity(3), f), 0.0, 1e-24);
}

TEST(Svd, ResidualEqualsTailSpectrum) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_matrix(8, 8, rng);
    const double tail = oracle_tail(a, 2);
    EXPECT_NEAR(residual_sq(a, svd_truncated(a, 2)), tail, 1e-8 * tail);
  }
}

TEST(Svd, RectangularShapesMatchOracle) {
  std::mt19937_64 rng(4);
  for (auto [r, c] : {std::pair{12, 5}, std::pair{5, 12}, std::pair{1, 7}, std::pair{9, 1}}) {
    const auto a = random_matrix(r, c, rng);
    const auto mine = svd(a).s;
    const auto ref = testing::oracle_singular_values(a);
    ASSERT_EQ(mine.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(mine[i], ref[i], 1e-12 * ref[0]);
  }
}

TEST(Svd, RangeErrors) {
  EXPECT_THROW(svd_truncated(RealMatrix(3, 4), 0), ParameterError);
  EXPECT_THROW(svd_truncated(RealMatrix(3, 4), 4), ParameterError);
}

TEST(Svd, DeterministicBitwise) {
  std::mt19937_64 rng(5);
  const auto a = random_matrix(10, 7, rng);
  const auto f1 = svd_truncated(a, 3);
  const auto f2 = svd_truncated(a, 3);
  EXPECT_EQ(f1.U, f2.U);
  EXPECT_EQ(f1.V, f2.V);
}

TEST(Svd, EckartYoungBeatsRandomCandidates) {
  std::mt19937_64 rng(6);
  const auto a = random_matrix(9, 9, rng);
  const BitMatrix ones = BitMatrix::ones(9, 9);
  const double best = masked_cost(a, ones, svd_truncated(a, 2));
  for (int trial = 0; trial < 200; ++trial) {
    LowRankFactor cand{gaussian_matrix(9, 2, rng), gaussian_matrix(9, 2, rng), 2};
    EXPECT_LE(best, masked_cost(a, ones, cand) + 1e-12);
  }
  // Perturbations of the optimum are never better either.
  auto opt = svd_truncated(a, 2);
  for (int trial = 0; trial < 50; ++trial) {
    LowRankFactor cand = opt;
    std::normal_distribution<double> nd(0.0, 1e-3);
    for (std::size_t i = 0; i < 9; ++i) cand.U(i, trial % 2) += nd(rng);
    EXPECT_LE(best, masked_cost(a, ones, cand) + 1e-12);
  }
}

TEST(RandomizedLra, RankOneExact) {
  const auto a = multiply_nt(RealMatrix::from_rows({{1}, {2}, {3}, {4}}), RealMatrix::from_rows({{1}, {-1}, {2}, {0}}));
  for (std::uint64_t seed : {1u, 7u, 99u}) {
    const auto f = randomized_range_lra(a, 1, 1, 2, seed);
    EXPECT_LE(std::sqrt(residual_sq(a, f)), 1e-8 * std::sqrt(frobenius_sq(a)));
  }
}

TEST(RandomizedLra, ZeroMatrixGivesZeroFactor) {
  const RealMatrix z(6, 6);
  const auto f = randomized_range_lra(z, 1, 1, 2, 3);
  EXPECT_EQ(residual_sq(z, f), 0.0);
  EXPECT_EQ(frobenius_sq(f.to_dense()), 0.0);
}

TEST(RandomizedLra, CloseToExactMedianOverSeeds) {
  std::mt19937_64 rng(8);
  const auto a = random_matrix(64, 64, rng);
  const double exact = std::sqrt(residual_sq(a, svd_truncated(a, 4)));
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    ratios.push_back(std::sqrt(residual_sq(a, randomized_range_lra(a, 4, 8, 2, seed))) / exact);
  std::nth_element(ratios.begin(), ratios.begin() + 5, ratios.end());
  EXPECT_LE(ratios[5], 1.05);
}

TEST(RandomizedLra, DeterministicGivenSeed) {
  std::mt19937_64 rng(9);
  const auto a = random_matrix(20, 15, rng);
  const auto f1 = randomized_range_lra(a, 3, 3, 2, 42);
  const auto f2 = randomized_range_lra(a, 3, 3, 2, 42);
  EXPECT_EQ(f1.U, f2.U);
  EXPECT_EQ(f1.V, f2.V);
  EXPECT_THROW(randomized_range_lra(a, 3, 13, 2, 42), ParameterError);
}

TEST(MaskedCost, ExamplesAndDefinition) {
  const BitMatrix offdiag = BitMatrix::identity(3).flipped();
  EXPECT_EQ(masked_cost(RealMatrix::identity(3), offdiag, LowRankFactor::zero(3, 3)), 0.0);
  EXPECT_EQ(masked_cost(RealMatrix(2, 2, 1.0), BitMatrix::identity(2).flipped(), LowRankFactor::zero(2, 2)), 2.0);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_matrix(6, 6, rng);
    const auto w = testing::random_bits(6, 6, 0.6, rng);
    const auto l = svd_truncated(a, 2);
    RealMatrix wd(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) wd(i, j) = w(i, j) ? 1.0 : 0.0;
    const double via_norm = frobenius_sq(hadamard(wd, subtract(a, l.to_dense())));
    EXPECT_NEAR(masked_cost(a, w, l), via_norm, 1e-12 * std::max(1.0, via_norm));
    EXPECT_NEAR(masked_cost(a, w, l), testing::direct_masked_sq(a, w, l.to_dense()), 1e-12 * std::max(1.0, via_norm));
  }
}

TEST(MaskedCost, PythagoreanSplit) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_matrix(7, 5, rng);
    const auto w = testing::random_bits(7, 5, 0.5, rng);
    const double total = frobenius_sq(m);
    const double split = frobenius_sq(apply_mask(m, w)) + frobenius_sq(apply_mask(m, w.flipped()));
    EXPECT_NEAR(total, split, 1e-12 * total);
  }
}

TEST(OrthonormalBasis, ColumnsAreOrthonormal) {
  std::mt19937_64 rng(12);
  const auto q = orthonormal_basis(random_matrix(10, 4, rng));
  const auto g = multiply_tn(q, q);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(SolveGram, PseudoInverseOnSingularGram) {
  // K has a repeated column, so K^T K is singular; the solution still fits y exactly.
  const auto k = RealMatrix::from_rows({{1, 1}, {2, 2}, {3, 3}});
  const auto y = RealMatrix::from_rows({{2, 4, 6}});
  bool truncated = false;
  const auto x = solve_gram(multiply_tn(k, k), multiply(y, k), &truncated);
  EXPECT_TRUE(truncated);
  const auto fit = multiply_nt(x, k);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(fit(0, j), y(0, j), 1e-10);
}

}  // namespace
}  // namespace mlra
