#include <gtest/gtest.h>

#include <random>

#include "mlra/harness.hpp"
#include "mlra/solver.hpp"
#include "support.hpp"

namespace mlra {
namespace {

using testing::random_matrix;

TEST(MaskedLra, IdentityUnderDiagonalComplementIsZero) {
  const auto a = RealMatrix::identity(8);
  const auto w = make_mask(pattern::Diagonal{}, 8);
  for (std::size_t k : {1u, 3u, 8u}) {
    const auto l = masked_lra(a, w, k);
    EXPECT_EQ(frobenius_sq(l.to_dense()), 0.0);
    EXPECT_EQ(masked_cost(a, w, l), 0.0);
  }
}

TEST(MaskedLra, AllOnesMatchesTruncatedSvd) {
  std::mt19937_64 rng(3);
  const auto a = random_matrix(12, 9, rng);
  const auto l = masked_lra(a, BitMatrix::ones(12, 9), 3);
  const auto ref = svd_truncated(a, 3);
  EXPECT_NEAR(residual_sq(a, l), residual_sq(a, ref), 1e-12 * frobenius_sq(a));
  EXPECT_NEAR(residual_sq(a, l), testing::oracle_tail(a, 3), 1e-9 * frobenius_sq(a));
}

TEST(MaskedLra, ClampsRankAboveMinDimension) {
  std::mt19937_64 rng(4);
  const auto a = random_matrix(6, 5, rng);
  const auto l = masked_lra(a, BitMatrix::ones(6, 5), 40);
  EXPECT_LE(l.width(), 5u);
  EXPECT_NEAR(residual_sq(a, l), 0.0, 1e-20 * frobenius_sq(a) + 1e-24);
}

TEST(MaskedLra, PlantedDiagonalWithinTwoEps) {
  const auto p = gen_planted_matrix(make_mask(pattern::Diagonal{}, 32), 2, 0.0, kDefaultCorruption, 11);
  EXPECT_EQ(p.opt_upper, 0.0);
  const double eps = 0.25;
  const auto kp = rank_budget(p.W.pattern(), 32, 2, eps);
  EXPECT_EQ(kp, 8u);
  const auto l = masked_lra(p.A, p.W, kp);
  const double aw = frobenius_sq(apply_mask(p.A, p.W.bits()));
  EXPECT_LE(masked_cost(p.A, p.W, l), 2 * eps * aw);
}

TEST(MaskedLra, RejectsBadShapesAndRank) {
  EXPECT_THROW(masked_lra(RealMatrix(3, 3), BitMatrix(3, 4), 1), ShapeError);
  try {
    masked_lra(RealMatrix(3, 3), BitMatrix(3, 3), 0);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "k_prime");
  }
}

TEST(MaskedLra, RandomizedCloseToExact) {
  std::mt19937_64 rng(9);
  const auto a = random_matrix(40, 40, rng);
  const auto w = make_mask(pattern::Banded{3}, 40);
  const auto aw = apply_mask(a, w.bits());
  const double exact = residual_sq(aw, masked_lra(a, w, 6));
  const double approx = residual_sq(aw, masked_lra(a, w, 6, SolveMethod::randomized(2)));
  EXPECT_GE(approx, exact * (1 - 1e-12));
  EXPECT_LE(approx, 1.1 * exact);
}

ProtocolSpec injective_diagonal(std::size_t n) { return {family::EqualityHash{1.0 / static_cast<double>(n), {}}, n}; }

TEST(Comparator, InjectivePartitionReproducesMaskedMatrix) {
  std::mt19937_64 rng(1);
  const std::size_t n = 10;
  const auto a = random_matrix(n, n, rng);
  const auto w = make_mask(pattern::Diagonal{}, n);
  const auto p = sample_partition(injective_diagonal(n), 7);
  const auto lbar = comparator_from_partition(a, w, p, 1);
  EXPECT_EQ(lbar.rank_bound, p.one_count);
  const auto aw = apply_mask(a, w.bits());
  EXPECT_LE(residual_sq(aw, lbar), 1e-24 * frobenius_sq(aw));
}

TEST(Comparator, SingleOneRectangleEqualsTruncatedSvd) {
  std::mt19937_64 rng(2);
  const auto a = random_matrix(8, 8, rng);
  const auto w = make_mask(pattern::AllOnes{}, 8);
  const auto p = sample_partition(spec_for_mask(w, 0.5), 0);
  ASSERT_EQ(p.rectangles.size(), 1u);
  const auto lbar = comparator_from_partition(a, w, p, 2);
  EXPECT_NEAR(residual_sq(a, lbar), testing::oracle_tail(a, 2), 1e-9 * frobenius_sq(a));
}

TEST(Comparator, AllZeroLabelsGiveZeroFactor) {
  std::mt19937_64 rng(2);
  const auto a = random_matrix(6, 6, rng);
  const ProtocolSpec spec{family::Constant{false}, 6};
  const auto p = sample_partition(spec, 0);
  const auto lbar = comparator_from_partition(a, BitMatrix(6, 6), p, 3);
  EXPECT_EQ(lbar.width(), 0u);
  EXPECT_EQ(frobenius_sq(lbar.to_dense()), 0.0);
}

TEST(Comparator, BitwiseZeroOutsideOneRectangles) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 16;
    const auto a = random_matrix(n, n, rng);
    const auto w = make_mask(pattern::Banded{2}, n);
    const auto p = sample_partition(spec_for_mask(w, 0.5), trial);
    const auto labels = partition_labels(p);
    const auto dense = comparator_from_partition(a, w, p, 2).to_dense();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!labels(i, j)) {
          ASSERT_EQ(dense(i, j), 0.0);
        }
  }
}

TEST(Chain, HoldsOnRandomTriples) {
  std::mt19937_64 rng(8);
  const std::size_t n = 16;
  const auto w = make_mask(pattern::Diagonal{}, n);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_matrix(n, n, rng);
    const auto c = chain_inequality_check(a, w, sample_partition(spec_for_mask(w, 0.5), trial), 1);
    ASSERT_TRUE(c.passed) << c.lhs << " > " << c.rhs;
  }
}

TEST(Chain, ZeroMatrixGivesZeroSides) {
  const auto w = make_mask(pattern::Diagonal{}, 8);
  const auto c = chain_inequality_check(RealMatrix(8, 8), w, sample_partition(spec_for_mask(w, 0.5), 1), 2);
  EXPECT_TRUE(c.passed);
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_EQ(c.rhs, 0.0);
}

TEST(Bicriteria, PlantedDiagonalRhsIsTwoEps) {
  const auto p = gen_planted_matrix(make_mask(pattern::Diagonal{}, 64), 3, 0.0, kDefaultCorruption, 21);
  const double eps = 0.25;
  const auto r = verify_bicriteria(p.A, p.W, 3, eps, spec_for_mask(p.W, eps), p.opt_upper, std::nullopt, 21);
  const double aw = frobenius_sq(apply_mask(p.A, p.W.bits()));
  EXPECT_TRUE(r.satisfied);
  EXPECT_EQ(r.eps2, 0.0);
  EXPECT_NEAR(r.rhs, 2 * eps * aw, 1e-12 * aw);
  EXPECT_EQ(r.rhs, r.opt_upper + r.term_eps1 + r.term_eps2 + r.delta_slack);
  EXPECT_LE(r.k_prime, 12u);
}

TEST(Bicriteria, ExactPlantedOnAnyMask) {
  std::mt19937_64 rng(6);
  const auto w = Mask::from_bitmap(testing::random_bits(20, 20, 0.8, rng));
  const auto p = gen_planted_matrix(w, 2, 0.0, 0.0, 6);
  EXPECT_EQ(p.opt_upper, 0.0);
  const auto r = verify_bicriteria(p.A, w, 2, 0.5, sparse_route_spec(w, 0.5), 0.0, std::nullopt, 1);
  EXPECT_TRUE(r.satisfied);
  EXPECT_GE(r.rhs, 0.0);
  EXPECT_GE(r.k_prime, 2u);
}

TEST(Bicriteria, TwoSidedSpecNeedsCandidate) {
  const auto p = gen_planted_matrix(make_mask(pattern::Banded{2}, 16), 1, 0.0, 1.0, 2);
  try {
    verify_bicriteria(p.A, p.W, 1, 0.5, spec_for_mask(p.W, 0.5), p.opt_upper, std::nullopt, 0);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "L_for_eps2");
  }
}

TEST(Bicriteria, BandedTwoSidedRecordsBothTerms) {
  const auto p = gen_planted_matrix(make_mask(pattern::Banded{3}, 64), 2, 0.0, kDefaultCorruption, 3);
  const auto r = verify_bicriteria(p.A, p.W, 2, 0.25, spec_for_mask(p.W, 0.25), p.opt_upper, p.L_star, 3);
  EXPECT_GT(r.term_eps2, 0.0);
  EXPECT_EQ(r.eps2, 0.25);
  EXPECT_LE(r.rectangles, r.rectangle_cap);
  EXPECT_TRUE(r.satisfied);
}

TEST(Bicriteria, RandomizedSlackCoversMeasuredGap) {
  const auto p = gen_planted_matrix(make_mask(pattern::Diagonal{}, 48), 2, 0.05, kDefaultCorruption, 4);
  BicriteriaOptions o;
  o.method = SolveMethod::randomized(4);
  const auto r = verify_bicriteria(p.A, p.W, 2, 0.25, spec_for_mask(p.W, 0.25), p.opt_upper, std::nullopt, 4, o);
  EXPECT_TRUE(r.satisfied);
  EXPECT_GE(r.delta_slack, 0.25 * frobenius_sq(apply_mask(p.A, p.W.bits())));
}

TEST(AltMin, AllOnesConvergesToSvdCost) {
  std::mt19937_64 rng(12);
  const auto a = testing::random_low_rank(12, 10, 4, rng);
  const auto res = altmin_baseline(a, BitMatrix::ones(12, 10), 2, 50, 3, 1);
  const double svd_cost = testing::oracle_tail(a, 2);
  EXPECT_NEAR(res.cost, svd_cost, 1e-6 * svd_cost);
}

TEST(AltMin, HalfStepsNeverIncrease) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_matrix(10, 10, rng);
    const auto w = testing::random_bits(10, 10, 0.7, rng);
    const auto res = altmin_baseline(a, w, 2, 30, 1, trial);
    for (std::size_t s = 1; s < res.history.size(); ++s) ASSERT_LE(res.history[s], res.history[s - 1] + 1e-10);
  }
}

TEST(AltMin, StartFromPlantedStaysBelowInitialCost) {
  const auto p = gen_planted_matrix(make_mask(pattern::Diagonal{}, 16), 2, 0.1, kDefaultCorruption, 5);
  const auto res = altmin_refine(p.A, p.W.bits(), p.L_star, 20);
  EXPECT_LE(res.cost, p.opt_upper + 1e-10);
}

TEST(AltMin, EmptyRowsAreFlagged) {
  std::mt19937_64 rng(14);
  const auto a = random_matrix(6, 6, rng);
  BitMatrix w = BitMatrix::ones(6, 6);
  for (std::size_t j = 0; j < 6; ++j) w.set(0, j, false);
  const auto res = altmin_baseline(a, w, 2, 10, 1, 0);
  EXPECT_TRUE(res.regularized);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(res.factor.U(0, c), 0.0);
}

}  // namespace
}  // namespace mlra
