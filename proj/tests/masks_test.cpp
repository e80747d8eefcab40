#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "mlra/masks.hpp"

namespace mlra {
namespace {

template <class Pred>
void expect_bitmap(const Mask& w, Pred pred) {
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) ASSERT_EQ(w(i, j), pred(i, j)) << "cell " << i << "," << j;
}

TEST(MakeMask, DiagonalZerosOnlyOnDiagonal) {
  expect_bitmap(make_mask(pattern::Diagonal{}, 4), [](auto i, auto j) { return i != j; });
}

TEST(MakeMask, BandedP2) {
  const auto w = make_mask(pattern::Banded{2}, 4);
  expect_bitmap(w, [](std::size_t i, std::size_t j) { return (i > j ? i - j : j - i) >= 2; });
  EXPECT_EQ(w.max_row_zeros(), 3u);
}

TEST(MakeMask, ToeplitzP2ZeroWhereDifferenceEven) {
  expect_bitmap(make_mask(pattern::ToeplitzModP{2}, 4), [](std::size_t i, std::size_t j) { return (i + j) % 2 == 1; });
}

TEST(MakeMask, BruteForcePredicatesUpTo64) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 5u, 16u, 64u}) {
    expect_bitmap(make_mask(pattern::AllOnes{}, n), [](auto, auto) { return true; });
    for (std::size_t p : {1u, 3u}) {
      if (p > n) continue;
      expect_bitmap(make_mask(pattern::Banded{p}, n),
                    [p](std::size_t i, std::size_t j) { return (i > j ? i - j : j - i) >= p; });
      expect_bitmap(make_mask(pattern::ToeplitzModP{p}, n),
                    [p](std::size_t i, std::size_t j) { return (i + p * 64 - j) % p != 0; });
    }
    const auto blocks = contiguous_blocks(n, std::min<std::size_t>(n, 3));
    std::vector<std::size_t> id(n);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (auto x : blocks[b]) id[x] = b;
    expect_bitmap(make_mask(pattern::BlockDiagonal{blocks}, n), [&](auto i, auto j) { return id[i] != id[j]; });

    std::vector<std::size_t> prefix(n);
    std::uniform_int_distribution<std::size_t> d(0, n);
    for (auto& p : prefix) p = d(rng);
    expect_bitmap(make_mask(pattern::Monotone{prefix}, n), [&](auto i, auto j) { return j < prefix[i]; });
  }
  // 2-D banded on a 4x4 grid: i -> (i / 4, i % 4).
  expect_bitmap(make_mask(pattern::Banded2d{2}, 16), [](std::size_t i, std::size_t j) {
    const long d = std::labs(long(i / 4) - long(j / 4)) + std::labs(long(i % 4) - long(j % 4));
    return d >= 2;
  });
}

TEST(MakeMask, SparseAccountingMatchesDeclaredT) {
  std::vector<std::vector<std::size_t>> z = {{0, 2}, {1}, {}, {0, 3}};
  const auto w = make_mask(pattern::Sparse{z, 2}, 4);
  EXPECT_EQ(w.max_row_zeros(), 2u);
  EXPECT_EQ(w.row_zero_counts(), (std::vector<std::size_t>{2, 1, 0, 2}));
  EXPECT_EQ(w.col_zero_counts(), (std::vector<std::size_t>{2, 1, 1, 1}));
  EXPECT_THROW(make_mask(pattern::Sparse{z, 1}, 4), ParameterError);
}

TEST(MakeMask, BlockSparse) {
  const auto rb = contiguous_blocks(6, 3);
  const auto w = make_mask(pattern::BlockSparse{rb, rb, {{1}, {}, {0, 2}}, 2}, 6);
  expect_bitmap(w, [](std::size_t i, std::size_t j) {
    const std::size_t bi = i / 2, bj = j / 2;
    if (bi == 0) return bj != 1;
    if (bi == 1) return true;
    return bj == 1;
  });
}

TEST(MakeMask, EquivalentDiagonalForms) {
  std::vector<std::vector<std::size_t>> singletons;
  for (std::size_t i = 0; i < 9; ++i) singletons.push_back({i});
  const auto d = make_mask(pattern::Diagonal{}, 9).bits();
  EXPECT_EQ(d, make_mask(pattern::Banded{1}, 9).bits());
  EXPECT_EQ(d, make_mask(pattern::BlockDiagonal{singletons}, 9).bits());
}

TEST(MakeMask, InvalidParametersNameTheField) {
  try {
    make_mask(pattern::Banded{5}, 4);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "p");
  }
  try {
    make_mask(pattern::Banded2d{1}, 15);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "n");
  }
  try {
    make_mask(pattern::BlockDiagonal{{{0, 1}, {1, 2}}}, 3);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "blocks");
  }
  EXPECT_THROW(make_mask(pattern::ToeplitzModP{0}, 4), ParameterError);
}

TEST(Complement, Examples) {
  const auto ones = make_mask(pattern::AllOnes{}, 3);
  EXPECT_EQ(complement(ones).bits(), BitMatrix(3, 3));
  const auto d = make_mask(pattern::Diagonal{}, 3);
  EXPECT_EQ(complement(d).bits(), BitMatrix::identity(3));
  EXPECT_EQ(complement(complement(d)).bits(), d.bits());
  EXPECT_EQ(pattern_tag(complement(d).pattern()), "explicit");
}

TEST(RankBudget, ConstructionCounts) {
  // Equality hashing with ceil(1/eps) = 4 buckets gives 4 one-labeled rectangles.
  EXPECT_EQ(rank_budget(pattern::Diagonal{}, 16, 2, 0.25), 8u);
  // ceil(t/eps) = 6 buckets for t = 3.
  EXPECT_EQ(rank_budget(pattern::Sparse{{}, 3}, 16, 1, 0.5), 6u);
  EXPECT_EQ(rank_budget(pattern::AllOnes{}, 16, 5, 0.3), 5u);
  EXPECT_EQ(rank_budget(pattern::ToeplitzModP{2}, 16, 3, 0.1), 6u);
  EXPECT_EQ(rank_budget(pattern::ToeplitzModP{40}, 64, 1, 0.1), 10u);
  EXPECT_EQ(rank_budget(pattern::Diagonal{}, 16, 1, 0.1), 10u);
  EXPECT_THROW(rank_budget(pattern::Diagonal{}, 16, 1, 0.0), ParameterError);
  EXPECT_THROW(rank_budget(pattern::Diagonal{}, 16, 1, 1.5), ParameterError);
  EXPECT_THROW(rank_budget(pattern::Explicit{}, 16, 1, 0.5), ParameterError);
}

TEST(RankBudget, Monotonicity) {
  const std::vector<MaskPattern> pats = {pattern::Diagonal{}, pattern::Sparse{{}, 2}, pattern::ToeplitzModP{3},
                                         pattern::Banded{2}, pattern::Monotone{}, pattern::Banded2d{2}};
  const std::vector<double> eps = {0.05, 0.1, 0.2, 0.25, 0.5, 1.0};
  for (const auto& p : pats) {
    for (std::size_t k = 1; k <= 4; ++k) {
      for (std::size_t e = 1; e < eps.size(); ++e)
        EXPECT_LE(rank_budget(p, 64, k, eps[e]), rank_budget(p, 64, k, eps[e - 1])) << pattern_tag(p);
      EXPECT_LE(rank_budget(p, 64, k, 0.3), rank_budget(p, 64, k + 1, 0.3));
    }
  }
  for (std::size_t t = 1; t < 6; ++t)
    EXPECT_LE(rank_budget(pattern::Sparse{{}, t}, 64, 2, 0.3), rank_budget(pattern::Sparse{{}, t + 1}, 64, 2, 0.3));
}

}  // namespace
}  // namespace mlra
