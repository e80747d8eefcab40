#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mlra/bit_matrix.hpp"
#include "mlra/error.hpp"
#include "mlra/linalg.hpp"
#include "mlra/protocol_params.hpp"

namespace mlra {

/// Mask patterns. Indices are 0-based; W(i, j) = 0 marks an entry excluded
/// from the objective.
namespace pattern {

struct AllOnes {};

/// W = 1 - I.
struct Diagonal {};

/// Zero iff i and j share a block. `blocks` must partition [0, n).
struct BlockDiagonal {
  std::vector<std::vector<std::size_t>> blocks;
};

/// Zero iff j is in zero_sets[i]; every zero set has at most t entries.
struct Sparse {
  std::vector<std::vector<std::size_t>> zero_sets;
  std::size_t t = 0;
};

/// Zero iff the column block of j is listed in block_zero_sets[row block of i].
struct BlockSparse {
  std::vector<std::vector<std::size_t>> row_blocks;
  std::vector<std::vector<std::size_t>> col_blocks;
  std::vector<std::vector<std::size_t>> block_zero_sets;
  std::size_t t = 0;
};

/// Zero iff i - j = 0 (mod p).
struct ToeplitzModP {
  std::size_t p = 1;
};

/// Zero iff |i - j| < p.
struct Banded {
  std::size_t p = 1;
};

/// Index i maps to grid point (i / s, i % s), s = sqrt(n). Zero iff the L1
/// distance of the grid points is < p. For n a power of four this is the
/// split into high and low halves of the binary expansion.
struct Banded2d {
  std::size_t p = 1;
};

/// Row x is one on columns [0, prefix_lengths[x]) and zero afterwards.
struct Monotone {
  std::vector<std::size_t> prefix_lengths;
};

struct Explicit {};

}  // namespace pattern

using MaskPattern = std::variant<pattern::AllOnes, pattern::Diagonal, pattern::BlockDiagonal, pattern::Sparse,
                                 pattern::BlockSparse, pattern::ToeplitzModP, pattern::Banded, pattern::Banded2d,
                                 pattern::Monotone, pattern::Explicit>;

inline std::string pattern_tag(const MaskPattern& p) {
  struct Visitor {
    std::string operator()(const pattern::AllOnes&) const { return "all-ones"; }
    std::string operator()(const pattern::Diagonal&) const { return "diagonal"; }
    std::string operator()(const pattern::BlockDiagonal&) const { return "block-diagonal"; }
    std::string operator()(const pattern::Sparse&) const { return "sparse"; }
    std::string operator()(const pattern::BlockSparse&) const { return "block-sparse"; }
    std::string operator()(const pattern::ToeplitzModP&) const { return "toeplitz-mod-p"; }
    std::string operator()(const pattern::Banded&) const { return "banded"; }
    std::string operator()(const pattern::Banded2d&) const { return "banded-2d"; }
    std::string operator()(const pattern::Monotone&) const { return "monotone"; }
    std::string operator()(const pattern::Explicit&) const { return "explicit"; }
  };
  return std::visit(Visitor{}, p);
}

/// Binary mask with its pattern descriptor and zero tallies.
class Mask {
 public:
  Mask() = default;

  /// Wraps an arbitrary bitmap; the pattern becomes explicit.
  static Mask from_bitmap(BitMatrix bits) { return Mask(pattern::Explicit{}, std::move(bits)); }

  std::size_t rows() const noexcept { return bits_.rows(); }
  std::size_t cols() const noexcept { return bits_.cols(); }
  /// Side length of a square mask.
  std::size_t n() const noexcept { return bits_.rows(); }

  const MaskPattern& pattern() const noexcept { return pattern_; }
  const BitMatrix& bits() const noexcept { return bits_; }
  bool operator()(std::size_t i, std::size_t j) const noexcept { return bits_(i, j); }

  const std::vector<std::size_t>& row_zero_counts() const noexcept { return row_zeros_; }
  const std::vector<std::size_t>& col_zero_counts() const noexcept { return col_zeros_; }
  std::size_t max_row_zeros() const noexcept {
    return row_zeros_.empty() ? 0 : *std::max_element(row_zeros_.begin(), row_zeros_.end());
  }
  std::size_t max_col_zeros() const noexcept {
    return col_zeros_.empty() ? 0 : *std::max_element(col_zeros_.begin(), col_zeros_.end());
  }

  friend Mask make_mask(const MaskPattern& p, std::size_t n);

 private:
  Mask(MaskPattern p, BitMatrix bits) : pattern_(std::move(p)), bits_(std::move(bits)) {
    row_zeros_.assign(bits_.rows(), 0);
    col_zeros_.assign(bits_.cols(), 0);
    for (std::size_t i = 0; i < bits_.rows(); ++i)
      for (std::size_t j = 0; j < bits_.cols(); ++j)
        if (!bits_(i, j)) {
          ++row_zeros_[i];
          ++col_zeros_[j];
        }
  }

  MaskPattern pattern_ = pattern::Explicit{};
  BitMatrix bits_;
  std::vector<std::size_t> row_zeros_;
  std::vector<std::size_t> col_zeros_;
};

namespace detail {

/// Block id of every index; throws unless `blocks` partitions [0, n).
inline std::vector<std::size_t> block_index(const std::vector<std::vector<std::size_t>>& blocks, std::size_t n,
                                            const char* field) {
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> id(n, unset);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) throw ParameterError(field, "empty block");
    for (std::size_t x : blocks[b]) {
      if (x >= n) throw ParameterError(field, "index out of range");
      if (id[x] != unset) throw ParameterError(field, "blocks overlap");
      id[x] = b;
    }
  }
  if (std::find(id.begin(), id.end(), unset) != id.end()) throw ParameterError(field, "blocks do not cover [0, n)");
  return id;
}

inline std::size_t exact_sqrt(std::size_t n) {
  auto s = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  while (s * s > n) --s;
  while ((s + 1) * (s + 1) <= n) ++s;
  return s * s == n ? s : 0;
}

}  // namespace detail

/// Evaluates the pattern's defining predicate at every cell of an n x n grid.
inline Mask make_mask(const MaskPattern& p, std::size_t n) {
  BitMatrix bits = BitMatrix::ones(n, n);
  auto require_p = [n](std::size_t pv) {
    if (pv < 1 || pv > n) throw ParameterError("p", "requires 1 <= p <= n");
  };

  if (std::holds_alternative<pattern::AllOnes>(p)) {
  } else if (std::holds_alternative<pattern::Diagonal>(p)) {
    for (std::size_t i = 0; i < n; ++i) bits.set(i, i, false);
  } else if (const auto* bd = std::get_if<pattern::BlockDiagonal>(&p)) {
    const auto id = detail::block_index(bd->blocks, n, "blocks");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) bits.set(i, j, id[i] != id[j]);
  } else if (const auto* sp = std::get_if<pattern::Sparse>(&p)) {
    if (sp->zero_sets.size() != n) throw ParameterError("zero_sets", "need one zero set per row");
    for (std::size_t i = 0; i < n; ++i) {
      if (sp->zero_sets[i].size() > sp->t) throw ParameterError("zero_sets", "row has more than t zeros");
      for (std::size_t j : sp->zero_sets[i]) {
        if (j >= n) throw ParameterError("zero_sets", "column index out of range");
        if (!bits(i, j)) throw ParameterError("zero_sets", "duplicate column in a zero set");
        bits.set(i, j, false);
      }
    }
  } else if (const auto* bs = std::get_if<pattern::BlockSparse>(&p)) {
    const auto rid = detail::block_index(bs->row_blocks, n, "row_blocks");
    const auto cid = detail::block_index(bs->col_blocks, n, "col_blocks");
    if (bs->block_zero_sets.size() != bs->row_blocks.size())
      throw ParameterError("block_zero_sets", "need one zero set per row block");
    for (const auto& z : bs->block_zero_sets) {
      if (z.size() > bs->t) throw ParameterError("block_zero_sets", "row block has more than t zero blocks");
      for (std::size_t c : z)
        if (c >= bs->col_blocks.size()) throw ParameterError("block_zero_sets", "column block out of range");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& z = bs->block_zero_sets[rid[i]];
      for (std::size_t j = 0; j < n; ++j)
        if (std::find(z.begin(), z.end(), cid[j]) != z.end()) bits.set(i, j, false);
    }
  } else if (const auto* tp = std::get_if<pattern::ToeplitzModP>(&p)) {
    require_p(tp->p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) bits.set(i, j, (i + tp->p * n - j) % tp->p != 0);
  } else if (const auto* bp = std::get_if<pattern::Banded>(&p)) {
    require_p(bp->p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) bits.set(i, j, (i > j ? i - j : j - i) >= bp->p);
  } else if (const auto* b2 = std::get_if<pattern::Banded2d>(&p)) {
    require_p(b2->p);
    const std::size_t s = detail::exact_sqrt(n);
    if (s == 0) throw ParameterError("n", "banded-2d requires n to be a perfect square");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i1 = i / s, i2 = i % s, j1 = j / s, j2 = j % s;
        const std::size_t d = (i1 > j1 ? i1 - j1 : j1 - i1) + (i2 > j2 ? i2 - j2 : j2 - i2);
        bits.set(i, j, d >= b2->p);
      }
  } else if (const auto* mp = std::get_if<pattern::Monotone>(&p)) {
    if (mp->prefix_lengths.size() != n) throw ParameterError("prefix_lengths", "need one prefix length per row");
    for (std::size_t i = 0; i < n; ++i) {
      if (mp->prefix_lengths[i] > n) throw ParameterError("prefix_lengths", "prefix longer than n");
      for (std::size_t j = 0; j < n; ++j) bits.set(i, j, j < mp->prefix_lengths[i]);
    }
  } else {
    throw ParameterError("pattern", "explicit masks are built with Mask::from_bitmap");
  }
  return Mask(p, std::move(bits));
}

/// Equal contiguous blocks of size ceil(n / b) (the last may be shorter).
inline std::vector<std::vector<std::size_t>> contiguous_blocks(std::size_t n, std::size_t b) {
  if (b < 1 || b > n) throw ParameterError("blocks", "requires 1 <= b <= n");
  const std::size_t width = (n + b - 1) / b;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += width) {
    std::vector<std::size_t> blk;
    for (std::size_t x = start; x < std::min(n, start + width); ++x) blk.push_back(x);
    out.push_back(std::move(blk));
  }
  return out;
}

/// Sparse pattern with exactly t zeros in every row and every column: row i
/// is zero on columns perm[(slot[i] + s) mod n] for s < t.
inline pattern::Sparse random_sparse_pattern(std::size_t n, std::size_t t, std::mt19937_64& rng) {
  if (t > n) throw ParameterError("t", "requires t <= n");
  std::vector<std::size_t> perm(n), slot(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::iota(slot.begin(), slot.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::shuffle(slot.begin(), slot.end(), rng);
  pattern::Sparse sp;
  sp.t = t;
  sp.zero_sets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < t; ++s) sp.zero_sets[i].push_back(perm[(slot[i] + s) % n]);
    std::sort(sp.zero_sets[i].begin(), sp.zero_sets[i].end());
  }
  return sp;
}

/// Monotone pattern with prefix lengths drawn uniformly from [min_len, n].
inline pattern::Monotone random_monotone_pattern(std::size_t n, std::size_t min_len, std::mt19937_64& rng) {
  if (min_len > n) throw ParameterError("min_len", "requires min_len <= n");
  std::uniform_int_distribution<std::size_t> d(min_len, n);
  pattern::Monotone m;
  m.prefix_lengths.resize(n);
  for (auto& x : m.prefix_lengths) x = d(rng);
  return m;
}

/// Entrywise 1 - W; the pattern becomes explicit.
inline Mask complement(const Mask& w) { return Mask::from_bitmap(w.bits().flipped()); }

/// Rank k' certified by the protocol construction this library uses for the
/// pattern: k times the number of 1-labeled rectangles it can produce.
/// Saturates at UINT64_MAX for greater-than based caps.
inline std::uint64_t rank_budget(const MaskPattern& p, std::size_t n, std::size_t k, double eps) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  check_delta(eps, "eps");
  const std::uint64_t kk = k;
  struct Visitor {
    std::size_t n;
    std::uint64_t k;
    double eps;
    std::uint64_t operator()(const pattern::AllOnes&) const { return k; }
    std::uint64_t operator()(const pattern::Diagonal&) const { return k * equality_buckets(eps); }
    std::uint64_t operator()(const pattern::BlockDiagonal&) const { return k * equality_buckets(eps); }
    std::uint64_t operator()(const pattern::Sparse& s) const { return k * sparse_set_buckets(s.t, eps); }
    std::uint64_t operator()(const pattern::BlockSparse& s) const { return k * sparse_set_buckets(s.t, eps); }
    std::uint64_t operator()(const pattern::ToeplitzModP& t) const {
      return std::min<std::uint64_t>(k * t.p, k * equality_buckets(eps));
    }
    std::uint64_t operator()(const pattern::Banded& b) const {
      // The sparse-set route sees up to 2p - 1 zeros per row.
      const std::uint64_t sparse = k * sparse_set_buckets(2 * b.p - 1, eps);
      return std::min(sparse, saturating_mul(k, cap_banded(n, b.p, eps)));
    }
    std::uint64_t operator()(const pattern::Banded2d& b) const {
      return saturating_mul(k, cap_banded2d(detail::exact_sqrt(n), b.p, eps));
    }
    std::uint64_t operator()(const pattern::Monotone&) const { return saturating_mul(k, cap_monotone(n, eps)); }
    std::uint64_t operator()(const pattern::Explicit&) const {
      throw ParameterError("pattern", "explicit masks need a caller-supplied partition");
    }
  };
  return std::visit(Visitor{n, kk, eps}, p);
}

/// masked_cost against a Mask.
inline double masked_cost(const RealMatrix& a, const Mask& w, const LowRankFactor& l,
                          const NormKind& g = NormKind::squared_frobenius()) {
  return masked_cost(a, w.bits(), l, g);
}

}  // namespace mlra
