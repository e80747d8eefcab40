#pragma once

// Sizing rules shared by the protocol constructions and the rank budgets
// that certify them. Keeping them in one place guarantees that a budget
// always matches the partition the protocols module actually produces.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "mlra/error.hpp"

namespace mlra {

inline constexpr std::uint64_t kCountSaturated = std::numeric_limits<std::uint64_t>::max();

inline void check_delta(double delta, const char* field = "delta") {
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError(field, "must lie in (0, 1]");
}

/// ceil(a / delta), guarded against 3/0.1 = 30.000000000000004.
inline std::size_t ceil_ratio(double a, double delta) {
  const double r = std::ceil(a / delta - 1e-9);
  return r < 1.0 ? 1 : static_cast<std::size_t>(r);
}

inline unsigned ceil_log2(std::uint64_t v) {
  unsigned b = 0;
  while (b < 64 && (std::uint64_t{1} << b) < v) ++b;
  return b;
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kCountSaturated / b) return kCountSaturated;
  return a * b;
}

inline std::uint64_t saturating_pow2(unsigned bits) {
  return bits >= 64 ? kCountSaturated : (std::uint64_t{1} << bits);
}

/// Buckets for the 1-way equality hash at error delta.
inline std::size_t equality_buckets(double delta) {
  check_delta(delta);
  return ceil_ratio(1.0, delta);
}

/// Buckets for the sparse-set equality test: each of t zero entries gets error delta / t.
inline std::size_t sparse_set_buckets(std::size_t t, double delta) {
  check_delta(delta);
  return ceil_ratio(static_cast<double>(t == 0 ? 1 : t), delta);
}

/// Buckets for the three-party inequality protocol (two equality checks at delta / 2).
inline std::size_t neq3_buckets(double delta) {
  check_delta(delta);
  return ceil_ratio(2.0, delta);
}

/// Shape of one randomized greater-than call on integers in [0, domain).
///
/// The caller holding `a` binary-searches the longest common prefix with `b`
/// over value_bits + 1 candidate lengths, sending a hash_bits-bit digest of
/// its prefix each round (the prefix itself when it is no longer than the
/// digest) and receiving an equality bit; both parties then reveal their bit
/// at the first differing position.
struct GtParams {
  std::uint64_t domain = 0;
  unsigned value_bits = 0;
  unsigned rounds = 0;
  unsigned hash_bits = 0;
  double delta = 1.0;

  /// Worst-case transcript length in bits.
  unsigned transcript_bits() const noexcept { return rounds * (hash_bits + 1) + 2; }
  /// Upper bound on the number of distinct transcripts (rectangles).
  std::uint64_t cap() const noexcept { return saturating_pow2(transcript_bits()); }
};

inline GtParams gt_params(std::uint64_t domain, double delta) {
  check_delta(delta);
  GtParams g;
  g.domain = domain < 2 ? 2 : domain;
  g.value_bits = ceil_log2(g.domain);
  g.rounds = ceil_log2(std::uint64_t{g.value_bits} + 1);
  const double need = std::log2(static_cast<double>(g.rounds) / delta);
  g.hash_bits = need <= 1.0 ? 1u : static_cast<unsigned>(std::ceil(need - 1e-12));
  g.delta = delta;
  return g;
}

/// cap_GT for a single greater-than call on an n x n grid.
inline std::uint64_t cap_gt(std::size_t n, double delta) { return gt_params(n, delta).cap(); }

/// Banded: two greater-than calls at delta / 2 on shifted values in [0, n + p - 1).
inline std::uint64_t cap_banded(std::size_t n, std::size_t p, double delta) {
  const auto g = gt_params(n + p - 1, delta / 2.0);
  return saturating_mul(g.cap(), g.cap());
}

/// 2-D banded on a side x side grid: two coordinate comparisons plus one
/// comparison of signed coordinate sums, each at delta / 3.
inline std::uint64_t cap_banded2d(std::size_t side, std::size_t p, double delta) {
  const auto coord = gt_params(side, delta / 3.0);
  const auto sum = gt_params(4 * side + p, delta / 3.0);
  return saturating_mul(saturating_mul(coord.cap(), coord.cap()), sum.cap());
}

/// Monotone: one greater-than call comparing the prefix length in [0, n] with y.
inline std::uint64_t cap_monotone(std::size_t n, double delta) { return gt_params(n + 1, delta).cap(); }

}  // namespace mlra
