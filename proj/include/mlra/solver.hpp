#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mlra/error.hpp"
#include "mlra/linalg.hpp"
#include "mlra/masks.hpp"
#include "mlra/protocols.hpp"

namespace mlra {

struct SolveMethod {
  enum class Kind { exact, randomized };
  Kind kind = Kind::exact;
  std::uint64_t seed = 0;
  std::optional<std::size_t> oversample;  // defaults to k' (clamped)
  std::size_t power_iters = 2;

  static SolveMethod exact() { return {}; }
  static SolveMethod randomized(std::uint64_t seed) { return {Kind::randomized, seed, std::nullopt, 2}; }
};

/// Zero-fill heuristic: a rank-k' approximation of A o W. k' above
/// min(rows, cols) is clamped since the full SVD is then exact.
inline LowRankFactor masked_lra(const RealMatrix& a, const BitMatrix& w, std::size_t k_prime,
                                const SolveMethod& method = SolveMethod::exact()) {
  if (!a.same_shape(RealMatrix(w.rows(), w.cols()))) throw ShapeError("masked_lra: A and W differ in shape");
  if (k_prime < 1) throw ParameterError("k_prime", "must be >= 1");
  const std::size_t mn = std::min(a.rows(), a.cols());
  const std::size_t k = std::min(k_prime, mn);
  const RealMatrix aw = apply_mask(a, w);
  if (method.kind == SolveMethod::Kind::exact) return svd_truncated(aw, k);
  const std::size_t over = std::min(method.oversample.value_or(k), mn - k);
  return randomized_range_lra(aw, k, over, method.power_iters, method.seed);
}

inline LowRankFactor masked_lra(const RealMatrix& a, const Mask& w, std::size_t k_prime,
                                const SolveMethod& method = SolveMethod::exact()) {
  return masked_lra(a, w.bits(), k_prime, method);
}

/// Sum over 1-labeled rectangles of the best rank-k fit of (A o W) on the
/// rectangle, zero-extended. Each rectangle contributes its own factor columns,
/// so the result is exactly zero outside the 1-labeled rectangles.
inline LowRankFactor comparator_from_partition(const RealMatrix& a, const BitMatrix& w, const PartitionSample& p,
                                               std::size_t k) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (a.rows() != p.n || a.cols() != p.n || !w.same_shape(BitMatrix(a.rows(), a.cols())))
    throw ShapeError("comparator_from_partition: partition does not match A");
  const RealMatrix aw = apply_mask(a, w);
  std::vector<LowRankFactor> parts;
  std::size_t width = 0;
  for (const auto& r : p.rectangles) {
    if (!r.label) continue;
    const auto& rows = r.sides[0];
    const auto& cols = r.sides[1];
    const RealMatrix sub = submatrix(aw, rows, cols);
    parts.push_back(svd_truncated(sub, std::min({k, rows.size(), cols.size()})));
    width += parts.back().width();
  }
  LowRankFactor out{RealMatrix(a.rows(), width), RealMatrix(a.cols(), width), k * p.one_count};
  std::size_t c0 = 0;
  std::size_t idx = 0;
  for (const auto& r : p.rectangles) {
    if (!r.label) continue;
    const auto& f = parts[idx++];
    for (std::size_t c = 0; c < f.width(); ++c) {
      for (std::size_t i = 0; i < r.sides[0].size(); ++i) out.U(r.sides[0][i], c0 + c) = f.U(i, c);
      for (std::size_t j = 0; j < r.sides[1].size(); ++j) out.V(r.sides[1][j], c0 + c) = f.V(j, c);
    }
    c0 += f.width();
  }
  return out;
}

inline LowRankFactor comparator_from_partition(const RealMatrix& a, const Mask& w, const PartitionSample& p,
                                               std::size_t k) {
  return comparator_from_partition(a, w.bits(), p, k);
}

struct ChainCheck {
  bool passed = false;
  double lhs = 0.0;  // ||A o W - L||_F^2, L the exact zero-fill solution
  double rhs = 0.0;  // ||A o W - Lbar||_F^2
  std::size_t rank = 0;
};

/// The zero-fill solution at rank >= rank(Lbar) fits A o W at least as well as Lbar.
inline ChainCheck chain_inequality_check(const RealMatrix& a, const Mask& w, const PartitionSample& p,
                                         std::size_t k) {
  const LowRankFactor lbar = comparator_from_partition(a, w, p, k);
  const RealMatrix aw = apply_mask(a, w.bits());
  ChainCheck c;
  c.rhs = residual_sq(aw, lbar);
  c.rank = std::max<std::size_t>(1, lbar.width());
  const LowRankFactor l = masked_lra(a, w, c.rank);
  c.lhs = residual_sq(aw, l);
  c.passed = c.lhs <= c.rhs + 1e-9 * (c.rhs + frobenius_sq(aw));
  return c;
}

// ---------------------------------------------------------------------------
// Bicriteria verification

struct BicriteriaReport {
  std::string pattern;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t k_prime = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double delta_slack = 0.0;
  std::uint64_t seed = 0;
  double cost = 0.0;
  double opt_upper = 0.0;
  double rhs = 0.0;
  bool satisfied = false;

  // Diagnostics outside the CSV schema.
  double term_eps1 = 0.0;  // eps1 * ||A o W||
  double term_eps2 = 0.0;  // eps2 * ||L* o (1 - W)||
  std::size_t rectangles = 0;
  std::size_t one_count = 0;
  std::uint64_t rectangle_cap = 0;
  std::string note;

  void finalize() {
    rhs = opt_upper + term_eps1 + term_eps2 + delta_slack;
    satisfied = cost <= rhs + 1e-9 * rhs;
  }
};

struct BicriteriaOptions {
  SolveMethod method = SolveMethod::exact();
  std::optional<std::size_t> k_prime;  // overrides the certified rank
};

/// Runs the zero-fill heuristic at the rank certified by a sampled partition of
/// `spec` (capped by the pattern's rank budget when the mask has one) and checks
///   cost <= opt_upper + eps1 ||A o W||^2 + eps2 ||L* o (1 - W)||^2 + Delta.
/// Delta is eps ||A o W||^2 (the approximate-solver allowance) or the measured
/// suboptimality of the randomized solver when that is larger.
inline BicriteriaReport verify_bicriteria(const RealMatrix& a, const Mask& w, std::size_t k, double eps,
                                          const ProtocolSpec& spec, double opt_upper,
                                          const std::optional<LowRankFactor>& l_for_eps2, std::uint64_t seed,
                                          const BicriteriaOptions& opt = {}) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  check_delta(eps, "eps");
  if (spec.n != w.n() || !a.same_shape(RealMatrix(w.rows(), w.cols())))
    throw ShapeError("verify_bicriteria: A, W and spec disagree on n");
  const bool one_sided = is_one_sided(spec);
  if (!one_sided && !l_for_eps2) throw ParameterError("L_for_eps2", "two-sided specs need a candidate for L_opt");

  BicriteriaReport r;
  r.pattern = pattern_tag(w.pattern());
  r.n = w.n();
  r.k = k;
  r.seed = seed;
  r.opt_upper = opt_upper;
  r.eps1 = eps;
  r.eps2 = one_sided ? 0.0 : eps;
  r.rectangle_cap = rectangle_cap(spec);

  const std::size_t mn = std::min(a.rows(), a.cols());
  std::uint64_t certified = 0;
  if (opt.k_prime) {
    certified = *opt.k_prime;
  } else {
    const PartitionSample p = sample_partition(spec, seed);
    r.rectangles = p.rectangles.size();
    r.one_count = p.one_count;
    certified = saturating_mul(k, std::max<std::size_t>(1, p.one_count));
    if (!std::holds_alternative<pattern::Explicit>(w.pattern()))
      certified = std::min(certified, rank_budget(w.pattern(), w.n(), k, eps));
  }
  r.k_prime = static_cast<std::size_t>(std::min<std::uint64_t>(certified, mn));

  const double aw_mass = entrywise_norm(apply_mask(a, w.bits()), NormKind::squared_frobenius());
  const LowRankFactor l = masked_lra(a, w, r.k_prime, opt.method);
  r.cost = masked_cost(a, w, l);
  r.term_eps1 = r.eps1 * aw_mass;
  if (!one_sided) {
    const Mask off = complement(w);
    const RealMatrix zero(a.rows(), a.cols());
    r.term_eps2 = r.eps2 * masked_cost(zero, off, *l_for_eps2);
  }
  double measured = 0.0;
  if (opt.method.kind == SolveMethod::Kind::randomized) {
    const RealMatrix aw = apply_mask(a, w.bits());
    measured = std::max(0.0, residual_sq(aw, l) - residual_sq(aw, masked_lra(a, w, r.k_prime)));
  }
  r.delta_slack = std::max(eps * aw_mass, measured);
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Alternating minimization baseline

struct AltMinResult {
  LowRankFactor factor;
  double cost = 0.0;
  bool regularized = false;          // some local solve dropped a null direction
  std::vector<double> history;       // masked cost after every half-step (best restart)
};

namespace detail {

/// One half-step: for each row i of X, minimize sum_{j: W(i,j)} (A(i,j) - X_i . Y_j)^2.
inline void weighted_rows(const RealMatrix& a, const BitMatrix& w, const RealMatrix& y, RealMatrix& x,
                          bool& truncated) {
  const std::size_t r = y.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    RealMatrix gram(r, r);
    RealMatrix rhs(1, r);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (!w(i, j)) continue;
      for (std::size_t c = 0; c < r; ++c) {
        rhs(0, c) += a(i, j) * y(j, c);
        for (std::size_t d = 0; d < r; ++d) gram(c, d) += y(j, c) * y(j, d);
      }
    }
    bool all_zero = true;
    for (double g : gram.values()) all_zero = all_zero && g == 0.0;
    if (all_zero) {
      for (std::size_t c = 0; c < r; ++c) x(i, c) = 0.0;
      truncated = true;
      continue;
    }
    const RealMatrix sol = solve_gram(gram, rhs, &truncated);
    for (std::size_t c = 0; c < r; ++c) x(i, c) = sol(0, c);
  }
}

}  // namespace detail

/// Alternating least squares on the masked objective from a given start.
/// Each half-step solves all row problems exactly (pseudo-inverse on
/// rank-deficient Gram matrices), so the masked cost never increases.
inline AltMinResult altmin_refine(const RealMatrix& a, const BitMatrix& w, LowRankFactor start, std::size_t iters,
                                  double tol = 1e-12) {
  AltMinResult res;
  res.factor = std::move(start);
  const BitMatrix wt = w.transposed();
  const RealMatrix at = a.transposed();
  double prev = masked_cost(a, w, res.factor);
  res.history.push_back(prev);
  for (std::size_t it = 0; it < iters; ++it) {
    detail::weighted_rows(a, w, res.factor.V, res.factor.U, res.regularized);
    res.history.push_back(masked_cost(a, w, res.factor));
    detail::weighted_rows(at, wt, res.factor.U, res.factor.V, res.regularized);
    const double cur = masked_cost(a, w, res.factor);
    res.history.push_back(cur);
    if (prev - cur <= tol * std::max(prev, 1e-300)) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  res.cost = prev;
  return res;
}

/// Best of `restarts` ALS runs from seeded Gaussian starts.
inline AltMinResult altmin_baseline(const RealMatrix& a, const BitMatrix& w, std::size_t k, std::size_t iters,
                                    std::size_t restarts, std::uint64_t seed) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (restarts < 1) throw ParameterError("restarts", "must be >= 1");
  std::mt19937_64 rng(seed);
  std::optional<AltMinResult> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    LowRankFactor start{RealMatrix(a.rows(), k), gaussian_matrix(a.cols(), k, rng), k};
    AltMinResult cur = altmin_refine(a, w, std::move(start), iters);
    if (!best || cur.cost < best->cost) {
      const bool flagged = best && best->regularized;
      best = std::move(cur);
      best->regularized = best->regularized || flagged;
    } else {
      best->regularized = best->regularized || cur.regularized;
    }
  }
  return std::move(*best);
}

inline AltMinResult altmin_baseline(const RealMatrix& a, const Mask& w, std::size_t k, std::size_t iters,
                                    std::size_t restarts, std::uint64_t seed) {
  return altmin_baseline(a, w.bits(), k, iters, restarts, seed);
}

}  // namespace mlra
