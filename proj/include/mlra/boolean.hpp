#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mlra/bit_matrix.hpp"
#include "mlra/error.hpp"
#include "mlra/masks.hpp"
#include "mlra/protocols.hpp"

namespace mlra {

using BoolMatrix = BitMatrix;

/// Boolean rank-r factorization: (U V)(i, j) = OR_c U(i, c) AND V(c, j).
struct BoolFactor {
  BoolMatrix U;  // n x r
  BoolMatrix V;  // r x m
  std::size_t rank_bound = 0;

  static BoolFactor zero(std::size_t rows, std::size_t cols) { return {BoolMatrix(rows, 0), BoolMatrix(0, cols), 0}; }
  std::size_t width() const noexcept { return U.cols(); }
};

inline BoolMatrix bool_product(const BoolMatrix& u, const BoolMatrix& v) {
  if (u.cols() != v.rows()) throw ShapeError("bool_product: inner dimensions differ");
  BoolMatrix out(u.rows(), v.cols());
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t c = 0; c < u.cols(); ++c) {
      if (!u(i, c)) continue;
      for (std::size_t j = 0; j < v.cols(); ++j)
        if (v(c, j)) out.set(i, j, true);
    }
  return out;
}

inline BoolMatrix bool_product(const BoolFactor& f) { return bool_product(f.U, f.V); }

/// Number of cells with W = 1 and A != B.
inline std::size_t bool_cost(const BoolMatrix& a, const BoolMatrix& b, const BitMatrix& w) {
  if (!a.same_shape(b) || !a.same_shape(w)) throw ShapeError("bool_cost: shape mismatch");
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c += (w(i, j) && a(i, j) != b(i, j)) ? 1 : 0;
  return c;
}

inline std::size_t bool_cost(const BoolMatrix& a, const BoolMatrix& b, const Mask& w) {
  return bool_cost(a, b, w.bits());
}

struct BoolFit {
  BoolFactor factor;
  std::size_t cost = 0;
};

inline constexpr std::size_t kExhaustiveBitCap = 24;

inline bool within_exhaustive_cap(std::size_t rows, std::size_t cols, std::size_t k) {
  return (rows + cols) * k <= kExhaustiveBitCap;
}

/// Global minimum of the masked Boolean cost. Enumerates every U in code
/// order (bit c of row i at position i * k + c) and, for that U, picks each
/// column of V independently, which is optimal because columns do not
/// interact. Ties go to the first U and then the smallest column code.
inline BoolFit bool_lra_exhaustive(const BoolMatrix& a, const BitMatrix& w, std::size_t k) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (!a.same_shape(w)) throw ShapeError("bool_lra_exhaustive: shape mismatch");
  const std::size_t n = a.rows(), m = a.cols();
  if (!within_exhaustive_cap(n, m, k)) throw ResourceError("bool_lra_exhaustive: (rows + cols) * k exceeds 24 bits");
  const std::uint64_t u_codes = std::uint64_t{1} << (n * k);
  const std::uint32_t v_codes = 1u << k;

  std::vector<std::uint32_t> row_pattern(n);
  std::vector<std::uint32_t> choice(m), best_choice(m);
  std::uint64_t best_u = 0;
  std::size_t best = static_cast<std::size_t>(-1);
  for (std::uint64_t u = 0; u < u_codes; ++u) {
    for (std::size_t i = 0; i < n; ++i) row_pattern[i] = static_cast<std::uint32_t>((u >> (i * k)) & (v_codes - 1));
    std::size_t total = 0;
    for (std::size_t j = 0; j < m && total < best; ++j) {
      std::size_t col_best = static_cast<std::size_t>(-1);
      for (std::uint32_t v = 0; v < v_codes; ++v) {
        std::size_t e = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!w(i, j)) continue;
          const bool bit = (row_pattern[i] & v) != 0;
          e += bit != a(i, j) ? 1 : 0;
        }
        if (e < col_best) {
          col_best = e;
          choice[j] = v;
        }
      }
      total += col_best;
    }
    if (total < best) {
      best = total;
      best_u = u;
      best_choice = choice;
    }
  }
  BoolFit fit;
  fit.cost = best;
  fit.factor = {BoolMatrix(n, k), BoolMatrix(k, m), k};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) fit.factor.U.set(i, c, (best_u >> (i * k + c)) & 1U);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t c = 0; c < k; ++c) fit.factor.V.set(c, j, (best_choice[j] >> c) & 1U);
  return fit;
}

namespace detail {

/// Gain of covering cell (i, j): +1 removes an error on a 1, -1 introduces one on a 0.
inline int cell_gain(const BoolMatrix& a, const BitMatrix& w, const BoolMatrix& cur, std::size_t i, std::size_t j) {
  if (!w(i, j) || cur(i, j)) return 0;
  return a(i, j) ? 1 : -1;
}

/// Alternating local search for a rank-1 block maximizing total gain,
/// starting from the row set `u`.
inline long rank_one_search(const BoolMatrix& a, const BitMatrix& w, const BoolMatrix& cur, std::vector<char>& u,
                            std::vector<char>& v) {
  const std::size_t n = a.rows(), m = a.cols();
  long gain = 0;
  for (int it = 0; it < 64; ++it) {
    bool changed = false;
    for (std::size_t j = 0; j < m; ++j) {
      long g = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (u[i]) g += cell_gain(a, w, cur, i, j);
      const char nv = g > 0 ? 1 : 0;
      changed = changed || nv != v[j];
      v[j] = nv;
    }
    gain = 0;
    for (std::size_t i = 0; i < n; ++i) {
      long g = 0;
      for (std::size_t j = 0; j < m; ++j)
        if (v[j]) g += cell_gain(a, w, cur, i, j);
      const char nu = g > 0 ? 1 : 0;
      changed = changed || nu != u[i];
      u[i] = nu;
      if (nu) gain += g;
    }
    if (!changed) break;
  }
  return gain;
}

}  // namespace detail

/// k greedy rounds; each adds the best rank-1 block found by alternating local
/// search from every row of uncovered ones plus `restarts` random row sets.
/// A round is kept only when it strictly lowers the cost, so the result is
/// never worse than the zero factor.
inline BoolFactor bool_lra_heuristic(const BoolMatrix& a, const BitMatrix& w, std::size_t k, std::uint64_t seed,
                                     std::size_t restarts = 5) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (!a.same_shape(w)) throw ShapeError("bool_lra_heuristic: shape mismatch");
  const std::size_t n = a.rows(), m = a.cols();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  BoolFactor f{BoolMatrix(n, k), BoolMatrix(k, m), k};
  BoolMatrix cur(n, m);
  for (std::size_t round = 0; round < k; ++round) {
    long best_gain = 0;
    std::vector<char> best_u(n, 0), best_v(m, 0);
    auto consider = [&](std::vector<char> u) {
      std::vector<char> v(m, 0);
      const long g = detail::rank_one_search(a, w, cur, u, v);
      if (g > best_gain) {
        best_gain = g;
        best_u = std::move(u);
        best_v = std::move(v);
      }
    };
    for (std::size_t i = 0; i < n; ++i) {
      bool useful = false;
      for (std::size_t j = 0; j < m && !useful; ++j) useful = detail::cell_gain(a, w, cur, i, j) > 0;
      if (!useful) continue;
      std::vector<char> u(n, 0);
      u[i] = 1;
      consider(std::move(u));
    }
    for (std::size_t r = 0; r < restarts; ++r) {
      std::vector<char> u(n);
      for (auto& x : u) x = coin(rng) ? 1 : 0;
      consider(std::move(u));
    }
    if (best_gain <= 0) break;
    for (std::size_t i = 0; i < n; ++i) f.U.set(i, round, best_u[i] != 0);
    for (std::size_t j = 0; j < m; ++j) f.V.set(round, j, best_v[j] != 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (best_u[i] && best_v[j]) cur.set(i, j, true);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Cover composition

enum class InnerSolver { automatic, exhaustive, heuristic };

struct CoverFit {
  BoolFactor factor;
  std::size_t cost = 0;
  std::vector<std::size_t> inner_costs;     // per rectangle
  std::vector<std::size_t> inner_optimum;   // exhaustive optimum per rectangle, or the inner cost when uncomputable
  std::size_t delta_slack = 0;              // sum of (inner cost - inner optimum)
};

/// Per covering rectangle, a rank-k Boolean fit of A on the rectangle,
/// zero-extended; the factors are concatenated so the product is the OR of
/// the per-rectangle products.
inline CoverFit cover_based_bool_lra(const BoolMatrix& a, const BitMatrix& w, const Cover& c, std::size_t k,
                                     InnerSolver inner = InnerSolver::automatic, std::uint64_t seed = 0) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (!a.same_shape(w) || c.n != a.rows() || c.n != a.cols()) throw ShapeError("cover_based_bool_lra: shape mismatch");
  if (!cover_matches(c, w)) throw ValidationError("cover_based_bool_lra: cover does not match the mask support");
  const std::size_t n = a.rows(), m = a.cols();
  const std::size_t width = k * c.rectangles.size();
  CoverFit out;
  out.factor = {BoolMatrix(n, width), BoolMatrix(width, m), width};
  for (std::size_t r = 0; r < c.rectangles.size(); ++r) {
    const auto& rows = c.rectangles[r].sides[0];
    const auto& cols = c.rectangles[r].sides[1];
    BoolMatrix sub(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) sub.set(i, j, a(rows[i], cols[j]));
    const BitMatrix ones = BitMatrix::ones(rows.size(), cols.size());
    const bool exact_ok = within_exhaustive_cap(rows.size(), cols.size(), k);
    const bool use_exact = inner == InnerSolver::exhaustive || (inner == InnerSolver::automatic && exact_ok);
    BoolFactor f;
    std::size_t cost = 0;
    std::size_t opt = 0;
    if (use_exact) {
      BoolFit fit = bool_lra_exhaustive(sub, ones, k);
      f = std::move(fit.factor);
      cost = opt = fit.cost;
    } else {
      f = bool_lra_heuristic(sub, ones, k, splitmix64(seed ^ r));
      cost = bool_cost(sub, bool_product(f), ones);
      opt = exact_ok ? bool_lra_exhaustive(sub, ones, k).cost : cost;
    }
    out.inner_costs.push_back(cost);
    out.inner_optimum.push_back(opt);
    out.delta_slack += cost - opt;
    for (std::size_t q = 0; q < k; ++q) {
      for (std::size_t i = 0; i < rows.size(); ++i) out.factor.U.set(rows[i], r * k + q, f.U(i, q));
      for (std::size_t j = 0; j < cols.size(); ++j) out.factor.V.set(r * k + q, cols[j], f.V(q, j));
    }
  }
  out.cost = bool_cost(a, bool_product(out.factor), w);
  return out;
}

struct NondetReport {
  std::size_t cost = 0;
  std::size_t cover_size = 0;
  std::size_t opt_upper = 0;
  std::size_t delta_slack = 0;
  std::size_t rhs = 0;  // |C| * opt_upper + delta_slack
  bool satisfied = false;
};

/// cost <= |C| * opt_upper + Delta with Delta the inner solvers' measured suboptimality.
inline NondetReport verify_nondet_bound(const BoolMatrix& a, const BitMatrix& w, const Cover& c, std::size_t k,
                                        std::size_t opt_upper, InnerSolver inner = InnerSolver::automatic,
                                        std::uint64_t seed = 0) {
  const CoverFit fit = cover_based_bool_lra(a, w, c, k, inner, seed);
  NondetReport r;
  r.cost = fit.cost;
  r.cover_size = c.rectangles.size();
  r.opt_upper = opt_upper;
  r.delta_slack = fit.delta_slack;
  r.rhs = r.cover_size * opt_upper + r.delta_slack;
  r.satisfied = r.cost <= r.rhs;
  return r;
}

}  // namespace mlra
