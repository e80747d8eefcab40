#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mlra/error.hpp"
#include "mlra/linalg.hpp"
#include "mlra/masks.hpp"
#include "mlra/solver.hpp"

namespace mlra {

struct LeverageScores {
  std::vector<double> tau;
  std::size_t rank = 0;
};

/// Row leverage scores of the represented matrix: squared row norms of an
/// orthonormal basis of its column space (numerical rank at 1e-10 relative).
inline LeverageScores leverage_scores(const RealMatrix& l) {
  LeverageScores out;
  out.tau.assign(l.rows(), 0.0);
  if (l.rows() == 0 || l.cols() == 0) return out;
  const Svd d = svd(l);
  out.rank = numerical_rank(d.s);
  for (std::size_t i = 0; i < l.rows(); ++i)
    for (std::size_t c = 0; c < out.rank; ++c) out.tau[i] += d.U(i, c) * d.U(i, c);
  return out;
}

inline LeverageScores leverage_scores(const LowRankFactor& l) { return leverage_scores(l.to_dense()); }

struct ReweightResult {
  std::vector<double> d;
  std::vector<std::size_t> modified;
  double beta = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double max_score = 0.0;
};

inline constexpr double kReweightSnap = 1e-8;

/// Repeatedly scales every row whose leverage exceeds beta by sqrt(beta / tau).
/// Weights that fall below 1e-8 are set to 0, which removes the row from the
/// column space; a lone spike row otherwise keeps leverage 1 at any scale.
inline ReweightResult coherence_reweight(const RealMatrix& l, double beta, std::size_t max_iters = 500) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta", "must lie in (0, 1]");
  ReweightResult r;
  r.beta = beta;
  r.d.assign(l.rows(), 1.0);
  const double limit = beta * (1.0 + 1e-6);
  RealMatrix dl = l;
  for (;;) {
    const auto lev = leverage_scores(dl);
    r.max_score = lev.tau.empty() ? 0.0 : *std::max_element(lev.tau.begin(), lev.tau.end());
    if (r.max_score <= limit) {
      r.converged = true;
      break;
    }
    if (r.iterations == max_iters) break;
    ++r.iterations;
    for (std::size_t i = 0; i < l.rows(); ++i) {
      if (lev.tau[i] <= beta) continue;
      r.d[i] *= std::sqrt(beta / lev.tau[i]);
      if (r.d[i] < kReweightSnap) r.d[i] = 0.0;
    }
    for (std::size_t i = 0; i < l.rows(); ++i)
      for (std::size_t j = 0; j < l.cols(); ++j) dl(i, j) = r.d[i] * l(i, j);
  }
  for (std::size_t i = 0; i < r.d.size(); ++i)
    if (r.d[i] != 1.0) r.modified.push_back(i);
  return r;
}

inline ReweightResult coherence_reweight(const LowRankFactor& l, double beta, std::size_t max_iters = 500) {
  return coherence_reweight(l.to_dense(), beta, max_iters);
}

struct HeavyRowSet {
  std::vector<std::size_t> S;
  std::size_t budget = 0;
  std::size_t t = 0;
  double on_mass = 0.0;   // ||L o W||_F^2 over all rows
  double off_mass = 0.0;  // ||L o (1 - W)||_F^2 over rows outside S

  /// The structural guarantee off <= eps / (1 - eps) * on.
  bool within_bound(double eps) const {
    if (eps >= 1.0) return true;
    const double bound = eps / (1.0 - eps) * on_mass;
    return off_mass <= bound + 1e-12 * std::max(1.0, on_mass);
  }
};

/// The ceil(t k / eps) rows carrying the most mass on W's zeros (only rows
/// with positive off-support mass are taken). t is the largest column zero
/// count of W. Among all row sets of that size this leaves the least
/// off-support mass behind.
inline HeavyRowSet heavy_row_set(const RealMatrix& l, const Mask& w, double eps, std::size_t k) {
  if (!l.same_shape(RealMatrix(w.rows(), w.cols()))) throw ShapeError("heavy_row_set: L and W differ in shape");
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw ParameterError("eps", "must lie in (0, 1]");
  HeavyRowSet h;
  h.t = w.max_col_zeros();
  h.budget = h.t == 0 ? 0 : ceil_ratio(static_cast<double>(h.t * k), eps);
  std::vector<double> off(l.rows(), 0.0);
  for (std::size_t i = 0; i < l.rows(); ++i)
    for (std::size_t j = 0; j < l.cols(); ++j) {
      const double x = l(i, j) * l(i, j);
      if (w(i, j)) {
        h.on_mass += x;
      } else {
        off[i] += x;
      }
    }
  std::vector<std::size_t> order(l.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return off[a] > off[b]; });
  for (std::size_t idx : order) {
    if (h.S.size() == h.budget || off[idx] <= 0.0) break;
    h.S.push_back(idx);
  }
  std::vector<char> in_s(l.rows(), 0);
  for (auto i : h.S) in_s[i] = 1;
  for (std::size_t i = 0; i < l.rows(); ++i)
    if (!in_s[i]) h.off_mass += off[i];
  std::sort(h.S.begin(), h.S.end());
  return h;
}

inline HeavyRowSet heavy_row_set(const LowRankFactor& l, const Mask& w, double eps, std::size_t k) {
  return heavy_row_set(l.to_dense(), w, eps, k);
}

/// L with the rows in S replaced by the rows of A o W. The replacement is
/// carried by |S| extra factor columns (a row selector times the rows).
inline LowRankFactor row_patch_comparator(const RealMatrix& a, const Mask& w, const LowRankFactor& l,
                                          const std::vector<std::size_t>& s) {
  if (!a.same_shape(RealMatrix(w.rows(), w.cols())) || l.rows() != a.rows() || l.cols() != a.cols())
    throw ShapeError("row_patch_comparator: shape mismatch");
  const std::size_t r = l.width();
  LowRankFactor out{RealMatrix(a.rows(), r + s.size()), RealMatrix(a.cols(), r + s.size()), l.rank_bound + s.size()};
  std::vector<char> in_s(a.rows(), 0);
  for (auto i : s) {
    if (i >= a.rows()) throw ParameterError("S", "row index out of range");
    in_s[i] = 1;
  }
  for (std::size_t i = 0; i < a.rows(); ++i)
    if (!in_s[i])
      for (std::size_t c = 0; c < r; ++c) out.U(i, c) = l.U(i, c);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t c = 0; c < r; ++c) out.V(j, c) = l.V(j, c);
  for (std::size_t q = 0; q < s.size(); ++q) {
    out.U(s[q], r + q) = 1.0;
    for (std::size_t j = 0; j < a.cols(); ++j) out.V(j, r + q) = w(s[q], j) ? a(s[q], j) : 0.0;
  }
  return out;
}

struct StructuralReport {
  std::size_t t = 0;
  std::size_t k = 0;
  std::size_t k_prime = 0;
  double eps = 0.0;
  double cost = 0.0;
  double opt_upper = 0.0;
  double term_eps = 0.0;   // eps ||A||_F^2
  double term_eps1 = 0.0;  // measured solver slack (0 for the exact solver)
  double rhs = 0.0;
  bool satisfied = false;
};

/// Zero-fill heuristic at k' = ceil(6 k t / eps) with t the largest column
/// zero count; checks cost <= opt_upper + eps ||A||^2 + eps1 ||A||^2.
inline StructuralReport verify_structural_bicriteria(const RealMatrix& a, const Mask& w, std::size_t k, double eps,
                                                     double opt_upper,
                                                     const SolveMethod& method = SolveMethod::exact()) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw ParameterError("eps", "must lie in (0, 1]");
  StructuralReport r;
  r.t = std::max<std::size_t>(1, w.max_col_zeros());
  r.k = k;
  r.eps = eps;
  r.opt_upper = opt_upper;
  r.k_prime = std::min(ceil_ratio(6.0 * static_cast<double>(k * r.t), eps), std::min(a.rows(), a.cols()));
  const LowRankFactor l = masked_lra(a, w, r.k_prime, method);
  r.cost = masked_cost(a, w, l);
  const double a_mass = frobenius_sq(a);
  r.term_eps = eps * a_mass;
  if (method.kind == SolveMethod::Kind::randomized) {
    const RealMatrix aw = apply_mask(a, w.bits());
    r.term_eps1 = std::max(0.0, residual_sq(aw, l) - residual_sq(aw, masked_lra(a, w, r.k_prime)));
  }
  r.rhs = r.opt_upper + r.term_eps + r.term_eps1;
  r.satisfied = r.cost <= r.rhs + 1e-9 * r.rhs;
  return r;
}

}  // namespace mlra
