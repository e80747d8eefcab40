#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "mlra/error.hpp"
#include "mlra/linalg.hpp"
#include "mlra/protocols.hpp"

namespace mlra {

/// Dense order-3 array, entry (i, j, l) at (i * n2 + j) * n3 + l.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, double fill = 0.0)
      : n1_(n1), n2_(n2), n3_(n3), data_(n1 * n2 * n3, fill) {}
  Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, std::vector<double> data)
      : n1_(n1), n2_(n2), n3_(n3), data_(std::move(data)) {
    if (data_.size() != n1 * n2 * n3) throw ShapeError("Tensor3: data length != n1 * n2 * n3");
  }

  std::size_t n1() const noexcept { return n1_; }
  std::size_t n2() const noexcept { return n2_; }
  std::size_t n3() const noexcept { return n3_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t l) noexcept { return data_[(i * n2_ + j) * n3_ + l]; }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const noexcept {
    return data_[(i * n2_ + j) * n3_ + l];
  }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  bool same_shape(const Tensor3& o) const noexcept { return n1_ == o.n1_ && n2_ == o.n2_ && n3_ == o.n3_; }
  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t n1_ = 0, n2_ = 0, n3_ = 0;
  std::vector<double> data_;
};

inline double frobenius_sq(const Tensor3& t) {
  double s = 0.0;
  for (double x : t.values()) s += x * x;
  return s;
}

/// Sum over c of U(i, c) V(j, c) Z(l, c).
struct CPFactor {
  RealMatrix U, V, Z;
  std::size_t rank_bound = 0;

  static CPFactor zero(std::size_t n1, std::size_t n2, std::size_t n3) {
    return {RealMatrix(n1, 0), RealMatrix(n2, 0), RealMatrix(n3, 0), 0};
  }

  std::size_t width() const noexcept { return U.cols(); }

  double value(std::size_t i, std::size_t j, std::size_t l) const noexcept {
    double s = 0.0;
    for (std::size_t c = 0; c < U.cols(); ++c) s += U(i, c) * V(j, c) * Z(l, c);
    return s;
  }

  Tensor3 to_dense() const {
    Tensor3 t(U.rows(), V.rows(), Z.rows());
    for (std::size_t i = 0; i < U.rows(); ++i)
      for (std::size_t j = 0; j < V.rows(); ++j)
        for (std::size_t l = 0; l < Z.rows(); ++l) t(i, j, l) = value(i, j, l);
    return t;
  }
};

// ---------------------------------------------------------------------------
// Order-3 masks

namespace pattern3 {
/// Zero exactly where i1 = i2 = i3.
struct Diagonal3 {};
/// zero_sets[i1] lists the (i2, i3) cells of face i1 that are zero; at most s per face.
struct SparseFaces {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> zero_sets;
  std::size_t s = 0;
};
struct Explicit3 {};
}  // namespace pattern3

using MaskPattern3 = std::variant<pattern3::Diagonal3, pattern3::SparseFaces, pattern3::Explicit3>;

class Mask3 {
 public:
  Mask3() = default;
  static Mask3 from_bits(std::size_t n, std::vector<std::uint8_t> bits) {
    if (bits.size() != n * n * n) throw ShapeError("Mask3: bitmap length != n^3");
    return Mask3(pattern3::Explicit3{}, n, std::move(bits));
  }
  static Mask3 ones(std::size_t n) { return from_bits(n, std::vector<std::uint8_t>(n * n * n, 1)); }

  std::size_t n() const noexcept { return n_; }
  const MaskPattern3& pattern() const noexcept { return pattern_; }
  bool operator()(std::size_t i, std::size_t j, std::size_t l) const noexcept { return bits_[(i * n_ + j) * n_ + l] != 0; }
  const std::vector<std::uint8_t>& raw() const noexcept { return bits_; }

  Mask3 complement() const {
    std::vector<std::uint8_t> b(bits_.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = bits_[i] ? 0 : 1;
    return from_bits(n_, std::move(b));
  }

  friend Mask3 make_mask3(const MaskPattern3& p, std::size_t n);

 private:
  Mask3(MaskPattern3 p, std::size_t n, std::vector<std::uint8_t> bits)
      : pattern_(std::move(p)), n_(n), bits_(std::move(bits)) {}

  MaskPattern3 pattern_ = pattern3::Explicit3{};
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline Mask3 make_mask3(const MaskPattern3& p, std::size_t n) {
  std::vector<std::uint8_t> bits(n * n * n, 1);
  if (std::holds_alternative<pattern3::Diagonal3>(p)) {
    for (std::size_t i = 0; i < n; ++i) bits[(i * n + i) * n + i] = 0;
  } else if (const auto* sf = std::get_if<pattern3::SparseFaces>(&p)) {
    if (sf->zero_sets.size() != n) throw ParameterError("zero_sets", "need one zero set per face");
    for (std::size_t i = 0; i < n; ++i) {
      if (sf->zero_sets[i].size() > sf->s) throw ParameterError("zero_sets", "face has more than s zeros");
      for (auto [j, l] : sf->zero_sets[i]) {
        if (j >= n || l >= n) throw ParameterError("zero_sets", "index out of range");
        bits[(i * n + j) * n + l] = 0;
      }
    }
  } else {
    throw ParameterError("pattern", "explicit order-3 masks are built with Mask3::from_bits");
  }
  return Mask3(p, n, std::move(bits));
}

inline Tensor3 apply_mask(const Tensor3& a, const Mask3& w) {
  if (a.n1() != w.n() || a.n2() != w.n() || a.n3() != w.n()) throw ShapeError("apply_mask: tensor/mask mismatch");
  Tensor3 out = a;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!w.raw()[i]) v[i] = 0.0;
  return out;
}

/// Sum over W = 1 of (A - L)^2.
inline double masked_cost3(const Tensor3& a, const Mask3& w, const CPFactor& l) {
  const std::size_t n = w.n();
  if (a.n1() != n || a.n2() != n || a.n3() != n || l.U.rows() != n || l.V.rows() != n || l.Z.rows() != n)
    throw ShapeError("masked_cost3: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (w(i, j, k)) {
          const double d = a(i, j, k) - l.value(i, j, k);
          s += d * d;
        }
  return s;
}

/// ||T - L||_F^2 over all cells.
inline double residual_sq(const Tensor3& t, const CPFactor& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.n1(); ++i)
    for (std::size_t j = 0; j < t.n2(); ++j)
      for (std::size_t k = 0; k < t.n3(); ++k) {
        const double d = t(i, j, k) - l.value(i, j, k);
        s += d * d;
      }
  return s;
}

/// The labels of an order-3 partition painted onto the cube.
inline Mask3 protocol_tensor(const PartitionSample3& p) {
  std::vector<std::uint8_t> bits(p.n * p.n * p.n, 0);
  for (const auto& r : p.rectangles)
    if (r.label)
      for (auto a : r.sides[0])
        for (auto b : r.sides[1])
          for (auto c : r.sides[2]) bits[(a * p.n + b) * p.n + c] = 1;
  return Mask3::from_bits(p.n, std::move(bits));
}

// ---------------------------------------------------------------------------
// CP-ALS

struct CpAlsOptions {
  std::size_t iters = 200;
  double tol = 1e-10;       // stop when the relative improvement of one sweep is below tol
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
};

struct CpAlsResult {
  CPFactor factor;
  double residual = 0.0;          // ||T - L||_F^2
  bool regularized = false;       // some Gram solve dropped a null direction
  std::size_t sweeps = 0;
  std::vector<double> history;    // residual after every sweep of the returned run
};

namespace detail {

/// Least-squares update of mode `mode` given the other two factors.
inline void cp_update(const Tensor3& t, CPFactor& f, int mode, bool& truncated) {
  RealMatrix& target = mode == 0 ? f.U : (mode == 1 ? f.V : f.Z);
  const RealMatrix& b = mode == 0 ? f.V : f.U;
  const RealMatrix& c = mode == 2 ? f.V : f.Z;
  const std::size_t r = target.cols();
  RealMatrix gram = multiply_tn(b, b);
  const RealMatrix gc = multiply_tn(c, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) gram(i, j) *= gc(i, j);
  RealMatrix m(target.rows(), r);
  for (std::size_t i = 0; i < t.n1(); ++i)
    for (std::size_t j = 0; j < t.n2(); ++j)
      for (std::size_t l = 0; l < t.n3(); ++l) {
        const double x = t(i, j, l);
        if (x == 0.0) continue;
        for (std::size_t q = 0; q < r; ++q) {
          if (mode == 0) m(i, q) += x * f.V(j, q) * f.Z(l, q);
          else if (mode == 1) m(j, q) += x * f.U(i, q) * f.Z(l, q);
          else m(l, q) += x * f.U(i, q) * f.V(j, q);
        }
      }
  bool all_zero = true;
  for (double g : gram.values()) all_zero = all_zero && g == 0.0;
  if (all_zero) {
    target = RealMatrix(target.rows(), r);
    truncated = true;
    return;
  }
  target = solve_gram(gram, m, &truncated);
}

}  // namespace detail

/// Alternating least squares from a given start, sweeping U, V, Z in order.
/// Each update is an exact least-squares minimizer, so the fit never increases.
inline CpAlsResult cp_als_from(const Tensor3& t, CPFactor start, std::size_t iters, double tol) {
  CpAlsResult res;
  res.factor = std::move(start);
  double prev = residual_sq(t, res.factor);
  res.history.push_back(prev);
  for (std::size_t it = 0; it < iters; ++it) {
    for (int mode = 0; mode < 3; ++mode) detail::cp_update(t, res.factor, mode, res.regularized);
    const double cur = residual_sq(t, res.factor);
    res.history.push_back(cur);
    ++res.sweeps;
    const bool stalled = prev - cur <= tol * std::max(prev, 1e-300);
    prev = cur;
    if (stalled) break;
  }
  res.residual = prev;
  return res;
}

/// Best of `restarts` ALS runs from seeded Gaussian starts.
inline CpAlsResult cp_als(const Tensor3& t, std::size_t k, const CpAlsOptions& opt = {}) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (opt.restarts < 1) throw ParameterError("restarts", "must be >= 1");
  std::mt19937_64 rng(opt.seed);
  std::optional<CpAlsResult> best;
  bool flagged = false;
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    CPFactor start{RealMatrix(t.n1(), k), gaussian_matrix(t.n2(), k, rng), gaussian_matrix(t.n3(), k, rng), k};
    CpAlsResult cur = cp_als_from(t, std::move(start), opt.iters, opt.tol);
    flagged = flagged || cur.regularized;
    if (!best || cur.residual < best->residual) best = std::move(cur);
  }
  best->regularized = flagged;
  best->factor.rank_bound = k;
  return std::move(*best);
}

/// CP-ALS on A o W at rank k', from `init` when given (its width must not
/// exceed k'), otherwise from seeded random starts.
inline CpAlsResult masked_tensor_lra(const Tensor3& a, const Mask3& w, std::size_t k_prime,
                                     const std::optional<CPFactor>& init, std::size_t iters, std::uint64_t seed) {
  if (k_prime < 1) throw ParameterError("k_prime", "must be >= 1");
  const Tensor3 aw = apply_mask(a, w);
  if (!init) return cp_als(aw, k_prime, {iters, 1e-10, 1, seed});
  if (init->width() > k_prime) throw ParameterError("init", "initial factor wider than k_prime");
  CpAlsResult res = cp_als_from(aw, *init, iters, 1e-12);
  res.factor.rank_bound = k_prime;
  return res;
}

struct TensorComparatorOptions {
  std::size_t inner_iters = 100;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
};

/// Per 1-labeled rectangle, a rank-k CP fit of A o W restricted to it,
/// zero-extended and concatenated; exactly zero outside the 1-rectangles.
inline CPFactor tensor_comparator(const Tensor3& a, const Mask3& w, const PartitionSample3& p, std::size_t k,
                                  const TensorComparatorOptions& opt = {}) {
  if (k < 1) throw ParameterError("k", "must be >= 1");
  const std::size_t n = p.n;
  if (w.n() != n || a.n1() != n || a.n2() != n || a.n3() != n)
    throw ShapeError("tensor_comparator: partition does not match A");
  const Tensor3 aw = apply_mask(a, w);
  std::vector<std::pair<const Rectangle3*, CPFactor>> parts;
  std::size_t width = 0;
  std::size_t idx = 0;
  for (const auto& r : p.rectangles) {
    if (!r.label) continue;
    const auto& s = r.sides;
    Tensor3 sub(s[0].size(), s[1].size(), s[2].size());
    for (std::size_t i = 0; i < s[0].size(); ++i)
      for (std::size_t j = 0; j < s[1].size(); ++j)
        for (std::size_t l = 0; l < s[2].size(); ++l) sub(i, j, l) = aw(s[0][i], s[1][j], s[2][l]);
    CPFactor f;
    if (frobenius_sq(sub) == 0.0) {
      f = CPFactor::zero(sub.n1(), sub.n2(), sub.n3());
    } else {
      f = cp_als(sub, k, {opt.inner_iters, 1e-12, opt.restarts, splitmix64(opt.seed ^ idx)}).factor;
    }
    width += f.width();
    parts.emplace_back(&r, std::move(f));
    ++idx;
  }
  CPFactor out{RealMatrix(n, width), RealMatrix(n, width), RealMatrix(n, width), k * p.one_count};
  std::size_t c0 = 0;
  for (const auto& [r, f] : parts) {
    for (std::size_t c = 0; c < f.width(); ++c) {
      for (std::size_t i = 0; i < r->sides[0].size(); ++i) out.U(r->sides[0][i], c0 + c) = f.U(i, c);
      for (std::size_t j = 0; j < r->sides[1].size(); ++j) out.V(r->sides[1][j], c0 + c) = f.V(j, c);
      for (std::size_t l = 0; l < r->sides[2].size(); ++l) out.Z(r->sides[2][l], c0 + c) = f.Z(l, c);
    }
    c0 += f.width();
  }
  return out;
}

}  // namespace mlra
