#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "mlra/bit_matrix.hpp"
#include "mlra/error.hpp"

namespace mlra {

/// Dense real matrix, row-major, 64-bit floating point.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("RealMatrix: data length != rows*cols");
  }

  static RealMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    RealMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("RealMatrix::from_rows: ragged rows");
      std::copy(row.begin(), row.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * c));
      ++i;
    }
    return m;
  }

  static RealMatrix identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  bool same_shape(const RealMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  RealMatrix transposed() const {
    RealMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool operator==(const RealMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// L = U * V^T with U (n x r) and V (m x r). `rank_bound` may exceed r
/// (e.g. a comparator certifies k * #rectangles even if some blocks are thinner).
struct LowRankFactor {
  RealMatrix U;
  RealMatrix V;
  std::size_t rank_bound = 0;

  static LowRankFactor zero(std::size_t rows, std::size_t cols) {
    return {RealMatrix(rows, 0), RealMatrix(cols, 0), 0};
  }

  std::size_t rows() const noexcept { return U.rows(); }
  std::size_t cols() const noexcept { return V.rows(); }
  std::size_t width() const noexcept { return U.cols(); }

  double value(std::size_t i, std::size_t j) const noexcept {
    double s = 0.0;
    for (std::size_t c = 0; c < U.cols(); ++c) s += U(i, c) * V(j, c);
    return s;
  }

  RealMatrix to_dense() const {
    RealMatrix out(rows(), cols());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) out(i, j) = value(i, j);
    return out;
  }
};

/// Entrywise cost g(|x|) summed over cells. g is monotone nondecreasing and nonnegative.
class NormKind {
 public:
  enum class Tag { squared_frobenius, entrywise_p, entrywise_zero };

  static NormKind squared_frobenius() { return NormKind(Tag::squared_frobenius, 2.0); }
  static NormKind entrywise_zero() { return NormKind(Tag::entrywise_zero, 0.0); }
  static NormKind entrywise_p(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("p", "entrywise-p requires p > 0");
    return NormKind(Tag::entrywise_p, p);
  }

  Tag tag() const noexcept { return tag_; }
  double p() const noexcept { return p_; }

  double operator()(double x) const noexcept {
    const double a = std::abs(x);
    switch (tag_) {
      case Tag::squared_frobenius: return a * a;
      case Tag::entrywise_p: return std::pow(a, p_);
      case Tag::entrywise_zero: return a != 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
  }

 private:
  NormKind(Tag t, double p) : tag_(t), p_(p) {}
  Tag tag_;
  double p_;
};

// ---------------------------------------------------------------------------
// Elementary operations

inline RealMatrix hadamard(const RealMatrix& a, const RealMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("hadamard: dimension mismatch");
  RealMatrix out(a.rows(), a.cols());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  return out;
}

/// A o W for a binary W: entries where W = 0 become exactly 0.
inline RealMatrix apply_mask(const RealMatrix& a, const BitMatrix& w) {
  if (a.rows() != w.rows() || a.cols() != w.cols()) throw ShapeError("apply_mask: dimension mismatch");
  RealMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = w(i, j) ? a(i, j) : 0.0;
  return out;
}

inline RealMatrix subtract(const RealMatrix& a, const RealMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("subtract: dimension mismatch");
  RealMatrix out(a.rows(), a.cols());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  return out;
}

inline double entrywise_norm(const RealMatrix& a, const NormKind& g) {
  double s = 0.0;
  for (double v : a.values()) s += g(v);
  return s;
}

inline double frobenius_sq(const RealMatrix& a) { return entrywise_norm(a, NormKind::squared_frobenius()); }

/// A * B
inline RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("multiply: inner dimension mismatch");
  RealMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double av = a(i, l);
      if (av == 0.0) continue;
      auto brow = b.row(l);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

/// A^T * B
inline RealMatrix multiply_tn(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("multiply_tn: row mismatch");
  RealMatrix out(a.cols(), b.cols());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    auto arow = a.row(l);
    auto brow = b.row(l);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

/// A * B^T
inline RealMatrix multiply_nt(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("multiply_nt: column mismatch");
  RealMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += arow[l] * brow[l];
      out(i, j) = s;
    }
  }
  return out;
}

inline RealMatrix submatrix(const RealMatrix& a, std::span<const std::size_t> rows,
                            std::span<const std::size_t> cols) {
  RealMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

/// Standard normal matrix from a seeded engine.
inline RealMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

// ---------------------------------------------------------------------------
// Singular value decomposition

/// Thin SVD: A = U diag(s) V^T with U (m x r), V (n x r), r = min(m, n),
/// s sorted nonincreasing.
struct Svd {
  RealMatrix U;
  std::vector<double> s;
  RealMatrix V;
};

namespace detail {

inline double pythag(double a, double b) {
  const double absa = std::abs(a);
  const double absb = std::abs(b);
  if (absa > absb) return absa * std::sqrt(1.0 + (absb / absa) * (absb / absa));
  return absb == 0.0 ? 0.0 : absb * std::sqrt(1.0 + (absa / absb) * (absa / absb));
}

inline double with_sign(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

inline constexpr std::size_t kSvdMaxSweeps = 75;

// Householder bidiagonalization followed by implicit-shift QR on the
// bidiagonal. On entry `a` is m x n with m >= n; on exit it holds U.
inline void golub_kahan_svd(RealMatrix& a, std::vector<double>& w, RealMatrix& v) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  w.assign(n, 0.0);
  v = RealMatrix(n, n);
  std::vector<double> rv1(n, 0.0);

  double g = 0.0, scale = 0.0, anorm = 0.0;
  std::size_t l = 0;
  for (std::size_t i = 0; i < n; ++i) {
    l = i + 1;
    rv1[i] = scale * g;
    g = 0.0;
    double s = 0.0;
    scale = 0.0;
    if (i < m) {
      for (std::size_t k = i; k < m; ++k) scale += std::abs(a(k, i));
      if (scale != 0.0) {
        for (std::size_t k = i; k < m; ++k) {
          a(k, i) /= scale;
          s += a(k, i) * a(k, i);
        }
        double f = a(i, i);
        g = -with_sign(std::sqrt(s), f);
        const double h = f * g - s;
        a(i, i) = f - g;
        for (std::size_t j = l; j < n; ++j) {
          s = 0.0;
          for (std::size_t k = i; k < m; ++k) s += a(k, i) * a(k, j);
          f = s / h;
          for (std::size_t k = i; k < m; ++k) a(k, j) += f * a(k, i);
        }
        for (std::size_t k = i; k < m; ++k) a(k, i) *= scale;
      }
    }
    w[i] = scale * g;
    g = 0.0;
    s = 0.0;
    scale = 0.0;
    if (i < m && i + 1 != n) {
      for (std::size_t k = l; k < n; ++k) scale += std::abs(a(i, k));
      if (scale != 0.0) {
        for (std::size_t k = l; k < n; ++k) {
          a(i, k) /= scale;
          s += a(i, k) * a(i, k);
        }
        const double f = a(i, l);
        g = -with_sign(std::sqrt(s), f);
        const double h = f * g - s;
        a(i, l) = f - g;
        for (std::size_t k = l; k < n; ++k) rv1[k] = a(i, k) / h;
        for (std::size_t j = l; j < m; ++j) {
          s = 0.0;
          for (std::size_t k = l; k < n; ++k) s += a(j, k) * a(i, k);
          for (std::size_t k = l; k < n; ++k) a(j, k) += s * rv1[k];
        }
        for (std::size_t k = l; k < n; ++k) a(i, k) *= scale;
      }
    }
    anorm = std::max(anorm, std::abs(w[i]) + std::abs(rv1[i]));
  }

  // Right-hand transformations.
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t i = ii;
    if (i + 1 < n) {
      if (g != 0.0) {
        for (std::size_t j = l; j < n; ++j) v(j, i) = (a(i, j) / a(i, l)) / g;
        for (std::size_t j = l; j < n; ++j) {
          double s = 0.0;
          for (std::size_t k = l; k < n; ++k) s += a(i, k) * v(k, j);
          for (std::size_t k = l; k < n; ++k) v(k, j) += s * v(k, i);
        }
      }
      for (std::size_t j = l; j < n; ++j) v(i, j) = v(j, i) = 0.0;
    }
    v(i, i) = 1.0;
    g = rv1[i];
    l = i;
  }

  // Left-hand transformations.
  for (std::size_t ii = std::min(m, n); ii-- > 0;) {
    const std::size_t i = ii;
    l = i + 1;
    g = w[i];
    for (std::size_t j = l; j < n; ++j) a(i, j) = 0.0;
    if (g != 0.0) {
      g = 1.0 / g;
      for (std::size_t j = l; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = l; k < m; ++k) s += a(k, i) * a(k, j);
        const double f = (s / a(i, i)) * g;
        for (std::size_t k = i; k < m; ++k) a(k, j) += f * a(k, i);
      }
      for (std::size_t j = i; j < m; ++j) a(j, i) *= g;
    } else {
      for (std::size_t j = i; j < m; ++j) a(j, i) = 0.0;
    }
    a(i, i) += 1.0;
  }

  // Diagonalize the bidiagonal form.
  for (std::size_t kk = n; kk-- > 0;) {
    const std::size_t k = kk;
    for (std::size_t its = 1;; ++its) {
      bool flag = true;
      std::size_t nm = 0;
      std::size_t ll = k;
      for (std::size_t lp = k + 1; lp-- > 0;) {
        ll = lp;
        if (ll == 0 || std::abs(rv1[ll]) <= eps * anorm) {
          flag = false;
          break;
        }
        nm = ll - 1;
        if (std::abs(w[nm]) <= eps * anorm) break;
      }
      if (flag) {
        double c = 0.0;
        double s = 1.0;
        for (std::size_t i = ll; i <= k; ++i) {
          const double f = s * rv1[i];
          rv1[i] = c * rv1[i];
          if (std::abs(f) <= eps * anorm) break;
          g = w[i];
          double h = pythag(f, g);
          w[i] = h;
          h = 1.0 / h;
          c = g * h;
          s = -f * h;
          for (std::size_t j = 0; j < m; ++j) {
            const double y = a(j, nm);
            const double z = a(j, i);
            a(j, nm) = y * c + z * s;
            a(j, i) = z * c - y * s;
          }
        }
      }
      double z = w[k];
      if (ll == k) {
        if (z < 0.0) {
          w[k] = -z;
          for (std::size_t j = 0; j < n; ++j) v(j, k) = -v(j, k);
        }
        break;
      }
      if (its >= kSvdMaxSweeps) throw NumericalError("svd: implicit QR did not converge", its);
      double x = w[ll];
      nm = k - 1;
      double y = w[nm];
      g = rv1[nm];
      double h = rv1[k];
      double f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
      g = pythag(f, 1.0);
      f = ((x - z) * (x + z) + h * ((y / (f + with_sign(g, f))) - h)) / x;
      double c = 1.0;
      double s = 1.0;
      for (std::size_t j = ll; j <= nm; ++j) {
        const std::size_t i = j + 1;
        g = rv1[i];
        y = w[i];
        h = s * g;
        g = c * g;
        z = pythag(f, h);
        rv1[j] = z;
        c = f / z;
        s = h / z;
        f = x * c + g * s;
        g = g * c - x * s;
        h = y * s;
        y *= c;
        for (std::size_t jj = 0; jj < n; ++jj) {
          const double xv = v(jj, j);
          const double zv = v(jj, i);
          v(jj, j) = xv * c + zv * s;
          v(jj, i) = zv * c - xv * s;
        }
        z = pythag(f, h);
        w[j] = z;
        if (z != 0.0) {
          z = 1.0 / z;
          c = f * z;
          s = h * z;
        }
        f = c * g + s * y;
        x = c * y - s * g;
        for (std::size_t jj = 0; jj < m; ++jj) {
          const double yv = a(jj, j);
          const double zv = a(jj, i);
          a(jj, j) = yv * c + zv * s;
          a(jj, i) = zv * c - yv * s;
        }
      }
      rv1[ll] = 0.0;
      rv1[k] = f;
      w[k] = x;
    }
  }
}

}  // namespace detail

/// Full thin SVD. Deterministic: ties keep the order produced by the QR sweep.
inline Svd svd(const RealMatrix& a) {
  if (!a.all_finite()) throw ParameterError("A", "svd input contains non-finite entries");
  const bool wide = a.rows() < a.cols();
  RealMatrix work = wide ? a.transposed() : a;
  const std::size_t r = work.cols();
  std::vector<double> w;
  RealMatrix v;
  if (r > 0) detail::golub_kahan_svd(work, w, v);

  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return w[x] > w[y]; });

  Svd out;
  RealMatrix left(work.rows(), r);
  RealMatrix right(r == 0 ? 0 : v.rows(), r);
  out.s.resize(r);
  for (std::size_t c = 0; c < r; ++c) {
    const std::size_t src = order[c];
    out.s[c] = w[src];
    for (std::size_t i = 0; i < work.rows(); ++i) left(i, c) = work(i, src);
    for (std::size_t i = 0; i < v.rows(); ++i) right(i, c) = v(i, src);
  }
  if (wide) {
    out.U = std::move(right);
    out.V = std::move(left);
  } else {
    out.U = std::move(left);
    out.V = std::move(right);
  }
  return out;
}

/// Rank-k truncation of an existing SVD, singular values folded into U.
inline LowRankFactor truncate(const Svd& d, std::size_t k) {
  const std::size_t m = d.U.rows();
  const std::size_t n = d.V.rows();
  LowRankFactor f{RealMatrix(m, k), RealMatrix(n, k), k};
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < m; ++i) f.U(i, c) = d.U(i, c) * d.s[c];
    for (std::size_t j = 0; j < n; ++j) f.V(j, c) = d.V(j, c);
  }
  return f;
}

/// Best rank-k approximation in Frobenius norm (Eckart-Young).
inline LowRankFactor svd_truncated(const RealMatrix& a, std::size_t k) {
  if (k < 1 || k > std::min(a.rows(), a.cols()))
    throw ParameterError("k", "svd_truncated requires 1 <= k <= min(rows, cols)");
  return truncate(svd(a), k);
}

/// Number of singular values above rel_tol * sigma_max.
inline std::size_t numerical_rank(const std::vector<double>& s, double rel_tol = 1e-10) {
  if (s.empty() || s.front() == 0.0) return 0;
  const double cut = rel_tol * s.front();
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [cut](double x) { return x > cut; }));
}

/// Orthonormal basis for the columns of Y (m x c, m >= c) via Householder QR.
/// Columns with zero residual norm leave the corresponding reflector as identity.
inline RealMatrix orthonormal_basis(const RealMatrix& y) {
  const std::size_t m = y.rows();
  const std::size_t c = y.cols();
  if (m < c) throw ShapeError("orthonormal_basis: more columns than rows");
  RealMatrix r = y;
  std::vector<std::vector<double>> reflectors(c);
  for (std::size_t j = 0; j < c; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm += r(i, j) * r(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    std::vector<double> v(m - j);
    for (std::size_t i = j; i < m; ++i) v[i - j] = r(i, j);
    const double alpha = v[0] >= 0.0 ? -norm : norm;
    v[0] -= alpha;
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    vnorm = std::sqrt(vnorm);
    if (vnorm == 0.0) continue;
    for (double& x : v) x /= vnorm;
    for (std::size_t col = j; col < c; ++col) {
      double dot = 0.0;
      for (std::size_t i = j; i < m; ++i) dot += v[i - j] * r(i, col);
      for (std::size_t i = j; i < m; ++i) r(i, col) -= 2.0 * dot * v[i - j];
    }
    reflectors[j] = std::move(v);
  }
  RealMatrix q(m, c);
  for (std::size_t j = 0; j < c; ++j) q(j, j) = 1.0;
  for (std::size_t jj = c; jj-- > 0;) {
    const auto& v = reflectors[jj];
    if (v.empty()) continue;
    for (std::size_t col = 0; col < c; ++col) {
      double dot = 0.0;
      for (std::size_t i = jj; i < m; ++i) dot += v[i - jj] * q(i, col);
      for (std::size_t i = jj; i < m; ++i) q(i, col) -= 2.0 * dot * v[i - jj];
    }
  }
  return q;
}

/// Gaussian-sketch range finder with subspace (power) iteration, followed by
/// an exact SVD of the projected matrix. Deterministic given `seed`.
inline LowRankFactor randomized_range_lra(const RealMatrix& a, std::size_t k, std::size_t oversample,
                                          std::size_t power_iters, std::uint64_t seed) {
  const std::size_t mn = std::min(a.rows(), a.cols());
  if (k < 1 || k > mn) throw ParameterError("k", "randomized_range_lra requires 1 <= k <= min(rows, cols)");
  if (k + oversample > mn) throw ParameterError("oversample", "k + oversample exceeds min(rows, cols)");
  const std::size_t l = k + oversample;
  std::mt19937_64 rng(seed);
  const RealMatrix omega = gaussian_matrix(a.cols(), l, rng);
  RealMatrix q = orthonormal_basis(multiply(a, omega));
  for (std::size_t it = 0; it < power_iters; ++it) {
    const RealMatrix z = orthonormal_basis(multiply_tn(a, q));
    q = orthonormal_basis(multiply(a, z));
  }
  const RealMatrix b = multiply_tn(q, a);  // l x cols
  const Svd d = svd(b);
  LowRankFactor f{RealMatrix(a.rows(), k), RealMatrix(a.cols(), k), k};
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < l; ++t) s += q(i, t) * d.U(t, c);
      f.U(i, c) = s * d.s[c];
    }
    for (std::size_t j = 0; j < a.cols(); ++j) f.V(j, c) = d.V(j, c);
  }
  return f;
}

/// Sum over cells with W = 1 of g(|A - L|).
inline double masked_cost(const RealMatrix& a, const BitMatrix& w, const LowRankFactor& l, const NormKind& g) {
  if (a.rows() != w.rows() || a.cols() != w.cols() || a.rows() != l.rows() || a.cols() != l.cols())
    throw ShapeError("masked_cost: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (w(i, j)) s += g(a(i, j) - l.value(i, j));
  return s;
}

inline double masked_cost(const RealMatrix& a, const BitMatrix& w, const LowRankFactor& l) {
  return masked_cost(a, w, l, NormKind::squared_frobenius());
}

/// ||A - L||_F^2 over all cells.
inline double residual_sq(const RealMatrix& a, const LowRankFactor& l) {
  if (a.rows() != l.rows() || a.cols() != l.cols()) throw ShapeError("residual_sq: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - l.value(i, j);
      s += d * d;
    }
  return s;
}

/// Solves X * G = M for X where G is symmetric PSD, through a truncated
/// eigen-pseudoinverse. This is an exact least-squares minimizer when G is a
/// Gram matrix K^T K and M = Y K. Sets *truncated when a direction was dropped.
inline RealMatrix solve_gram(const RealMatrix& gram, const RealMatrix& rhs, bool* truncated = nullptr,
                             double rel_cutoff = 1e-12) {
  const std::size_t r = gram.rows();
  if (gram.cols() != r || rhs.cols() != r) throw ShapeError("solve_gram: shape mismatch");
  RealMatrix out(rhs.rows(), r);
  if (r == 0) return out;
  const Svd d = svd(gram);
  const double cut = d.s.front() * rel_cutoff;
  // pinv(G) = V diag(1/s) U^T over retained directions.
  RealMatrix pinv(r, r);
  bool dropped = false;
  for (std::size_t c = 0; c < r; ++c) {
    if (!(d.s[c] > cut) || d.s[c] == 0.0) {
      dropped = true;
      continue;
    }
    const double inv = 1.0 / d.s[c];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) pinv(i, j) += d.V(i, c) * inv * d.U(j, c);
  }
  if (truncated != nullptr) *truncated = *truncated || dropped;
  return multiply(rhs, pinv);
}

}  // namespace mlra
