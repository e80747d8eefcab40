#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mlra/bit_matrix.hpp"
#include "mlra/error.hpp"
#include "mlra/masks.hpp"
#include "mlra/protocol_params.hpp"

namespace mlra {

// ---------------------------------------------------------------------------
// Shared randomness

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Carter-Wegman hash ((a x + b) mod P) mod B with P = 2^61 - 1, a != 0.
/// For x != y the collision probability over (a, b) is at most 1 / B.
/// When B covers the whole key range the key itself is used (perfect hashing).
class UniversalHash {
  __extension__ using u128 = unsigned __int128;

 public:
  static constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

  UniversalHash() = default;
  UniversalHash(std::mt19937_64& rng, std::uint64_t buckets, std::uint64_t key_range)
      : buckets_(buckets), identity_(buckets >= key_range) {
    std::uniform_int_distribution<std::uint64_t> da(1, kPrime - 1);
    std::uniform_int_distribution<std::uint64_t> db(0, kPrime - 1);
    a_ = da(rng);
    b_ = db(rng);
  }

  std::uint64_t buckets() const noexcept { return buckets_; }
  bool identity() const noexcept { return identity_; }

  std::uint64_t operator()(std::uint64_t x) const noexcept {
    if (identity_) return x;
    const u128 v = static_cast<u128>(a_) * (x % kPrime) + b_;
    return static_cast<std::uint64_t>(v % kPrime) % buckets_;
  }

 private:
  std::uint64_t a_ = 1;
  std::uint64_t b_ = 0;
  std::uint64_t buckets_ = 1;
  bool identity_ = true;
};

// ---------------------------------------------------------------------------
// Rectangles, partitions, covers

/// Combinatorial rectangle S_1 x ... x S_Order with an output label.
template <std::size_t Order>
struct BasicRectangle {
  std::array<std::vector<std::size_t>, Order> sides;
  bool label = false;

  std::size_t cell_count() const noexcept {
    std::size_t c = 1;
    for (const auto& s : sides) c *= s.size();
    return c;
  }
};

using Rectangle = BasicRectangle<2>;
using Rectangle3 = BasicRectangle<3>;

/// Labeled rectangles induced by one run of a protocol with fixed shared randomness.
template <std::size_t Order>
struct BasicPartition {
  std::vector<BasicRectangle<Order>> rectangles;
  std::size_t n = 0;
  std::string family;
  std::string params;
  std::uint64_t seed = 0;
  std::size_t one_count = 0;
};

using PartitionSample = BasicPartition<2>;
using PartitionSample3 = BasicPartition<3>;

/// Possibly overlapping 1-labeled rectangles covering the support of f.
struct Cover {
  std::vector<Rectangle> rectangles;
  std::size_t n = 0;
  std::string kind;
};

// ---------------------------------------------------------------------------
// Protocol specifications

namespace family {

/// One-way equality: Alice sends a bucket of her class, Bob answers "differs".
/// `classes` maps each index to a class id (identity when empty).
struct EqualityHash {
  double delta = 1.0;
  std::vector<std::size_t> classes;
};

/// Equality modulo p. Without delta Alice sends x mod p exactly (zero error).
struct EqModP {
  std::size_t p = 1;
  std::optional<double> delta;
};

/// Bob sends a bucket of his column class; Alice outputs 0 iff the bucket is
/// among the hashed zero-set of her row class.
struct SparseSetEq {
  std::vector<std::vector<std::size_t>> zero_sets;
  std::size_t t = 0;
  double delta = 1.0;
  std::vector<std::size_t> row_class;  // identity when empty
  std::vector<std::size_t> col_class;  // identity when empty
};

/// W(x, y) = [x > y].
struct GreaterThan {
  double delta = 1.0;
};

struct BandedGt {
  std::size_t p = 1;
  double delta = 1.0;
};

struct Banded2dGt {
  std::size_t p = 1;
  double delta = 1.0;
};

struct MonotoneGt {
  std::vector<std::size_t> prefix_lengths;
  double delta = 1.0;
};

/// Three-party "not all equal".
struct Neq3 {
  double delta = 1.0;
};

/// Zero-communication protocol with a fixed output (all-ones or all-zeros masks).
struct Constant {
  bool value = true;
};

}  // namespace family

using ProtocolFamily = std::variant<family::EqualityHash, family::EqModP, family::SparseSetEq, family::GreaterThan,
                                    family::BandedGt, family::Banded2dGt, family::MonotoneGt, family::Neq3,
                                    family::Constant>;

struct ProtocolSpec {
  ProtocolFamily family;
  std::size_t n = 0;
};

inline std::string family_name(const ProtocolSpec& s) {
  struct V {
    std::string operator()(const family::EqualityHash&) const { return "equality-hash"; }
    std::string operator()(const family::EqModP&) const { return "eq-mod-p"; }
    std::string operator()(const family::SparseSetEq&) const { return "sparse-set-eq"; }
    std::string operator()(const family::GreaterThan&) const { return "greater-than"; }
    std::string operator()(const family::BandedGt&) const { return "banded-gt"; }
    std::string operator()(const family::Banded2dGt&) const { return "banded2d-gt"; }
    std::string operator()(const family::MonotoneGt&) const { return "monotone-gt"; }
    std::string operator()(const family::Neq3&) const { return "neq3-multiparty"; }
    std::string operator()(const family::Constant&) const { return "constant"; }
  };
  return std::visit(V{}, s.family);
}

inline std::string family_params(const ProtocolSpec& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::EqModP>) {
          os << "p=" << f.p;
          if (f.delta) os << ",delta=" << *f.delta;
        } else if constexpr (std::is_same_v<T, family::SparseSetEq>) {
          os << "t=" << f.t << ",delta=" << f.delta;
        } else if constexpr (std::is_same_v<T, family::BandedGt> || std::is_same_v<T, family::Banded2dGt>) {
          os << "p=" << f.p << ",delta=" << f.delta;
        } else if constexpr (std::is_same_v<T, family::Constant>) {
          os << "value=" << (f.value ? 1 : 0);
        } else {
          os << "delta=" << f.delta;
        }
      },
      s.family);
  return os.str();
}

/// True for families that never output 1 where the target f is 0.
inline bool is_one_sided(const ProtocolSpec& s) {
  return std::holds_alternative<family::EqualityHash>(s.family) || std::holds_alternative<family::EqModP>(s.family) ||
         std::holds_alternative<family::SparseSetEq>(s.family) || std::holds_alternative<family::Neq3>(s.family) ||
         std::holds_alternative<family::Constant>(s.family);
}

/// Nominal per-entry error delta of the family (0 for exact protocols).
inline double nominal_delta(const ProtocolSpec& s) {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::EqModP>) {
          return f.delta ? *f.delta : 0.0;
        } else if constexpr (std::is_same_v<T, family::Constant>) {
          return 0.0;
        } else {
          return f.delta;
        }
      },
      s.family);
}

/// Declared cap on the number of rectangles one sample may have.
inline std::uint64_t rectangle_cap(const ProtocolSpec& s) {
  const std::size_t n = s.n;
  return std::visit(
      [n](const auto& f) -> std::uint64_t {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::EqualityHash>) {
          return 2 * equality_buckets(f.delta);
        } else if constexpr (std::is_same_v<T, family::EqModP>) {
          return f.delta ? 2 * std::min<std::uint64_t>(f.p, equality_buckets(*f.delta)) : 2 * f.p;
        } else if constexpr (std::is_same_v<T, family::SparseSetEq>) {
          return 2 * sparse_set_buckets(f.t, f.delta);
        } else if constexpr (std::is_same_v<T, family::GreaterThan>) {
          return cap_gt(n, f.delta);
        } else if constexpr (std::is_same_v<T, family::BandedGt>) {
          return cap_banded(n, f.p, f.delta);
        } else if constexpr (std::is_same_v<T, family::Banded2dGt>) {
          return cap_banded2d(detail::exact_sqrt(n), f.p, f.delta);
        } else if constexpr (std::is_same_v<T, family::MonotoneGt>) {
          return cap_monotone(n, f.delta);
        } else if constexpr (std::is_same_v<T, family::Neq3>) {
          return 4 * neq3_buckets(f.delta);
        } else {
          return 1;
        }
      },
      s.family);
}

// ---------------------------------------------------------------------------
// Protocol execution

struct Transcript {
  std::vector<std::uint64_t> messages;
  bool output = false;
};

namespace detail {

inline std::size_t class_of(const std::vector<std::size_t>& classes, std::size_t x) {
  return classes.empty() ? x : classes[x];
}

inline std::size_t class_count(const std::vector<std::size_t>& classes, std::size_t n) {
  if (classes.empty()) return n;
  return classes.empty() ? 0 : *std::max_element(classes.begin(), classes.end()) + 1;
}

/// One randomized greater-than call between a sender (holding a) and a
/// responder (holding b); appends its messages to `t` and returns [a > b].
class GtCall {
 public:
  GtCall() = default;
  GtCall(const GtParams& params, std::mt19937_64& rng) : params_(params) {
    const std::uint64_t buckets = std::uint64_t{1} << params_.hash_bits;
    for (unsigned r = 0; r < params_.rounds; ++r) hashes_.emplace_back(rng, buckets, kCountSaturated);
  }

  const GtParams& params() const noexcept { return params_; }

  bool run(std::uint64_t a, std::uint64_t b, Transcript& t) const {
    const unsigned bits = params_.value_bits;
    unsigned lo = 0;
    unsigned hi = bits;
    unsigned round = 0;
    while (lo < hi) {
      const unsigned mid = (lo + hi + 1) / 2;
      const std::uint64_t pa = a >> (bits - mid);
      const std::uint64_t pb = b >> (bits - mid);
      std::uint64_t ma = pa;
      std::uint64_t mb = pb;
      if (mid > params_.hash_bits) {
        ma = hashes_[round](pa);
        mb = hashes_[round](pb);
      }
      const bool eq = ma == mb;
      t.messages.push_back(ma);
      t.messages.push_back(eq ? 1 : 0);
      if (eq) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
      ++round;
    }
    if (lo == bits) return false;
    const std::uint64_t abit = (a >> (bits - 1 - lo)) & 1U;
    const std::uint64_t bbit = (b >> (bits - 1 - lo)) & 1U;
    t.messages.push_back(abit);
    t.messages.push_back(bbit);
    return abit == 1 && bbit == 0;
  }

 private:
  GtParams params_;
  std::vector<UniversalHash> hashes_;
};

}  // namespace detail

/// A protocol with its shared randomness fixed by a seed. Evaluation is a
/// pure function of (spec, seed, cell).
class ProtocolRun {
 public:
  ProtocolRun(const ProtocolSpec& spec, std::uint64_t seed) : spec_(&spec) {
    std::mt19937_64 rng(seed);
    std::visit([&](const auto& f) { init(f, rng); }, spec.family);
  }

  std::size_t order() const noexcept { return std::holds_alternative<family::Neq3>(spec_->family) ? 3 : 2; }

  Transcript run(std::size_t x, std::size_t y) const {
    Transcript t;
    std::visit([&](const auto& f) { exec(f, x, y, t); }, spec_->family);
    return t;
  }

  Transcript run3(std::size_t x1, std::size_t x2, std::size_t x3) const {
    const auto* f = std::get_if<family::Neq3>(&spec_->family);
    if (f == nullptr) throw ParameterError("family", "run3 requires the neq3-multiparty family");
    Transcript t;
    const std::uint64_t m = hash_(x1);
    const bool e2 = hash_(x2) == m;
    const bool e3 = hash_(x3) == m;
    t.messages = {m, e2 ? 1U : 0U, e3 ? 1U : 0U};
    t.output = !(e2 && e3);
    return t;
  }

 private:
  void init(const family::EqualityHash& f, std::mt19937_64& rng) {
    check_delta(f.delta);
    if (!f.classes.empty() && f.classes.size() != spec_->n) throw ParameterError("classes", "need one class per index");
    hash_ = UniversalHash(rng, equality_buckets(f.delta), detail::class_count(f.classes, spec_->n));
  }
  void init(const family::EqModP& f, std::mt19937_64& rng) {
    if (f.p < 1) throw ParameterError("p", "must be >= 1");
    if (f.delta) hash_ = UniversalHash(rng, equality_buckets(*f.delta), f.p);
  }
  void init(const family::SparseSetEq& f, std::mt19937_64& rng) {
    check_delta(f.delta);
    const std::size_t ncols = detail::class_count(f.col_class, spec_->n);
    if (!f.row_class.empty() && f.row_class.size() != spec_->n) throw ParameterError("row_class", "size != n");
    if (!f.col_class.empty() && f.col_class.size() != spec_->n) throw ParameterError("col_class", "size != n");
    if (f.zero_sets.size() != detail::class_count(f.row_class, spec_->n))
      throw ParameterError("zero_sets", "need one zero set per row class");
    for (const auto& z : f.zero_sets)
      if (z.size() > f.t) throw ParameterError("zero_sets", "zero set larger than t");
    hash_ = UniversalHash(rng, sparse_set_buckets(f.t, f.delta), ncols);
  }
  void init(const family::GreaterThan& f, std::mt19937_64& rng) {
    gt_.emplace_back(gt_params(spec_->n, f.delta), rng);
  }
  void init(const family::BandedGt& f, std::mt19937_64& rng) {
    if (f.p < 1) throw ParameterError("p", "must be >= 1");
    const auto params = gt_params(spec_->n + f.p - 1, f.delta / 2.0);
    gt_.emplace_back(params, rng);
    gt_.emplace_back(params, rng);
  }
  void init(const family::Banded2dGt& f, std::mt19937_64& rng) {
    side_ = detail::exact_sqrt(spec_->n);
    if (side_ == 0) throw ParameterError("n", "banded2d-gt requires n to be a perfect square");
    if (f.p < 1) throw ParameterError("p", "must be >= 1");
    const auto coord = gt_params(side_, f.delta / 3.0);
    gt_.emplace_back(coord, rng);
    gt_.emplace_back(coord, rng);
    gt_.emplace_back(gt_params(4 * side_ + f.p, f.delta / 3.0), rng);
  }
  void init(const family::MonotoneGt& f, std::mt19937_64& rng) {
    if (f.prefix_lengths.size() != spec_->n) throw ParameterError("prefix_lengths", "size != n");
    gt_.emplace_back(gt_params(spec_->n + 1, f.delta), rng);
  }
  void init(const family::Neq3& f, std::mt19937_64& rng) {
    hash_ = UniversalHash(rng, neq3_buckets(f.delta), spec_->n);
  }
  void init(const family::Constant&, std::mt19937_64&) {}

  void exec(const family::EqualityHash& f, std::size_t x, std::size_t y, Transcript& t) const {
    const std::uint64_t a = hash_(detail::class_of(f.classes, x));
    const bool differ = hash_(detail::class_of(f.classes, y)) != a;
    t.messages = {a, differ ? 1U : 0U};
    t.output = differ;
  }
  void exec(const family::EqModP& f, std::size_t x, std::size_t y, Transcript& t) const {
    std::uint64_t a = x % f.p;
    std::uint64_t b = y % f.p;
    if (f.delta) {
      a = hash_(a);
      b = hash_(b);
    }
    const bool differ = a != b;
    t.messages = {a, differ ? 1U : 0U};
    t.output = differ;
  }
  void exec(const family::SparseSetEq& f, std::size_t x, std::size_t y, Transcript& t) const {
    const std::uint64_t bucket = hash_(detail::class_of(f.col_class, y));
    bool hit = false;
    for (std::size_t z : f.zero_sets[detail::class_of(f.row_class, x)]) {
      if (hash_(z) == bucket) {
        hit = true;
        break;
      }
    }
    t.messages = {bucket, hit ? 0U : 1U};
    t.output = !hit;
  }
  void exec(const family::GreaterThan&, std::size_t x, std::size_t y, Transcript& t) const {
    t.output = gt_[0].run(x, y, t);
  }
  void exec(const family::BandedGt& f, std::size_t x, std::size_t y, Transcript& t) const {
    // |x - y| >= p  <=>  x > y + p - 1  or  y > x + p - 1
    if (gt_[0].run(x, y + f.p - 1, t)) {
      t.output = true;
      return;
    }
    t.output = gt_[1].run(y, x + f.p - 1, t);
  }
  void exec(const family::Banded2dGt& f, std::size_t x, std::size_t y, Transcript& t) const {
    const auto s = static_cast<std::int64_t>(side_);
    const auto i1 = static_cast<std::int64_t>(x) / s, i2 = static_cast<std::int64_t>(x) % s;
    const auto j1 = static_cast<std::int64_t>(y) / s, j2 = static_cast<std::int64_t>(y) % s;
    const std::int64_t s1 = gt_[0].run(i1, j1, t) ? 1 : -1;
    const std::int64_t s2 = gt_[1].run(i2, j2, t) ? 1 : -1;
    // d1 + d2 >= p  <=>  (s1 i1 + s2 i2) - (s1 j1 + s2 j2) >= p, shifted to be nonnegative.
    const auto a = static_cast<std::uint64_t>(s1 * i1 + s2 * i2 + 2 * s);
    const auto b = static_cast<std::uint64_t>(s1 * j1 + s2 * j2 + 2 * s + static_cast<std::int64_t>(f.p) - 1);
    t.output = gt_[2].run(a, b, t);
  }
  void exec(const family::MonotoneGt& f, std::size_t x, std::size_t y, Transcript& t) const {
    t.output = gt_[0].run(f.prefix_lengths[x], y, t);
  }
  void exec(const family::Neq3&, std::size_t, std::size_t, Transcript&) const {
    throw ParameterError("family", "neq3-multiparty is a three-party protocol; use run3");
  }
  void exec(const family::Constant& f, std::size_t, std::size_t, Transcript& t) const { t.output = f.value; }

  const ProtocolSpec* spec_;
  UniversalHash hash_;
  std::vector<detail::GtCall> gt_;
  std::size_t side_ = 0;
};

inline constexpr std::size_t kEnumerationCap = 4096;
inline constexpr std::size_t kEnumerationCap3 = 256;

namespace detail {

struct TranscriptHash {
  std::size_t operator()(const std::vector<std::uint64_t>& v) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL ^ v.size();
    for (auto x : v) h = splitmix64(h ^ x);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/// Runs the protocol on every input pair under the seed's shared randomness
/// and groups cells by full transcript. Each class is checked to be a
/// combinatorial rectangle with a single output label.
inline PartitionSample sample_partition(const ProtocolSpec& spec, std::uint64_t seed,
                                        std::size_t max_n = kEnumerationCap) {
  const std::size_t n = spec.n;
  if (n == 0) throw ParameterError("n", "must be >= 1");
  if (n > max_n) throw ResourceError("sample_partition: n exceeds the enumeration cap");
  const ProtocolRun run(spec, seed);
  if (run.order() != 2) throw ParameterError("family", "use multiparty_partition for three-party protocols");

  struct Class {
    Rectangle rect;
    std::size_t last_row = 0;
    std::size_t cursor = 0;
  };
  std::vector<Class> classes;
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, detail::TranscriptHash> index;

  auto fail = [](const char* what) { throw ValidationError(std::string("sample_partition: ") + what); };
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      Transcript t = run.run(x, y);
      auto [it, fresh] = index.try_emplace(std::move(t.messages), classes.size());
      if (fresh) {
        Class c;
        c.rect.sides[0] = {x};
        c.rect.sides[1] = {y};
        c.rect.label = t.output;
        c.last_row = x;
        c.cursor = 1;
        classes.push_back(std::move(c));
        continue;
      }
      Class& c = classes[it->second];
      if (c.rect.label != t.output) fail("transcript class carries two labels");
      auto& rows = c.rect.sides[0];
      auto& cols = c.rect.sides[1];
      if (x == rows.front()) {
        cols.push_back(y);
        ++c.cursor;
        continue;
      }
      if (x != c.last_row) {
        if (c.cursor != cols.size()) fail("transcript class is not a rectangle");
        rows.push_back(x);
        c.last_row = x;
        c.cursor = 0;
      }
      if (c.cursor >= cols.size() || cols[c.cursor] != y) fail("transcript class is not a rectangle");
      ++c.cursor;
    }
  }
  PartitionSample out;
  out.n = n;
  out.family = family_name(spec);
  out.params = family_params(spec);
  out.seed = seed;
  for (auto& c : classes) {
    if (c.cursor != c.rect.sides[1].size()) fail("transcript class is not a rectangle");
    out.one_count += c.rect.label ? 1 : 0;
    out.rectangles.push_back(std::move(c.rect));
  }
  return out;
}

/// Three-party analogue of sample_partition for neq3-multiparty.
inline PartitionSample3 multiparty_partition(const ProtocolSpec& spec, std::uint64_t seed,
                                             std::size_t max_n = kEnumerationCap3) {
  if (!std::holds_alternative<family::Neq3>(spec.family))
    throw ParameterError("family", "multiparty_partition requires neq3-multiparty");
  const std::size_t n = spec.n;
  if (n == 0) throw ParameterError("n", "must be >= 1");
  if (n > max_n) throw ResourceError("multiparty_partition: n exceeds the enumeration cap");
  const ProtocolRun run(spec, seed);

  struct Class {
    std::array<std::vector<char>, 3> seen;
    std::size_t cells = 0;
    bool label = false;
  };
  std::vector<Class> classes;
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, detail::TranscriptHash> index;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        Transcript t = run.run3(a, b, c);
        auto [it, fresh] = index.try_emplace(std::move(t.messages), classes.size());
        if (fresh) {
          Class cl;
          for (auto& s : cl.seen) s.assign(n, 0);
          cl.label = t.output;
          classes.push_back(std::move(cl));
        }
        Class& cl = classes[it->second];
        if (cl.label != t.output) throw ValidationError("multiparty_partition: transcript class carries two labels");
        cl.seen[0][a] = cl.seen[1][b] = cl.seen[2][c] = 1;
        ++cl.cells;
      }
  PartitionSample3 out;
  out.n = n;
  out.family = family_name(spec);
  out.params = family_params(spec);
  out.seed = seed;
  for (auto& cl : classes) {
    Rectangle3 r;
    r.label = cl.label;
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t i = 0; i < n; ++i)
        if (cl.seen[d][i]) r.sides[d].push_back(i);
    // cells lie inside the product of their projections; equal counts force equality.
    if (r.cell_count() != cl.cells) throw ValidationError("multiparty_partition: transcript class is not a rectangle");
    out.one_count += r.label ? 1 : 0;
    out.rectangles.push_back(std::move(r));
  }
  return out;
}

/// W_Pi: the protocol's output at every cell.
inline Mask protocol_matrix(const ProtocolSpec& spec, std::uint64_t seed, std::size_t max_n = kEnumerationCap) {
  if (spec.n > max_n) throw ResourceError("protocol_matrix: n exceeds the enumeration cap");
  const ProtocolRun run(spec, seed);
  BitMatrix bits(spec.n, spec.n);
  for (std::size_t x = 0; x < spec.n; ++x)
    for (std::size_t y = 0; y < spec.n; ++y) bits.set(x, y, run.run(x, y).output);
  return Mask::from_bitmap(std::move(bits));
}

/// The labels of a partition painted onto the grid.
inline BitMatrix partition_labels(const PartitionSample& p) {
  BitMatrix bits(p.n, p.n);
  for (const auto& r : p.rectangles)
    if (r.label)
      for (std::size_t x : r.sides[0])
        for (std::size_t y : r.sides[1]) bits.set(x, y, true);
  return bits;
}

// ---------------------------------------------------------------------------
// Protocol specs derived from masks

/// 1-sided sparse-set route for an arbitrary square mask: zero sets are read
/// from the bitmap and t is the largest row zero count.
inline ProtocolSpec sparse_route_spec(const Mask& w, double delta) {
  family::SparseSetEq f;
  f.delta = delta;
  f.zero_sets.resize(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (!w(i, j)) f.zero_sets[i].push_back(j);
  f.t = std::max<std::size_t>(1, w.max_row_zeros());
  return {f, w.rows()};
}

/// The protocol this library uses to certify the mask's pattern: 1-sided
/// equality-type protocols for (block) diagonal, (block) sparse and Toeplitz
/// masks; greater-than compositions for banded, 2-D banded and monotone masks.
inline ProtocolSpec spec_for_mask(const Mask& w, double delta) {
  check_delta(delta);
  const std::size_t n = w.n();
  const auto& p = w.pattern();
  if (std::holds_alternative<pattern::AllOnes>(p)) return {family::Constant{true}, n};
  if (std::holds_alternative<pattern::Diagonal>(p)) return {family::EqualityHash{delta, {}}, n};
  if (const auto* bd = std::get_if<pattern::BlockDiagonal>(&p)) {
    return {family::EqualityHash{delta, detail::block_index(bd->blocks, n, "blocks")}, n};
  }
  if (const auto* sp = std::get_if<pattern::Sparse>(&p)) {
    return {family::SparseSetEq{sp->zero_sets, std::max<std::size_t>(1, sp->t), delta, {}, {}}, n};
  }
  if (const auto* bs = std::get_if<pattern::BlockSparse>(&p)) {
    return {family::SparseSetEq{bs->block_zero_sets, std::max<std::size_t>(1, bs->t), delta,
                                detail::block_index(bs->row_blocks, n, "row_blocks"),
                                detail::block_index(bs->col_blocks, n, "col_blocks")},
            n};
  }
  if (const auto* tp = std::get_if<pattern::ToeplitzModP>(&p)) {
    if (tp->p <= equality_buckets(delta)) return {family::EqModP{tp->p, std::nullopt}, n};
    return {family::EqModP{tp->p, delta}, n};
  }
  if (const auto* bp = std::get_if<pattern::Banded>(&p)) return {family::BandedGt{bp->p, delta}, n};
  if (const auto* b2 = std::get_if<pattern::Banded2d>(&p)) return {family::Banded2dGt{b2->p, delta}, n};
  if (const auto* mp = std::get_if<pattern::Monotone>(&p)) return {family::MonotoneGt{mp->prefix_lengths, delta}, n};
  return sparse_route_spec(w, delta);
}

// ---------------------------------------------------------------------------
// Error rates

struct ErrorRates {
  double rate_on_ones = 0.0;
  double rate_on_zeros = 0.0;
  std::size_t samples_on_ones = 0;
  std::size_t samples_on_zeros = 0;
  std::size_t errors_on_ones = 0;
  std::size_t errors_on_zeros = 0;
};

/// Monte Carlo over (cell, seed) pairs. Trials alternate between a uniformly
/// drawn 1-cell and a uniformly drawn 0-cell of W (when both exist), each with
/// a fresh protocol seed, so both conditional rates are estimated.
inline ErrorRates empirical_error_rates(const ProtocolSpec& spec, const Mask& w, std::size_t trials,
                                        std::uint64_t seed) {
  if (w.rows() != spec.n || w.cols() != spec.n) throw ShapeError("empirical_error_rates: mask size != spec.n");
  std::vector<std::pair<std::size_t, std::size_t>> ones;
  std::vector<std::pair<std::size_t, std::size_t>> zeros;
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t j = 0; j < spec.n; ++j) (w(i, j) ? ones : zeros).emplace_back(i, j);

  ErrorRates r;
  std::mt19937_64 rng(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const bool pick_zero = !zeros.empty() && (ones.empty() || trial % 2 == 1);
    const auto& pool = pick_zero ? zeros : ones;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const auto [x, y] = pool[pick(rng)];
    const ProtocolRun run(spec, splitmix64(seed ^ splitmix64(trial)));
    const bool out = run.run(x, y).output;
    if (pick_zero) {
      ++r.samples_on_zeros;
      r.errors_on_zeros += out ? 1 : 0;
    } else {
      ++r.samples_on_ones;
      r.errors_on_ones += out ? 0 : 1;
    }
  }
  if (r.samples_on_ones > 0) r.rate_on_ones = static_cast<double>(r.errors_on_ones) / r.samples_on_ones;
  if (r.samples_on_zeros > 0) r.rate_on_zeros = static_cast<double>(r.errors_on_zeros) / r.samples_on_zeros;
  return r;
}

// ---------------------------------------------------------------------------
// Nondeterministic covers

namespace cover_kind {
/// NEQ on log2(n)-bit strings: guess a differing bit position and its value.
struct NeqBits {};
/// NEQ on block ids: the same guess made on the bits of the block index.
struct NeqBlocks {
  std::vector<std::vector<std::size_t>> blocks;
};
/// Not-disjoint: guess a coordinate where both strings have a one.
struct DisjCoords {};
}  // namespace cover_kind

using CoverKind = std::variant<cover_kind::NeqBits, cover_kind::NeqBlocks, cover_kind::DisjCoords>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline Cover nondet_cover(const CoverKind& kind, std::size_t n) {
  if (n == 0) throw ParameterError("n", "must be >= 1");
  Cover c;
  c.n = n;
  auto add = [&](std::vector<std::size_t> rows, std::vector<std::size_t> cols) {
    if (rows.empty() || cols.empty()) return;
    Rectangle r;
    r.sides[0] = std::move(rows);
    r.sides[1] = std::move(cols);
    r.label = true;
    c.rectangles.push_back(std::move(r));
  };
  auto bit_cover = [&](const std::vector<std::size_t>& id, unsigned bits) {
    for (unsigned i = 0; i < bits; ++i)
      for (unsigned b = 0; b < 2; ++b) {
        std::vector<std::size_t> rows, cols;
        for (std::size_t x = 0; x < n; ++x) {
          const unsigned v = (id[x] >> i) & 1U;
          if (v == b) rows.push_back(x);
          if (v != b) cols.push_back(x);
        }
        add(std::move(rows), std::move(cols));
      }
  };
  if (std::holds_alternative<cover_kind::NeqBits>(kind)) {
    if (!is_power_of_two(n)) throw ParameterError("n", "neq-bits requires n to be a power of two");
    std::vector<std::size_t> id(n);
    for (std::size_t x = 0; x < n; ++x) id[x] = x;
    bit_cover(id, ceil_log2(n));
    c.kind = "neq-bits";
  } else if (const auto* nb = std::get_if<cover_kind::NeqBlocks>(&kind)) {
    const auto id = detail::block_index(nb->blocks, n, "blocks");
    bit_cover(id, ceil_log2(nb->blocks.size()));
    c.kind = "neq-blocks";
  } else {
    if (!is_power_of_two(n)) throw ParameterError("n", "disj-coords requires n to be a power of two");
    for (unsigned j = 0; j < ceil_log2(n); ++j) {
      std::vector<std::size_t> side;
      for (std::size_t x = 0; x < n; ++x)
        if ((x >> j) & 1U) side.push_back(x);
      add(side, side);
    }
    c.kind = "disj-coords";
  }
  return c;
}

/// The communication matrix each cover kind targets.
inline Mask cover_target(const CoverKind& kind, std::size_t n) {
  if (std::holds_alternative<cover_kind::NeqBits>(kind)) return make_mask(pattern::Diagonal{}, n);
  if (const auto* nb = std::get_if<cover_kind::NeqBlocks>(&kind)) return make_mask(pattern::BlockDiagonal{nb->blocks}, n);
  BitMatrix bits(n, n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) bits.set(x, y, (x & y) != 0);
  return Mask::from_bitmap(std::move(bits));
}

/// True iff the rectangles avoid W's zeros and their union is W's support.
inline bool cover_matches(const Cover& c, const BitMatrix& w) {
  BitMatrix covered(w.rows(), w.cols());
  for (const auto& r : c.rectangles) {
    if (!r.label) return false;
    for (std::size_t x : r.sides[0])
      for (std::size_t y : r.sides[1]) {
        if (x >= w.rows() || y >= w.cols() || !w(x, y)) return false;
        covered.set(x, y, true);
      }
  }
  return covered == w;
}

// ---------------------------------------------------------------------------
// Partition dump: header line, then "label<TAB>rows<TAB>cols[<TAB>third]".

namespace detail {
inline void write_index_list(std::ostream& os, const std::vector<std::size_t>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
}
}  // namespace detail

template <std::size_t Order>
void write_partition(std::ostream& os, const BasicPartition<Order>& p) {
  os << "# partition family=" << p.family << " params=" << p.params << " n=" << p.n << " seed=" << p.seed
     << " rectangles=" << p.rectangles.size() << " ones=" << p.one_count << "\n";
  for (const auto& r : p.rectangles) {
    os << (r.label ? 1 : 0);
    for (const auto& side : r.sides) {
      os << '\t';
      detail::write_index_list(os, side);
    }
    os << "\n";
  }
}

inline void write_cover(std::ostream& os, const Cover& c) {
  os << "# cover kind=" << c.kind << " n=" << c.n << " rectangles=" << c.rectangles.size() << "\n";
  for (const auto& r : c.rectangles) {
    os << 1 << '\t';
    detail::write_index_list(os, r.sides[0]);
    os << '\t';
    detail::write_index_list(os, r.sides[1]);
    os << "\n";
  }
}

}  // namespace mlra
