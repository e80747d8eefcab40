#pragma once

// File formats. All binary formats are little-endian:
//   MLRA1  real matrix   magic, u64 rows, u64 cols, f64 values row-major
//   MLRB1  binary matrix magic, u64 rows, u64 cols, one byte (0/1) per entry
//   MLRT1  real tensor   magic, u64 n1, u64 n2, u64 n3, f64 values lexicographic
// Mask descriptors and sweep configs are key = value text.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mlra/bit_matrix.hpp"
#include "mlra/error.hpp"
#include "mlra/linalg.hpp"
#include "mlra/masks.hpp"
#include "mlra/tensor.hpp"

namespace mlra::io {

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError(path, "truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& is, const std::string& path) { return std::bit_cast<double>(get_u64(is, path)); }

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path, "cannot open for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path, std::string_view magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open for reading");
  std::string m(magic.size(), '\0');
  if (!is.read(m.data(), static_cast<std::streamsize>(m.size())) || m != magic)
    throw IoError(path, "bad magic, expected " + std::string(magic));
  return is;
}

inline void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw IoError(path, "write failed");
}

inline constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 32;

}  // namespace detail

inline void write_matrix(const std::string& path, const RealMatrix& a) {
  auto os = detail::open_out(path);
  os.write("MLRA1", 5);
  detail::put_u64(os, a.rows());
  detail::put_u64(os, a.cols());
  for (double x : a.values()) detail::put_f64(os, x);
  detail::finish(os, path);
}

inline RealMatrix read_matrix(const std::string& path) {
  auto is = detail::open_in(path, "MLRA1");
  const auto r = detail::get_u64(is, path);
  const auto c = detail::get_u64(is, path);
  if (r * c > detail::kMaxEntries) throw IoError(path, "implausible dimensions");
  std::vector<double> v(r * c);
  for (auto& x : v) x = detail::get_f64(is, path);
  RealMatrix a(r, c, std::move(v));
  if (!a.all_finite()) throw IoError(path, "non-finite entry");
  return a;
}

inline void write_bits(const std::string& path, const BitMatrix& b) {
  auto os = detail::open_out(path);
  os.write("MLRB1", 5);
  detail::put_u64(os, b.rows());
  detail::put_u64(os, b.cols());
  os.write(reinterpret_cast<const char*>(b.raw().data()), static_cast<std::streamsize>(b.raw().size()));
  detail::finish(os, path);
}

inline BitMatrix read_bits(const std::string& path) {
  auto is = detail::open_in(path, "MLRB1");
  const auto r = detail::get_u64(is, path);
  const auto c = detail::get_u64(is, path);
  if (r * c > detail::kMaxEntries) throw IoError(path, "implausible dimensions");
  std::vector<char> raw(r * c);
  if (!is.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw IoError(path, "truncated file");
  BitMatrix b(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const char v = raw[i * c + j];
      if (v != 0 && v != 1) throw IoError(path, "entries must be bytes 0 or 1");
      b.set(i, j, v == 1);
    }
  return b;
}

inline void write_tensor(const std::string& path, const Tensor3& t) {
  auto os = detail::open_out(path);
  os.write("MLRT1", 5);
  detail::put_u64(os, t.n1());
  detail::put_u64(os, t.n2());
  detail::put_u64(os, t.n3());
  for (double x : t.values()) detail::put_f64(os, x);
  detail::finish(os, path);
}

inline Tensor3 read_tensor(const std::string& path) {
  auto is = detail::open_in(path, "MLRT1");
  const auto a = detail::get_u64(is, path);
  const auto b = detail::get_u64(is, path);
  const auto c = detail::get_u64(is, path);
  if (a * b * c > detail::kMaxEntries) throw IoError(path, "implausible dimensions");
  std::vector<double> v(a * b * c);
  for (auto& x : v) x = detail::get_f64(is, path);
  return Tensor3(a, b, c, std::move(v));
}

// ---------------------------------------------------------------------------
// key = value text

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      auto piece = trim(s.substr(start, i - start));
      if (!piece.empty()) out.push_back(std::move(piece));
      start = i + 1;
    }
  }
  return out;
}

struct Section {
  std::string name;
  KeyValues values;
};

/// "[name]" headers followed by "key = value" lines; '#' and ';' start comments.
/// Lines before the first header land in a section with an empty name.
inline std::vector<Section> parse_sections(std::istream& in, const std::string& origin = "<input>") {
  std::vector<Section> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw IoError(origin, "line " + std::to_string(lineno) + ": unterminated section header");
      out.push_back({trim(std::string_view(t).substr(1, t.size() - 2)), {}});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw IoError(origin, "line " + std::to_string(lineno) + ": expected key = value");
    if (out.empty()) out.push_back({"", {}});
    out.back().values[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

inline std::vector<Section> read_sections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return parse_sections(in, path);
}

inline std::size_t to_count(const std::string& v, const char* field) {
  try {
    std::size_t pos = 0;
    if (v.empty() || !std::isdigit(static_cast<unsigned char>(v.front()))) throw ParameterError(field, "not an integer: " + v);
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw ParameterError(field, "not an integer: " + v);
    return static_cast<std::size_t>(x);
  } catch (const std::logic_error&) {
    throw ParameterError(field, "not an integer: " + v);
  }
}

inline double to_real(const std::string& v, const char* field) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw ParameterError(field, "not a number: " + v);
    return x;
  } catch (const std::logic_error&) {
    throw ParameterError(field, "not a number: " + v);
  }
}

inline std::vector<std::size_t> to_counts(const std::string& v, const char* field) {
  std::vector<std::size_t> out;
  for (const auto& piece : split(v, ',')) out.push_back(to_count(piece, field));
  return out;
}

inline std::vector<double> to_reals(const std::string& v, const char* field) {
  std::vector<double> out;
  for (const auto& piece : split(v, ',')) out.push_back(to_real(piece, field));
  return out;
}

/// Mask descriptor. Either multi-line "key = value" text or a single line
/// "banded p=4 n=64". Keys: pattern, n, p, t, blocks (block count), seed,
/// prefix (comma list), zero_sets (';'-separated comma lists), min_prefix.
inline KeyValues parse_mask_descriptor(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    std::string norm;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == '=') {
        while (!norm.empty() && std::isspace(static_cast<unsigned char>(norm.back()))) norm.pop_back();
        norm += '=';
        while (i + 1 < t.size() && std::isspace(static_cast<unsigned char>(t[i + 1]))) ++i;
      } else {
        norm += t[i];
      }
    }
    std::istringstream toks(norm);
    std::string tok;
    while (toks >> tok) {
      const auto e = tok.find('=');
      if (e == std::string::npos) {
        kv["pattern"] = tok;
      } else {
        kv[tok.substr(0, e)] = tok.substr(e + 1);
      }
    }
  }
  if (!kv.count("pattern")) throw ParameterError("pattern", "mask descriptor names no pattern");
  return kv;
}

inline std::string get_or(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

inline std::size_t require_count(const KeyValues& kv, const char* key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParameterError(key, "missing");
  return to_count(it->second, key);
}

/// Builds the pattern a descriptor names for an n x n grid. Random patterns
/// (sparse and monotone without explicit sets) draw from `seed`.
inline MaskPattern pattern_from_descriptor(const KeyValues& kv, std::size_t n) {
  const std::string tag = kv.at("pattern");
  const std::uint64_t seed = to_count(get_or(kv, "seed", "0"), "seed");
  std::mt19937_64 rng(seed);
  if (tag == "all-ones") return pattern::AllOnes{};
  if (tag == "diagonal") return pattern::Diagonal{};
  if (tag == "block-diagonal") return pattern::BlockDiagonal{contiguous_blocks(n, require_count(kv, "blocks"))};
  if (tag == "sparse") {
    const std::size_t t = require_count(kv, "t");
    if (auto it = kv.find("zero_sets"); it != kv.end()) {
      pattern::Sparse sp;
      sp.t = t;
      for (const auto& row : split(it->second, ';')) sp.zero_sets.push_back(row == "-" ? std::vector<std::size_t>{} : to_counts(row, "zero_sets"));
      return sp;
    }
    return random_sparse_pattern(n, t, rng);
  }
  if (tag == "block-sparse") {
    const std::size_t b = require_count(kv, "blocks");
    const std::size_t t = require_count(kv, "t");
    const auto blocks = contiguous_blocks(n, b);
    const auto rows = random_sparse_pattern(blocks.size(), t, rng);
    return pattern::BlockSparse{blocks, blocks, rows.zero_sets, t};
  }
  if (tag == "toeplitz-mod-p") return pattern::ToeplitzModP{require_count(kv, "p")};
  if (tag == "banded") return pattern::Banded{require_count(kv, "p")};
  if (tag == "banded-2d") return pattern::Banded2d{require_count(kv, "p")};
  if (tag == "monotone") {
    if (auto it = kv.find("prefix"); it != kv.end()) return pattern::Monotone{to_counts(it->second, "prefix")};
    return random_monotone_pattern(n, to_count(get_or(kv, "min_prefix", "0"), "min_prefix"), rng);
  }
  throw ParameterError("pattern", "unknown pattern tag: " + tag);
}

inline Mask mask_from_descriptor(const KeyValues& kv, std::optional<std::size_t> n_override = std::nullopt) {
  const std::size_t n = n_override ? *n_override : require_count(kv, "n");
  return make_mask(pattern_from_descriptor(kv, n), n);
}

}  // namespace mlra::io
