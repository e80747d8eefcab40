#pragma once

// Planted instances, sweep orchestration and report serialization.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mlra/boolean.hpp"
#include "mlra/error.hpp"
#include "mlra/io.hpp"
#include "mlra/linalg.hpp"
#include "mlra/masks.hpp"
#include "mlra/protocols.hpp"
#include "mlra/solver.hpp"
#include "mlra/structural.hpp"
#include "mlra/tensor.hpp"

namespace mlra {

enum class Domain { matrix, tensor3, boolean };

inline Domain parse_domain(const std::string& s) {
  if (s == "matrix") return Domain::matrix;
  if (s == "tensor3") return Domain::tensor3;
  if (s == "boolean") return Domain::boolean;
  throw ParameterError("domain", "expected matrix, tensor3 or boolean, got " + s);
}

inline constexpr double kDefaultCorruption = 5.0;

/// A, W and a rank-k candidate L_star whose masked cost certifies an upper
/// bound on OPT. Only the members of `domain` are populated; Boolean
/// instances keep their mask in W.
struct PlantedInstance {
  Domain domain = Domain::matrix;
  std::size_t n = 0;
  std::size_t k = 0;
  double noise_sigma = 0.0;
  double corruption_scale = 0.0;
  std::uint64_t seed = 0;
  double opt_upper = 0.0;

  RealMatrix A;
  Mask W;
  LowRankFactor L_star;

  Tensor3 A3;
  Mask3 W3;
  CPFactor L3_star;

  BoolMatrix B;
  BoolFactor B_star;
};

namespace detail {

inline void check_planted_args(std::size_t n, std::size_t k, double noise, double corruption) {
  if (n < 1) throw ParameterError("n", "must be >= 1");
  if (k < 1) throw ParameterError("k", "must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ParameterError("noise_sigma", "must be >= 0");
  if (!(corruption >= 0.0) || !std::isfinite(corruption)) throw ParameterError("corruption_scale", "must be >= 0");
}

}  // namespace detail

/// L* = U V^T with standard normal factors. Entries on W's zeros get
/// corruption_scale * rms(L*) * N(0, 1); entries on the support get
/// noise_sigma * N(0, 1).
inline PlantedInstance gen_planted_matrix(const Mask& w, std::size_t k, double noise_sigma, double corruption_scale,
                                          std::uint64_t seed) {
  const std::size_t n = w.n();
  detail::check_planted_args(n, k, noise_sigma, corruption_scale);
  PlantedInstance p;
  p.domain = Domain::matrix;
  p.n = n;
  p.k = k;
  p.noise_sigma = noise_sigma;
  p.corruption_scale = corruption_scale;
  p.seed = seed;
  p.W = w;
  std::mt19937_64 rng(seed);
  p.L_star = {gaussian_matrix(w.rows(), k, rng), gaussian_matrix(w.cols(), k, rng), k};
  p.A = p.L_star.to_dense();
  const double rms = std::sqrt(frobenius_sq(p.A) / static_cast<double>(p.A.size()));
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double z = g(rng);
      p.A(i, j) += w(i, j) ? noise_sigma * z : corruption_scale * rms * z;
    }
  p.opt_upper = masked_cost(p.A, p.W, p.L_star);
  return p;
}

inline PlantedInstance gen_planted_tensor(const Mask3& w, std::size_t k, double noise_sigma, double corruption_scale,
                                          std::uint64_t seed) {
  const std::size_t n = w.n();
  detail::check_planted_args(n, k, noise_sigma, corruption_scale);
  PlantedInstance p;
  p.domain = Domain::tensor3;
  p.n = n;
  p.k = k;
  p.noise_sigma = noise_sigma;
  p.corruption_scale = corruption_scale;
  p.seed = seed;
  p.W3 = w;
  std::mt19937_64 rng(seed);
  p.L3_star = {gaussian_matrix(n, k, rng), gaussian_matrix(n, k, rng), gaussian_matrix(n, k, rng), k};
  p.A3 = p.L3_star.to_dense();
  const double rms = std::sqrt(frobenius_sq(p.A3) / static_cast<double>(n * n * n));
  std::normal_distribution<double> g(0.0, 1.0);
  auto v = p.A3.values();
  for (std::size_t c = 0; c < v.size(); ++c) {
    const double z = g(rng);
    v[c] += w.raw()[c] ? noise_sigma * z : corruption_scale * rms * z;
  }
  p.opt_upper = masked_cost3(p.A3, p.W3, p.L3_star);
  return p;
}

/// Random binary factors with density 1/2. Each zero of W is flipped with
/// probability min(1, corruption_scale) / 2 and each support entry with
/// probability min(1/2, noise_sigma).
inline PlantedInstance gen_planted_boolean(const Mask& w, std::size_t k, double noise_sigma, double corruption_scale,
                                           std::uint64_t seed) {
  const std::size_t n = w.n();
  detail::check_planted_args(n, k, noise_sigma, corruption_scale);
  PlantedInstance p;
  p.domain = Domain::boolean;
  p.n = n;
  p.k = k;
  p.noise_sigma = noise_sigma;
  p.corruption_scale = corruption_scale;
  p.seed = seed;
  p.W = w;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  p.B_star = {BoolMatrix(w.rows(), k), BoolMatrix(k, w.cols()), k};
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t c = 0; c < k; ++c) p.B_star.U.set(i, c, coin(rng));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < w.cols(); ++j) p.B_star.V.set(c, j, coin(rng));
  p.B = bool_product(p.B_star);
  std::bernoulli_distribution flip_zero(std::min(1.0, corruption_scale) / 2.0);
  std::bernoulli_distribution flip_one(std::min(0.5, noise_sigma));
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (w(i, j) ? flip_one(rng) : flip_zero(rng)) p.B.set(i, j, !p.B(i, j));
  p.opt_upper = static_cast<double>(bool_cost(p.B, bool_product(p.B_star), w));
  return p;
}

// ---------------------------------------------------------------------------
// Pattern descriptors per domain

inline Mask3 mask3_from_descriptor(const io::KeyValues& kv, std::size_t n) {
  const std::string tag = kv.at("pattern");
  if (tag == "diagonal" || tag == "diagonal3") return make_mask3(pattern3::Diagonal3{}, n);
  if (tag == "sparse-faces") {
    const std::size_t s = io::require_count(kv, "s");
    if (s > n * n) throw ParameterError("s", "requires s <= n^2");
    std::mt19937_64 rng(io::to_count(io::get_or(kv, "seed", "0"), "seed"));
    pattern3::SparseFaces sf;
    sf.s = s;
    sf.zero_sets.resize(n);
    std::vector<std::size_t> cells(n * n);
    for (auto& face : sf.zero_sets) {
      std::iota(cells.begin(), cells.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      for (std::size_t q = 0; q < s; ++q) face.emplace_back(cells[q] / n, cells[q] % n);
    }
    return make_mask3(sf, n);
  }
  throw ParameterError("pattern", "unknown order-3 pattern: " + tag);
}

/// Cover kinds by name; the matching mask patterns (diagonal, block-diagonal)
/// are accepted as aliases.
inline CoverKind cover_kind_from_descriptor(const io::KeyValues& kv, std::size_t n) {
  const std::string tag = kv.at("pattern");
  if (tag == "neq-bits" || tag == "diagonal") return cover_kind::NeqBits{};
  if (tag == "neq-blocks" || tag == "block-diagonal")
    return cover_kind::NeqBlocks{contiguous_blocks(n, io::require_count(kv, "blocks"))};
  if (tag == "disj-coords") return cover_kind::DisjCoords{};
  throw ParameterError("cover", "unknown cover kind: " + tag);
}

inline std::string descriptor_label(const io::KeyValues& kv) {
  std::string out = kv.at("pattern");
  for (const auto& [key, value] : kv)
    if (key != "pattern" && key != "n") out += " " + key + "=" + value;
  return out;
}

/// Dispatching generator over descriptors.
inline PlantedInstance gen_planted(Domain domain, const io::KeyValues& pattern, std::size_t n, std::size_t k,
                                   double noise_sigma, double corruption_scale, std::uint64_t seed) {
  switch (domain) {
    case Domain::matrix:
      return gen_planted_matrix(io::mask_from_descriptor(pattern, n), k, noise_sigma, corruption_scale, seed);
    case Domain::tensor3:
      return gen_planted_tensor(mask3_from_descriptor(pattern, n), k, noise_sigma, corruption_scale, seed);
    case Domain::boolean: {
      Mask w;
      const std::string tag = pattern.at("pattern");
      if (tag == "neq-bits" || tag == "neq-blocks" || tag == "disj-coords") {
        w = cover_target(cover_kind_from_descriptor(pattern, n), n);
      } else {
        w = io::mask_from_descriptor(pattern, n);
      }
      return gen_planted_boolean(w, k, noise_sigma, corruption_scale, seed);
    }
  }
  throw ParameterError("domain", "unreachable");
}

// ---------------------------------------------------------------------------
// Routes. Each returns a report row; rhs is the asserted right-hand side.

/// Protocol route on a planted matrix. `one_sided_only` switches two-sided
/// specs to the sparse-set route so no eps2 term appears.
inline BicriteriaReport run_protocol_route(const PlantedInstance& p, double eps, std::uint64_t seed,
                                           bool one_sided_only, const SolveMethod& method = SolveMethod::exact()) {
  ProtocolSpec spec = spec_for_mask(p.W, eps);
  if (one_sided_only && !is_one_sided(spec)) spec = sparse_route_spec(p.W, eps);
  BicriteriaOptions opt;
  opt.method = method;
  return verify_bicriteria(p.A, p.W, p.k, eps, spec, p.opt_upper, p.L_star, seed, opt);
}

struct TensorRouteOptions {
  std::size_t als_iters = 10;
  std::size_t inner_iters = 100;
  std::size_t inner_restarts = 3;
};

/// Three-party route on a planted diagonal-masked tensor: comparator from a
/// neq3 partition, then masked CP-ALS from the comparator at k * one_count.
/// Asserts cost <= opt_upper + 2 eps ||A o W||^2 + 1e-6 ||A||^2.
inline BicriteriaReport run_tensor_route(const PlantedInstance& p, double eps, std::uint64_t seed,
                                         const TensorRouteOptions& o = {}) {
  if (p.domain != Domain::tensor3) throw ParameterError("domain", "tensor route needs a tensor3 instance");
  check_delta(eps, "eps");
  const ProtocolSpec spec{family::Neq3{eps}, p.n};
  const PartitionSample3 part = multiparty_partition(spec, seed);
  const CPFactor comp = tensor_comparator(p.A3, p.W3, part, p.k, {o.inner_iters, o.inner_restarts, seed});
  BicriteriaReport r;
  r.pattern = "diagonal3";
  r.n = p.n;
  r.k = p.k;
  r.seed = seed;
  r.opt_upper = p.opt_upper;
  r.eps1 = eps;
  r.rectangles = part.rectangles.size();
  r.one_count = part.one_count;
  r.rectangle_cap = rectangle_cap(spec);
  r.k_prime = std::max<std::size_t>(1, p.k * part.one_count);
  const CpAlsResult fit = masked_tensor_lra(p.A3, p.W3, r.k_prime, comp, o.als_iters, seed);
  r.cost = masked_cost3(p.A3, p.W3, fit.factor);
  const double aw_mass = frobenius_sq(apply_mask(p.A3, p.W3));
  r.term_eps1 = eps * aw_mass;
  r.delta_slack = eps * aw_mass + 1e-6 * frobenius_sq(p.A3);
  if (fit.regularized) r.note = "als-pseudo-inverse";
  r.finalize();
  return r;
}

/// Cover route on a planted Boolean instance: cost <= |C| * opt_upper + Delta.
inline BicriteriaReport run_boolean_route(const PlantedInstance& p, const CoverKind& kind, std::uint64_t seed,
                                          InnerSolver inner = InnerSolver::automatic) {
  if (p.domain != Domain::boolean) throw ParameterError("domain", "boolean route needs a boolean instance");
  const Cover c = nondet_cover(kind, p.n);
  const auto opt = static_cast<std::size_t>(p.opt_upper);
  const NondetReport nd = verify_nondet_bound(p.B, p.W.bits(), c, p.k, opt, inner, seed);
  BicriteriaReport r;
  r.pattern = c.kind;
  r.n = p.n;
  r.k = p.k;
  r.k_prime = p.k * c.rectangles.size();
  r.seed = seed;
  r.cost = static_cast<double>(nd.cost);
  r.opt_upper = p.opt_upper;
  r.delta_slack = static_cast<double>(nd.delta_slack);
  r.rhs = static_cast<double>(nd.rhs);
  r.satisfied = nd.satisfied;
  r.rectangles = c.rectangles.size();
  r.one_count = c.rectangles.size();
  r.note = "cover=" + std::to_string(c.rectangles.size());
  return r;
}

/// Leverage-score route: zero-fill at ceil(6 k t / eps).
inline BicriteriaReport run_structural_route(const PlantedInstance& p, double eps, std::uint64_t seed,
                                             const SolveMethod& method = SolveMethod::exact()) {
  const StructuralReport s = verify_structural_bicriteria(p.A, p.W, p.k, eps, p.opt_upper, method);
  BicriteriaReport r;
  r.pattern = pattern_tag(p.W.pattern());
  r.n = p.n;
  r.k = p.k;
  r.k_prime = s.k_prime;
  r.eps1 = eps;
  r.seed = seed;
  r.cost = s.cost;
  r.opt_upper = s.opt_upper;
  r.term_eps1 = s.term_eps;
  r.delta_slack = s.term_eps1;
  r.note = "t=" + std::to_string(s.t);
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Protocol statistics

struct ProtocolStat {
  std::string pattern;
  std::string family;
  std::string params;
  std::size_t n = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::size_t rectangles = 0;
  std::size_t one_count = 0;
  std::uint64_t cap = 0;
  bool one_sided = false;
  ErrorRates rates;
  bool satisfied = false;
};

/// True iff an observed rate is at most delta plus three binomial standard deviations.
inline bool rate_within(double rate, double delta, std::size_t samples) {
  if (samples == 0) return true;
  const double sigma = std::sqrt(std::min(delta, 1.0) * (1.0 - std::min(delta, 1.0)) / static_cast<double>(samples));
  return rate <= delta + 3.0 * sigma;
}

inline ProtocolStat protocol_stats(const Mask& w, double delta, std::size_t trials, std::uint64_t seed) {
  const ProtocolSpec spec = spec_for_mask(w, delta);
  ProtocolStat s;
  s.pattern = pattern_tag(w.pattern());
  s.family = family_name(spec);
  s.params = family_params(spec);
  s.n = w.n();
  s.delta = delta;
  s.seed = seed;
  s.cap = rectangle_cap(spec);
  s.one_sided = is_one_sided(spec);
  bool tiled = true;
  if (w.n() <= kEnumerationCap) {
    const PartitionSample p = sample_partition(spec, seed);
    s.rectangles = p.rectangles.size();
    s.one_count = p.one_count;
    tiled = s.rectangles <= s.cap;
  }
  s.rates = empirical_error_rates(spec, w, trials, seed);
  const double d = nominal_delta(spec);
  const bool zeros_ok = s.one_sided ? s.rates.errors_on_zeros == 0
                                    : rate_within(s.rates.rate_on_zeros, d, s.rates.samples_on_zeros);
  s.satisfied = tiled && zeros_ok && rate_within(s.rates.rate_on_ones, d, s.rates.samples_on_ones);
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

struct ReportRow {
  std::string route;
  BicriteriaReport report;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<ProtocolStat> stats;

  bool all_satisfied() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.report.satisfied; }) &&
           std::all_of(stats.begin(), stats.end(), [](const ProtocolStat& s) { return s.satisfied; });
  }
};

/// One [sweep] section. `patterns` holds '|'-separated descriptors such as
/// "diagonal | sparse t=2 | banded p=4".
struct SweepSpec {
  std::string route = "t1";  // t1, t2, t3, t4, a2 or stats
  std::vector<io::KeyValues> patterns;
  std::vector<std::size_t> sizes;
  std::vector<double> eps;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> ks{2};
  double noise = 0.0;
  double corruption = kDefaultCorruption;
  std::string method = "exact";
  std::size_t trials = 100000;
};

struct SuiteConfig {
  std::vector<SweepSpec> sweeps;
  std::size_t threads = 0;  // 0: hardware concurrency
};

inline SuiteConfig parse_suite_config(const std::vector<io::Section>& sections) {
  SuiteConfig c;
  for (const auto& s : sections) {
    if (s.name == "" || s.name == "suite") {
      if (auto it = s.values.find("threads"); it != s.values.end()) c.threads = io::to_count(it->second, "threads");
      continue;
    }
    if (s.name != "sweep") throw ParameterError("section", "unknown section [" + s.name + "]");
    SweepSpec w;
    for (const auto& [key, value] : s.values) {
      if (key == "route") {
        w.route = value;
      } else if (key == "patterns" || key == "pattern") {
        for (const auto& d : io::split(value, '|')) w.patterns.push_back(io::parse_mask_descriptor(d));
      } else if (key == "sizes" || key == "n") {
        w.sizes = io::to_counts(value, "sizes");
      } else if (key == "eps" || key == "delta") {
        w.eps = io::to_reals(value, "eps");
      } else if (key == "seeds") {
        for (auto x : io::to_counts(value, "seeds")) w.seeds.push_back(x);
      } else if (key == "k") {
        w.ks = io::to_counts(value, "k");
      } else if (key == "noise") {
        w.noise = io::to_real(value, "noise");
      } else if (key == "corruption") {
        w.corruption = io::to_real(value, "corruption");
      } else if (key == "method") {
        if (value != "exact" && value != "randomized") throw ParameterError("method", "expected exact or randomized");
        w.method = value;
      } else if (key == "trials") {
        w.trials = io::to_count(value, "trials");
      } else {
        throw ParameterError(key.c_str(), "unknown sweep key");
      }
    }
    static const char* kRoutes[] = {"t1", "t2", "t3", "t4", "a2", "stats"};
    if (std::find(std::begin(kRoutes), std::end(kRoutes), w.route) == std::end(kRoutes))
      throw ParameterError("route", "unknown route " + w.route);
    c.sweeps.push_back(std::move(w));
  }
  return c;
}

inline SuiteConfig read_suite_config(const std::string& path) { return parse_suite_config(io::read_sections(path)); }

namespace detail {

struct Cell {
  const SweepSpec* sweep;
  const io::KeyValues* pattern;
  std::size_t n;
  double eps;
  std::uint64_t seed;
  std::size_t k;
};

inline ReportRow run_cell(const Cell& c) {
  const SweepSpec& s = *c.sweep;
  io::KeyValues pat = *c.pattern;
  if (!pat.count("seed")) pat["seed"] = std::to_string(c.seed);
  const SolveMethod method = s.method == "randomized" ? SolveMethod::randomized(c.seed) : SolveMethod::exact();
  ReportRow row{s.route, {}};
  try {
    if (s.route == "t1" || s.route == "t2") {
      const auto p = gen_planted(Domain::matrix, pat, c.n, c.k, s.noise, s.corruption, c.seed);
      row.report = run_protocol_route(p, c.eps, c.seed, s.route == "t1", method);
    } else if (s.route == "t3") {
      const auto p = gen_planted(Domain::tensor3, pat, c.n, c.k, s.noise, s.corruption, c.seed);
      if (!std::holds_alternative<pattern3::Diagonal3>(p.W3.pattern()))
        throw ParameterError("pattern", "the three-party route covers the diagonal pattern only");
      row.report = run_tensor_route(p, c.eps, c.seed);
    } else if (s.route == "t4") {
      const auto p = gen_planted(Domain::boolean, pat, c.n, c.k, s.noise, s.corruption, c.seed);
      row.report = run_boolean_route(p, cover_kind_from_descriptor(pat, c.n), c.seed);
    } else {
      const auto p = gen_planted(Domain::matrix, pat, c.n, c.k, s.noise, s.corruption, c.seed);
      row.report = run_structural_route(p, c.eps, c.seed, method);
    }
  } catch (const std::exception& e) {
    row.report = {};
    row.report.satisfied = false;
    row.report.note = std::string("error: ") + e.what();
  }
  if (row.report.pattern.empty()) row.report.pattern = pat.at("pattern");
  row.report.n = c.n;
  row.report.k = c.k;
  row.report.seed = c.seed;
  if (row.report.eps1 == 0.0 && s.route != "t4") row.report.eps1 = c.eps;
  return row;
}

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Cross product patterns x sizes x eps x seeds x k per sweep, in that
/// nesting order. Cells run concurrently; rows are stored by cell index, so
/// the report does not depend on scheduling. A failing cell becomes a row with
/// satisfied = false and the error in its note.
inline ExperimentReport run_suite(const SuiteConfig& config) {
  std::vector<detail::Cell> cells;
  struct StatCell {
    const SweepSpec* sweep;
    const io::KeyValues* pattern;
    std::size_t n;
    double delta;
    std::uint64_t seed;
  };
  std::vector<StatCell> stat_cells;
  for (const auto& s : config.sweeps)
    for (const auto& pat : s.patterns)
      for (auto n : s.sizes)
        for (auto e : s.eps)
          for (auto seed : s.seeds) {
            if (s.route == "stats") {
              stat_cells.push_back({&s, &pat, n, e, seed});
              continue;
            }
            for (auto k : s.ks) cells.push_back({&s, &pat, n, e, seed, k});
          }
  ExperimentReport rep;
  rep.rows.resize(cells.size());
  detail::parallel_for(cells.size(), config.threads, [&](std::size_t i) { rep.rows[i] = detail::run_cell(cells[i]); });
  rep.stats.resize(stat_cells.size());
  detail::parallel_for(stat_cells.size(), config.threads, [&](std::size_t i) {
    const auto& c = stat_cells[i];
    io::KeyValues pat = *c.pattern;
    if (!pat.count("seed")) pat["seed"] = std::to_string(c.seed);
    try {
      rep.stats[i] = protocol_stats(io::mask_from_descriptor(pat, c.n), c.delta, c.sweep->trials, c.seed);
    } catch (const std::exception& e) {
      ProtocolStat s;
      s.pattern = pat.at("pattern");
      s.family = std::string("error: ") + e.what();
      s.n = c.n;
      s.delta = c.delta;
      s.seed = c.seed;
      rep.stats[i] = s;
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kCsvHeader = "pattern,n,k,k_prime,eps1,eps2,delta_slack,seed,cost,opt_upper,rhs,satisfied";

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<BicriteriaReport>& rows) {
  os << kCsvHeader << "\n";
  for (const auto& r : rows) {
    std::string pattern = r.pattern;
    std::replace(pattern.begin(), pattern.end(), ',', ';');
    os << pattern << ',' << r.n << ',' << r.k << ',' << r.k_prime << ',' << format_real(r.eps1) << ','
       << format_real(r.eps2) << ',' << format_real(r.delta_slack) << ',' << r.seed << ',' << format_real(r.cost)
       << ',' << format_real(r.opt_upper) << ',' << format_real(r.rhs) << ',' << (r.satisfied ? "true" : "false")
       << "\n";
  }
}

inline std::vector<BicriteriaReport> parse_csv(std::istream& is, const std::string& origin = "<input>") {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw IoError(origin, "missing or unexpected CSV header");
  std::vector<BicriteriaReport> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 12) throw IoError(origin, "expected 12 columns: " + line);
    BicriteriaReport r;
    r.pattern = f[0];
    r.n = io::to_count(f[1], "n");
    r.k = io::to_count(f[2], "k");
    r.k_prime = io::to_count(f[3], "k_prime");
    r.eps1 = io::to_real(f[4], "eps1");
    r.eps2 = io::to_real(f[5], "eps2");
    r.delta_slack = io::to_real(f[6], "delta_slack");
    r.seed = io::to_count(f[7], "seed");
    r.cost = io::to_real(f[8], "cost");
    r.opt_upper = io::to_real(f[9], "opt_upper");
    r.rhs = io::to_real(f[10], "rhs");
    if (f[11] != "true" && f[11] != "false") throw IoError(origin, "satisfied must be true or false");
    r.satisfied = f[11] == "true";
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json to_json(const BicriteriaReport& r) {
  return {{"pattern", r.pattern}, {"n", r.n},
          {"k", r.k},             {"k_prime", r.k_prime},
          {"eps1", r.eps1},       {"eps2", r.eps2},
          {"delta_slack", r.delta_slack}, {"seed", r.seed},
          {"cost", r.cost},       {"opt_upper", r.opt_upper},
          {"rhs", r.rhs},         {"satisfied", r.satisfied},
          {"term_eps1", r.term_eps1}, {"term_eps2", r.term_eps2},
          {"rectangles", r.rectangles}, {"one_count", r.one_count},
          {"rectangle_cap", r.rectangle_cap}, {"note", r.note}};
}

inline BicriteriaReport report_from_json(const nlohmann::json& j) {
  BicriteriaReport r;
  r.pattern = j.at("pattern").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.k = j.at("k").get<std::size_t>();
  r.k_prime = j.at("k_prime").get<std::size_t>();
  r.eps1 = j.at("eps1").get<double>();
  r.eps2 = j.at("eps2").get<double>();
  r.delta_slack = j.at("delta_slack").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.cost = j.at("cost").get<double>();
  r.opt_upper = j.at("opt_upper").get<double>();
  r.rhs = j.at("rhs").get<double>();
  r.satisfied = j.at("satisfied").get<bool>();
  r.term_eps1 = j.value("term_eps1", 0.0);
  r.term_eps2 = j.value("term_eps2", 0.0);
  r.rectangles = j.value("rectangles", std::size_t{0});
  r.one_count = j.value("one_count", std::size_t{0});
  r.rectangle_cap = j.value("rectangle_cap", std::uint64_t{0});
  r.note = j.value("note", std::string{});
  return r;
}

inline nlohmann::json to_json(const ProtocolStat& s) {
  return {{"pattern", s.pattern},
          {"family", s.family},
          {"params", s.params},
          {"n", s.n},
          {"delta", s.delta},
          {"seed", s.seed},
          {"rectangles", s.rectangles},
          {"one_count", s.one_count},
          {"rectangle_cap", s.cap},
          {"one_sided", s.one_sided},
          {"rate_on_ones", s.rates.rate_on_ones},
          {"rate_on_zeros", s.rates.rate_on_zeros},
          {"samples_on_ones", s.rates.samples_on_ones},
          {"samples_on_zeros", s.rates.samples_on_zeros},
          {"errors_on_ones", s.rates.errors_on_ones},
          {"errors_on_zeros", s.rates.errors_on_zeros},
          {"satisfied", s.satisfied}};
}

inline nlohmann::json to_json(const ExperimentReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    auto j = to_json(r.report);
    j["route"] = r.route;
    rows.push_back(std::move(j));
  }
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : rep.stats) stats.push_back(to_json(s));
  return {{"rows", rows}, {"protocol_stats", stats}};
}

inline ExperimentReport experiment_from_json(const nlohmann::json& j) {
  ExperimentReport rep;
  for (const auto& r : j.at("rows")) rep.rows.push_back({r.value("route", std::string{}), report_from_json(r)});
  return rep;
}

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ParameterError("format", "expected csv or json");
}

inline void emit(const ExperimentReport& rep, Format format, std::ostream& os) {
  if (format == Format::json) {
    os << to_json(rep).dump(2) << "\n";
    return;
  }
  std::vector<BicriteriaReport> rows;
  for (const auto& r : rep.rows) rows.push_back(r.report);
  write_csv(os, rows);
}

inline void emit(const ExperimentReport& rep, Format format, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path, "cannot open for writing");
  emit(rep, format, os);
  os.flush();
  if (!os) throw IoError(path, "write failed");
}

}  // namespace mlra
