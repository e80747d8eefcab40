// mlra: command-line front end for instance generation, solving and bound checks.
//
// Exit status: 0 when every asserted bound holds, 1 when a bound fails,
// 2 on usage, parameter or I/O errors.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mlra/mlra.hpp"

namespace {

using namespace mlra;

struct Output {
  std::string path;
  std::string format = "csv";

  void add(CLI::App* cmd) {
    cmd->add_option("--out", path, "Report file (stdout when omitted)");
    cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  int write(const ExperimentReport& rep) const {
    const Format f = parse_format(format);
    if (path.empty()) {
      emit(rep, f, std::cout);
    } else {
      ensure_parent(path);
      emit(rep, f, path);
    }
    return rep.all_satisfied() ? 0 : 1;
  }

  static void ensure_parent(const std::string& file) {
    const auto parent = std::filesystem::path(file).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
};

SolveMethod method_from(const std::string& name, std::uint64_t seed) {
  if (name == "exact") return SolveMethod::exact();
  if (name == "randomized") return SolveMethod::randomized(seed);
  throw ParameterError("method", "expected exact or randomized");
}

void print_stats(const ProtocolStat& s, const std::string& format) {
  if (format == "json") {
    std::cout << to_json(s).dump(2) << "\n";
    return;
  }
  std::cout << "pattern,family,params,n,delta,seed,rectangles,one_count,rectangle_cap,one_sided,"
               "rate_on_ones,rate_on_zeros,samples_on_ones,samples_on_zeros,satisfied\n"
            << s.pattern << ',' << s.family << ',' << s.params << ',' << s.n << ',' << format_real(s.delta) << ','
            << s.seed << ',' << s.rectangles << ',' << s.one_count << ',' << s.cap << ','
            << (s.one_sided ? "true" : "false") << ',' << format_real(s.rates.rate_on_ones) << ','
            << format_real(s.rates.rate_on_zeros) << ',' << s.rates.samples_on_ones << ','
            << s.rates.samples_on_zeros << ',' << (s.satisfied ? "true" : "false") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked low-rank approximation via rectangle partitions"};
  app.require_subcommand(1);

  // gen
  std::string domain = "matrix", pattern = "diagonal", out_prefix;
  std::size_t n = 32, k = 2;
  double noise = 0.0, corruption = kDefaultCorruption;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen", "Write a planted instance: <out>.A.* and <out>.W.mlrb");
  gen->add_option("--domain", domain, "matrix, tensor3 or boolean")->check(CLI::IsMember({"matrix", "tensor3", "boolean"}));
  gen->add_option("--pattern", pattern, "Mask descriptor, e.g. \"banded p=4\"");
  gen->add_option("--n", n)->check(CLI::PositiveNumber);
  gen->add_option("--k", k)->check(CLI::PositiveNumber);
  gen->add_option("--noise", noise);
  gen->add_option("--corruption", corruption);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out_prefix, "Output prefix")->required();

  // solve
  std::string a_path, w_path, method = "exact", l_path;
  std::optional<std::size_t> kprime;
  auto* solve = app.add_subcommand("solve", "Zero-fill masked LRA on instance files; writes dense L");
  solve->add_option("--a", a_path, "Matrix file (.mlra)")->required();
  solve->add_option("--w", w_path, "Mask file (.mlrb)")->required();
  solve->add_option("--k", k)->check(CLI::PositiveNumber);
  solve->add_option("--kprime", kprime, "Output rank (defaults to k)");
  solve->add_option("--method", method)->check(CLI::IsMember({"exact", "randomized"}));
  solve->add_option("--seed", seed);
  solve->add_option("--out", l_path, "Dense L (.mlra)");

  // verify
  std::string theorem = "t1";
  double eps = 0.25;
  Output verify_out;
  auto* verify = app.add_subcommand("verify", "Run one bound-check route on a planted instance");
  verify->add_option("--theorem", theorem, "t1, t2, t3, t4 or a2")->check(CLI::IsMember({"t1", "t2", "t3", "t4", "a2"}));
  verify->add_option("--pattern", pattern);
  verify->add_option("--n", n)->check(CLI::PositiveNumber);
  verify->add_option("--k", k)->check(CLI::PositiveNumber);
  verify->add_option("--eps", eps);
  verify->add_option("--noise", noise);
  verify->add_option("--corruption", corruption);
  verify->add_option("--method", method)->check(CLI::IsMember({"exact", "randomized"}));
  verify->add_option("--seed", seed);
  verify_out.add(verify);

  // protocol-stats
  double delta = 0.25;
  std::size_t trials = 100000;
  std::string stats_format = "csv";
  auto* pstats = app.add_subcommand("protocol-stats", "Rectangle counts and Monte Carlo error rates");
  pstats->add_option("--pattern", pattern);
  pstats->add_option("--n", n)->check(CLI::PositiveNumber);
  pstats->add_option("--delta", delta);
  pstats->add_option("--trials", trials);
  pstats->add_option("--seed", seed);
  pstats->add_option("--format", stats_format)->check(CLI::IsMember({"csv", "json"}));

  // tensor
  Output tensor_out;
  TensorRouteOptions topt;
  auto* tensor = app.add_subcommand("tensor", "Three-party route on a planted diagonal-masked tensor");
  tensor->add_option("--n", n)->check(CLI::PositiveNumber);
  tensor->add_option("--k", k)->check(CLI::PositiveNumber);
  tensor->add_option("--eps", eps);
  tensor->add_option("--noise", noise);
  tensor->add_option("--corruption", corruption);
  tensor->add_option("--als-iters", topt.als_iters);
  tensor->add_option("--seed", seed);
  tensor_out.add(tensor);

  // boolean
  std::string cover = "neq-bits", inner = "auto";
  std::optional<std::size_t> blocks;
  Output boolean_out;
  auto* boolean = app.add_subcommand("boolean", "Cover route on a planted Boolean instance");
  boolean->add_option("--cover", cover, "neq-bits, neq-blocks or disj-coords")
      ->check(CLI::IsMember({"neq-bits", "neq-blocks", "disj-coords"}));
  boolean->add_option("--blocks", blocks, "Block count for neq-blocks");
  boolean->add_option("--n", n)->check(CLI::PositiveNumber);
  boolean->add_option("--k", k)->check(CLI::PositiveNumber);
  boolean->add_option("--noise", noise);
  boolean->add_option("--corruption", corruption);
  boolean->add_option("--inner", inner)->check(CLI::IsMember({"auto", "exhaustive", "heuristic"}));
  boolean->add_option("--seed", seed);
  boolean_out.add(boolean);

  // report
  std::string config_path;
  std::optional<std::size_t> threads;
  Output report_out;
  auto* report = app.add_subcommand("report", "Run a sweep from a config file");
  report->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  report->add_option("--threads", threads, "Worker threads (0: all cores)");
  report_out.add(report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto p = gen_planted(parse_domain(domain), io::parse_mask_descriptor(pattern), n, k, noise, corruption, seed);
      Output::ensure_parent(out_prefix);
      switch (p.domain) {
        case Domain::matrix:
          io::write_matrix(out_prefix + ".A.mlra", p.A);
          io::write_bits(out_prefix + ".W.mlrb", p.W.bits());
          break;
        case Domain::boolean:
          io::write_bits(out_prefix + ".A.mlrb", p.B);
          io::write_bits(out_prefix + ".W.mlrb", p.W.bits());
          break;
        case Domain::tensor3: {
          io::write_tensor(out_prefix + ".A.mlrt", p.A3);
          // Order-3 masks are stored flattened as n x n^2 (mode-1 unfolding).
          BitMatrix flat(n, n * n);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
              for (std::size_t l = 0; l < n; ++l) flat.set(i, j * n + l, p.W3(i, j, l));
          io::write_bits(out_prefix + ".W.mlrb", flat);
          break;
        }
      }
      std::cout << "opt_upper=" << format_real(p.opt_upper) << "\n";
      return 0;
    }

    if (*solve) {
      const RealMatrix a = io::read_matrix(a_path);
      const BitMatrix w = io::read_bits(w_path);
      const LowRankFactor l = masked_lra(a, w, kprime.value_or(k), method_from(method, seed));
      if (!l_path.empty()) {
        Output::ensure_parent(l_path);
        io::write_matrix(l_path, l.to_dense());
      }
      std::cout << "k_prime=" << l.width() << " cost=" << format_real(masked_cost(a, w, l)) << "\n";
      return 0;
    }

    if (*verify) {
      SweepSpec s;
      s.route = theorem;
      s.patterns = {io::parse_mask_descriptor(pattern)};
      s.sizes = {n};
      s.eps = {eps};
      s.seeds = {seed};
      s.ks = {k};
      s.noise = noise;
      s.corruption = corruption;
      s.method = method;
      SuiteConfig c;
      c.sweeps = {s};
      c.threads = 1;
      const auto rep = run_suite(c);
      for (const auto& r : rep.rows)
        if (r.report.note.rfind("error: ", 0) == 0) std::cerr << r.report.note << "\n";
      return verify_out.write(rep);
    }

    if (*pstats) {
      auto kv = io::parse_mask_descriptor(pattern);
      if (!kv.count("seed")) kv["seed"] = std::to_string(seed);
      const auto s = protocol_stats(io::mask_from_descriptor(kv, n), delta, trials, seed);
      print_stats(s, stats_format);
      return s.satisfied ? 0 : 1;
    }

    if (*tensor) {
      const auto p = gen_planted_tensor(make_mask3(pattern3::Diagonal3{}, n), k, noise, corruption, seed);
      ExperimentReport rep;
      rep.rows.push_back({"t3", run_tensor_route(p, eps, seed, topt)});
      return tensor_out.write(rep);
    }

    if (*boolean) {
      io::KeyValues kv{{"pattern", cover}};
      if (blocks) kv["blocks"] = std::to_string(*blocks);
      const CoverKind kind = cover_kind_from_descriptor(kv, n);
      const auto p = gen_planted_boolean(cover_target(kind, n), k, noise, corruption, seed);
      const InnerSolver solver = inner == "exhaustive"  ? InnerSolver::exhaustive
                                 : inner == "heuristic" ? InnerSolver::heuristic
                                                        : InnerSolver::automatic;
      ExperimentReport rep;
      rep.rows.push_back({"t4", run_boolean_route(p, kind, seed, solver)});
      return boolean_out.write(rep);
    }

    if (*report) {
      SuiteConfig c = read_suite_config(config_path);
      if (threads) c.threads = *threads;
      const auto rep = run_suite(c);
      std::size_t failed = 0;
      for (const auto& r : rep.rows) failed += !r.report.satisfied;
      for (const auto& s : rep.stats) failed += !s.satisfied;
      std::cerr << rep.rows.size() << " rows, " << rep.stats.size() << " protocol stats, " << failed << " failed\n";
      if (!report_out.path.empty() && !rep.stats.empty()) {
        nlohmann::json stats = nlohmann::json::array();
        for (const auto& s : rep.stats) stats.push_back(to_json(s));
        const std::string stats_path = report_out.path + ".stats.json";
        std::ofstream os(stats_path);
        if (!os) throw IoError(stats_path, "cannot open for writing");
        os << stats.dump(2) << "\n";
      }
      return report_out.write(rep);
    }
  } catch (const ParameterError& e) {
    std::cerr << "parameter error (" << e.field() << "): " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error (" << e.path() << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
