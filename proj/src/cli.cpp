#include "relex/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "relex/audit.hpp"
#include "relex/error.hpp"
#include "relex/extract2.hpp"
#include "relex/extract3.hpp"
#include "relex/generate.hpp"
#include "relex/oracle.hpp"
#include "relex/serialize.hpp"
#include "relex/verify.hpp"

namespace relex::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to `path`, or to `out` when the path is empty.
template <typename Fn>
void emit(const std::string &path, std::ostream &out, Fn &&write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  write(file);
}

NetworkDocument load(const std::string &path) {
  if (path.empty()) {
    throw UsageError("missing input file");
  }
  try {
    return load_network(path);
  } catch (const FormatError &e) {
    throw UsageError(path + ": " + e.what());
  } catch (const std::runtime_error &e) {
    throw UsageError(e.what());
  }
}

int cmd_generate(const RunConfig &cfg, std::ostream &out) {
  if (cfg.depth != 2 && cfg.depth != 3) {
    throw UsageError("--depth must be 2 or 3");
  }
  if (cfg.d < 1 || cfg.d1 < 1 || (cfg.depth == 3 && cfg.d2 < 1)) {
    throw UsageError("--d and --d1 (and --d2 for depth 3) must be positive");
  }
  if (cfg.depth == 3 && cfg.d1 > cfg.d) {
    throw UsageError("depth 3 requires d1 <= d (right invertible first layer)");
  }
  NetworkDocument doc;
  doc.seed = cfg.seed;
  doc.delta = cfg.delta;
  if (cfg.depth == 2) {
    doc.net = generate_two_layer(cfg.d, cfg.d1, cfg.delta, cfg.seed);
  } else {
    doc.net = generate_three_layer(cfg.d, cfg.d1, cfg.d2, cfg.delta, cfg.seed);
  }
  emit(cfg.output, out, [&](std::ostream &os) { write_network(os, doc); });
  return kOk;
}

int cmd_extract(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  const NetworkDocument truth = load(cfg.input);
  NetworkDocument report;
  report.seed = cfg.seed;
  report.delta = cfg.delta;

  // Only the oracle is handed to extraction; the audit counter checks it.
  std::unique_ptr<QueryOracle> oracle;
  if (const auto *two = std::get_if<TwoLayerNetd>(&truth.net)) {
    oracle = std::make_unique<QueryOracle>(as_oracle(*two));
  } else {
    oracle = std::make_unique<QueryOracle>(as_oracle(std::get<ThreeLayerNetd>(truth.net)));
  }
  const std::uint64_t reads_before = audit::parameter_reads();
  if (truth.depth() == 2) {
    TwoLayerOptions opts;
    opts.delta = cfg.delta;
    opts.max_neurons = cfg.d1_max;
    opts.seed = cfg.seed;
    ExtractedTwoLayer ex = extract_two_layer(*oracle, opts);
    report.queries = ex.queries;
    report.net = ex.to_network();
  } else {
    ThreeLayerOptions opts;
    opts.delta = cfg.delta;
    opts.max_candidates = cfg.m_max;
    opts.sign_retries = cfg.retries;
    opts.seed = cfg.seed;
    opts.top.max_neurons = cfg.d1_max;
    ExtractedThreeLayer ex = extract_three_layer(*oracle, opts);
    report.queries = ex.queries;
    report.net = ex.to_network();
  }
  const std::uint64_t reads = audit::parameter_reads() - reads_before;

  emit(cfg.output, out, [&](std::ostream &os) { write_network(os, report); });
  err << "extracted depth-" << truth.depth() << " network with " << oracle->queries()
      << " queries";
  for (const auto &[phase, n] : report.queries.entries()) {
    err << ' ' << phase << '=' << n;
  }
  err << "; parameter reads during extraction: " << reads << '\n';
  return kOk;
}

int cmd_verify(const RunConfig &cfg, std::ostream &out) {
  if (cfg.reference.empty() || cfg.candidate.empty()) {
    throw UsageError("verify needs --reference and --candidate");
  }
  const NetworkDocument a = load(cfg.reference);
  const NetworkDocument b = load(cfg.candidate);
  if (a.dim() != b.dim()) {
    throw UsageError("input dimensions differ (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
  const Box box = a.depth() == 2 ? kDepthTwoBox : kDepthThreeBox;
  const EquivalenceReport r = functional_equivalence(
      a.evaluable(), b.evaluable(), a.dim(), box, cfg.samples, cfg.tau, cfg.seed, cfg.workers);
  emit(cfg.output, out, [&](std::ostream &os) { os << r << '\n'; });
  return r.pass ? kOk : kVerifyFailed;
}

int cmd_bench(const RunConfig &cfg, bool delta_given, std::ostream &out) {
  if (cfg.depth != 2 && cfg.depth != 3) {
    throw UsageError("--depth must be 2 or 3");
  }
  BenchCell base;
  base.depth = cfg.depth;
  base.d = cfg.d > 0 ? cfg.d : (cfg.depth == 2 ? 4 : 6);
  base.d1 = cfg.d1 > 0 ? cfg.d1 : (cfg.depth == 2 ? 4 : 3);
  base.d2 = cfg.depth == 2 ? 0 : (cfg.d2 > 0 ? cfg.d2 : 3 * base.d1);
  base.delta = delta_given ? cfg.delta : 1e-2;
  if (cfg.depth == 3 && base.d1 > base.d) {
    throw UsageError("depth 3 requires d1 <= d");
  }
  // Each grid cell doubles one size, or squares delta (doubling log(1/delta)).
  std::vector<BenchCell> cells{base};
  cells.push_back(base);
  cells.back().d *= 2;
  if (cfg.depth == 2 || 2 * base.d1 <= base.d) {
    cells.push_back(base);
    cells.back().d1 *= 2;
  }
  if (cfg.depth == 3) {
    cells.push_back(base);
    cells.back().d2 *= 2;
  }
  cells.push_back(base);
  cells.back().delta = base.delta * base.delta;

  std::vector<std::uint64_t> seeds(cfg.seeds);
  for (std::uint64_t k = 0; k < cfg.seeds; ++k) {
    seeds[k] = cfg.seed + k;
  }
  const BenchTable table = query_complexity_bench(cells, seeds, cfg.workers);
  emit(cfg.output, out, [&](std::ostream &os) { table.write_csv(os); });
  return table.fits() ? kOk : kVerifyFailed;
}

int cmd_bound(const RunConfig &cfg, std::ostream &out) {
  const long d = cfg.d > 0 ? cfg.d : 2;
  const long d1 = cfg.d1 > 0 ? cfg.d1 : 30;
  const BoundExperiment r = empirical_orthant_bound(d, d1, cfg.trials, cfg.seed, cfg.workers);
  emit(cfg.output, out, [&](std::ostream &os) {
    os << "d,d1,trials,hits,rate,bound,sigma,within_3sigma\n"
       << r.d << ',' << r.d1 << ',' << r.trials << ',' << r.hits << ',' << r.rate << ','
       << r.bound << ',' << r.sigma() << ',' << (r.within() ? 1 : 0) << '\n';
  });
  return r.within() ? kOk : kVerifyFailed;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  RunConfig cfg;
  CLI::App app{"Exact parameter extraction for depth-2 and depth-3 ReLU networks", "relex"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--output,-o", cfg.output, "Output file (default: stdout)");
    sub->add_option("--workers", cfg.workers, "Worker threads (0: all cores)")
        ->capture_default_str();
  };
  auto add_dims = [&](CLI::App *sub) {
    sub->add_option("--depth", cfg.depth, "Network depth (2 or 3)")->capture_default_str();
    sub->add_option("--d", cfg.d, "Input dimension")->check(CLI::PositiveNumber);
    sub->add_option("--d1", cfg.d1, "First hidden width")->check(CLI::PositiveNumber);
    sub->add_option("--d2", cfg.d2, "Second hidden width (depth 3)")->check(CLI::PositiveNumber);
  };
  auto add_delta = [&](CLI::App *sub) {
    return sub->add_option("--delta", cfg.delta, "General-position scale")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  CLI::App *gen = app.add_subcommand("generate", "Write a random network in general position");
  add_dims(gen);
  add_delta(gen);
  add_common(gen);

  CLI::App *ext = app.add_subcommand("extract", "Recover a network through queries only");
  ext->add_option("--input,-i", cfg.input, "Network file to query")->required();
  add_delta(ext);
  ext->add_option("--d1-max", cfg.d1_max, "Neuron budget")->check(CLI::PositiveNumber)
      ->capture_default_str();
  ext->add_option("--m-max", cfg.m_max, "Critical-point budget per probe line")
      ->check(CLI::PositiveNumber)->capture_default_str();
  ext->add_option("--retries", cfg.retries, "Sign-recovery base points per row")
      ->check(CLI::PositiveNumber)->capture_default_str();
  add_common(ext);

  CLI::App *ver = app.add_subcommand("verify", "Compare two networks on random points");
  ver->add_option("--reference", cfg.reference, "First network file")->required();
  ver->add_option("--candidate", cfg.candidate, "Second network file")->required();
  ver->add_option("--tau", cfg.tau, "Relative tolerance")->check(CLI::PositiveNumber)
      ->capture_default_str();
  ver->add_option("--samples", cfg.samples, "Sample points")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(ver);

  CLI::App *ben = app.add_subcommand("bench", "Query counts over a doubling grid (CSV)");
  add_dims(ben);
  CLI::Option *bench_delta =
      ben->add_option("--delta", cfg.delta, "Base-cell delta (default 0.01)")
          ->check(CLI::PositiveNumber);
  ben->add_option("--seeds", cfg.seeds, "Seeds per grid cell")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(ben);

  CLI::App *bnd = app.add_subcommand("bound-experiment",
                                     "Frequency of a random layer meeting the negative orthant");
  bnd->add_option("--d", cfg.d, "Input dimension (default 2)")->check(CLI::PositiveNumber);
  bnd->add_option("--d1", cfg.d1, "Width (default 30)")->check(CLI::PositiveNumber);
  bnd->add_option("--trials", cfg.trials, "Trials")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(bnd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp &e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(cfg, out);
    }
    if (ext->parsed()) {
      return cmd_extract(cfg, out, err);
    }
    if (ver->parsed()) {
      return cmd_verify(cfg, out);
    }
    if (ben->parsed()) {
      return cmd_bench(cfg, bench_delta->count() > 0, out);
    }
    return cmd_bound(cfg, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ExtractionError &e) {
    err << "extraction failed (" << to_string(e.kind()) << ") in phase "
        << (e.phase().empty() ? "unknown" : e.phase()) << ": " << e.what() << '\n';
    return e.kind() == FailureKind::kBudget ? kBudget : kAssumption;
  } catch (const GenerationError &e) {
    err << "generation failed: " << e.what() << '\n';
    return kAssumption;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kAssumption;
  }
}

int run(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace relex::cli
