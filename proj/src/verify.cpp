#include "relex/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "relex/error.hpp"
#include "relex/extract2.hpp"
#include "relex/extract3.hpp"
#include "relex/generate.hpp"
#include "relex/lp.hpp"
#include "relex/oracle.hpp"
#include "relex/pwl.hpp"

namespace relex {

namespace {

constexpr double kOrthantMargin = 1e-9;

Rng trial_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace

void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)> &fn) {
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) {
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto &t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

std::string Box::describe() const {
  std::ostringstream os;
  os << "[" << lo << ", " << hi << "]^d";
  return os.str();
}

std::ostream &operator<<(std::ostream &os, const EquivalenceReport &r) {
  os << (r.pass ? "PASS" : "FAIL") << " samples=" << r.n_samples
     << " domain=" << r.domain.describe() << " max_abs_error=" << r.max_abs_error
     << " max_rel_error=" << r.max_rel_error << " tau=" << r.tau;
  return os;
}

EquivalenceReport functional_equivalence(const Evaluable &a, const Evaluable &b,
                                         Index dim, Box box, std::size_t n_samples,
                                         double tau, std::uint64_t seed,
                                         unsigned workers) {
  if (dim < 1) {
    throw std::invalid_argument("functional_equivalence: dimension must be >= 1");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(box.lo, box.hi);
  MatrixXd points(dim, static_cast<Index>(n_samples));
  for (Index k = 0; k < points.cols(); ++k) {
    for (Index i = 0; i < dim; ++i) {
      points(i, k) = unif(rng);
    }
  }
  std::vector<double> abs_err(n_samples);
  std::vector<double> rel_err(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t k) {
    const VectorXd x = points.col(static_cast<Index>(k));
    const double fa = a(x);
    const double fb = b(x);
    abs_err[k] = std::abs(fa - fb);
    rel_err[k] = abs_err[k] / (1.0 + std::max(std::abs(fa), std::abs(fb)));
  });

  EquivalenceReport report;
  report.n_samples = n_samples;
  report.domain = box;
  report.tau = tau;
  for (std::size_t k = 0; k < n_samples; ++k) {
    // NaN compares false; record it as an infinite error.
    report.max_abs_error = std::max(report.max_abs_error,
                                    std::isnan(abs_err[k]) ? INFINITY : abs_err[k]);
    report.max_rel_error = std::max(report.max_rel_error,
                                    std::isnan(rel_err[k]) ? INFINITY : rel_err[k]);
  }
  report.pass = report.max_rel_error <= tau;
  return report;
}

bool intersects_negative_orthant(const MatrixXd &W, const VectorXd &b) {
  const Index rows = W.rows();
  const Index d = W.cols();
  if (b.size() != rows) {
    throw std::invalid_argument("intersects_negative_orthant: size mismatch");
  }
  if (!W.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("intersects_negative_orthant: non-finite entry");
  }
  // Variables (x, t), all free.
  LinearProgram lp;
  lp.A = MatrixXd::Zero(rows + 1, d + 1);
  lp.A.topLeftCorner(rows, d) = W;
  lp.A.col(d).head(rows).setOnes();
  lp.A(rows, d) = 1.0;
  lp.b.resize(rows + 1);
  lp.b.head(rows) = -b;
  lp.b(rows) = 1.0;
  lp.c = VectorXd::Unit(d + 1, d);
  lp.free_vars.assign(static_cast<std::size_t>(d + 1), true);
  const LpResult result = solve_lp(lp);
  if (result.status != LpStatus::kOptimal) {
    throw std::runtime_error("intersects_negative_orthant: LP did not reach an optimum");
  }
  return result.value > kOrthantMargin;
}

double orthant_bound(Index d, Index d1) {
  if (d < 1 || d1 < 1) {
    throw std::invalid_argument("orthant_bound: dimensions must be >= 1");
  }
  const double dd = static_cast<double>(d);
  const double dd1 = static_cast<double>(d1);
  return std::exp((dd + 1.0) * std::log(std::numbers::e * dd1 / dd) - dd1 * std::log(2.0));
}

double BoundExperiment::sigma() const {
  const double p = std::min(bound, 1.0);
  return trials == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

BoundExperiment empirical_orthant_bound(Index d, Index d1, std::uint64_t trials,
                                        std::uint64_t seed, unsigned workers) {
  if (trials < 1) {
    throw std::invalid_argument("empirical_orthant_bound: trials must be >= 1");
  }
  std::vector<char> hit(trials, 0);
  parallel_for(trials, workers, [&](std::size_t k) {
    Rng rng = trial_rng(seed, k);
    std::normal_distribution<double> normal;
    MatrixXd W(d1, d);
    VectorXd b(d1);
    for (Index j = 0; j < d1; ++j) {
      for (Index i = 0; i < d; ++i) {
        W(j, i) = normal(rng);
      }
      b(j) = normal(rng);
    }
    hit[k] = intersects_negative_orthant(W, b) ? 1 : 0;
  });
  BoundExperiment out;
  out.d = d;
  out.d1 = d1;
  out.trials = trials;
  out.hits = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
  out.rate = static_cast<double>(out.hits) / static_cast<double>(trials);
  out.bound = orthant_bound(d, d1);
  return out;
}

double complexity_bound(const BenchCell &cell) {
  const double bits = std::log2(1.0 / cell.delta);
  const double d = static_cast<double>(cell.d);
  const double d1 = static_cast<double>(cell.d1);
  if (cell.depth == 2) {
    return d * d1 * bits;
  }
  const double d2 = static_cast<double>(cell.d2);
  return d * d1 * d2 * bits + d1 * d1 * d2 * d2;
}

bool BenchTable::fits(double factor) const {
  bool any = false;
  for (const BenchRow &row : rows) {
    if (!row.generated) {
      continue;
    }
    any = true;
    if (!row.ok || static_cast<double>(row.queries) > calibrated(factor) * row.bound) {
      return false;
    }
  }
  return any && worst_residual <= factor;
}

void BenchTable::write_csv(std::ostream &os) const {
  std::vector<std::string> phases;
  for (const BenchRow &row : rows) {
    for (const auto &[name, n] : row.phases) {
      if (std::find(phases.begin(), phases.end(), name) == phases.end()) {
        phases.push_back(name);
      }
    }
  }
  os << "depth,d,d1,d2,delta,seed,generated,ok,queries,bound";
  for (const std::string &p : phases) {
    os << ",q_" << p;
  }
  os << ",error\n";
  for (const BenchRow &row : rows) {
    os << row.cell.depth << ',' << row.cell.d << ',' << row.cell.d1 << ','
       << row.cell.d2 << ',' << row.cell.delta << ',' << row.seed << ','
       << (row.generated ? 1 : 0) << ',' << (row.ok ? 1 : 0) << ',' << row.queries << ',' << row.bound;
    for (const std::string &p : phases) {
      std::uint64_t n = 0;
      for (const auto &[name, count] : row.phases) {
        if (name == p) {
          n = count;
        }
      }
      os << ',' << n;
    }
    std::string error = row.error;
    std::replace(error.begin(), error.end(), ',', ';');
    os << ',' << error << '\n';
  }
  for (const BenchSummary &c : cells) {
    os << "# cell depth=" << c.cell.depth << " d=" << c.cell.d << " d1=" << c.cell.d1
       << " d2=" << c.cell.d2 << " delta=" << c.cell.delta << " runs=" << c.runs
       << " mean_queries=" << c.mean_queries << " bound=" << c.bound
       << " residual=" << c.residual << '\n';
  }
  os << "# fitted_constant=" << constant << " worst_residual=" << worst_residual << '\n';
}

BenchTable query_complexity_bench(const std::vector<BenchCell> &cells,
                                  const std::vector<std::uint64_t> &seeds,
                                  unsigned workers) {
  BenchTable table;
  for (const BenchCell &cell : cells) {
    for (std::uint64_t seed : seeds) {
      BenchRow row;
      row.cell = cell;
      row.seed = seed;
      row.bound = complexity_bound(cell);
      table.rows.push_back(std::move(row));
    }
  }
  parallel_for(table.rows.size(), workers, [&](std::size_t k) {
    BenchRow &row = table.rows[k];
    const BenchCell &cell = row.cell;
    try {
      if (cell.depth == 2) {
        const TwoLayerNetd net = generate_two_layer(cell.d, cell.d1, cell.delta, row.seed);
        row.generated = true;
        const QueryOracle oracle = as_oracle(net);
        TwoLayerOptions opts;
        opts.delta = cell.delta;
        const ExtractedTwoLayer ex = extract_two_layer(oracle, opts);
        row.phases = ex.queries.entries();
        row.queries = oracle.queries();
      } else {
        const ThreeLayerNetd net =
            generate_three_layer(cell.d, cell.d1, cell.d2, cell.delta, row.seed);
        row.generated = true;
        const QueryOracle oracle = as_oracle(net);
        ThreeLayerOptions opts;
        opts.delta = cell.delta;
        opts.seed = row.seed;
        const ExtractedThreeLayer ex = extract_three_layer(oracle, opts);
        row.phases = ex.queries.entries();
        row.queries = oracle.queries();
      }
      row.ok = true;
    } catch (const std::exception &e) {
      row.error = e.what();
    }
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    BenchSummary summary;
    summary.cell = cells[c];
    summary.bound = complexity_bound(cells[c]);
    double sum = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const BenchRow &row = table.rows[c * seeds.size() + k];
      if (row.ok) {
        sum += static_cast<double>(row.queries);
        ++summary.runs;
      }
    }
    if (summary.runs > 0) {
      summary.mean_queries = sum / static_cast<double>(summary.runs);
    }
    table.cells.push_back(summary);
  }

  double log_sum = 0.0;
  std::size_t n = 0;
  for (const BenchSummary &c : table.cells) {
    if (c.runs > 0) {
      log_sum += std::log(c.mean_queries / c.bound);
      ++n;
    }
  }
  if (n > 0) {
    table.constant = std::exp(log_sum / static_cast<double>(n));
    for (BenchSummary &c : table.cells) {
      if (c.runs > 0) {
        c.residual = c.mean_queries / c.bound / table.constant;
        table.worst_residual =
            std::max(table.worst_residual, std::max(c.residual, 1.0 / c.residual));
      }
    }
  }
  return table;
}

}  // namespace relex
