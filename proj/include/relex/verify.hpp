#ifndef RELEX_VERIFY_HPP_
#define RELEX_VERIFY_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "relex/types.hpp"

namespace relex {

using Evaluable = std::function<double(const VectorXd &)>;

/// Axis-aligned sampling box [lo, hi]^d.
struct Box {
  double lo = 0.0;
  double hi = 10.0;

  std::string describe() const;
};

/// Defaults for the two depths: the positive orthant for depth 2, the full
/// space for depth 3.
inline constexpr Box kDepthTwoBox{0.0, 10.0};
inline constexpr Box kDepthThreeBox{-5.0, 5.0};

struct EquivalenceReport {
  std::size_t n_samples = 0;
  double max_abs_error = 0.0;
  /// |a - b| / (1 + max(|a|, |b|)), maximized over the samples.
  double max_rel_error = 0.0;
  Box domain;
  double tau = 0.0;
  bool pass = true;
};

std::ostream &operator<<(std::ostream &os, const EquivalenceReport &r);

/// Compares two evaluables on n_samples uniform points of box^dim. Points
/// are drawn up front from `seed`, so the result does not depend on
/// `workers` (0 means hardware concurrency).
EquivalenceReport functional_equivalence(const Evaluable &a, const Evaluable &b,
                                         Index dim, Box box, std::size_t n_samples,
                                         double tau, std::uint64_t seed,
                                         unsigned workers = 1);

/// True iff some x has W x + b < 0 componentwise, decided by the LP
/// max t s.t. W x + t 1 <= -b, t <= 1 (x, t free) with margin t* > 1e-9.
bool intersects_negative_orthant(const MatrixXd &W, const VectorXd &b);

/// (e d1 / d)^(d+1) / 2^d1. May exceed 1.
double orthant_bound(Index d, Index d1);

struct BoundExperiment {
  Index d = 0;
  Index d1 = 0;
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  double rate = 0.0;
  double bound = 0.0;

  /// Binomial standard deviation of the rate at probability min(bound, 1).
  double sigma() const;
  bool within(double n_sigma = 3.0) const { return rate <= bound + n_sigma * sigma(); }
};

/// Standard-normal (W, b) per trial, each trial seeded from (seed, index).
BoundExperiment empirical_orthant_bound(Index d, Index d1, std::uint64_t trials,
                                        std::uint64_t seed, unsigned workers = 0);

/// One grid cell of the query-complexity benchmark.
struct BenchCell {
  int depth = 2;
  Index d = 2;
  Index d1 = 1;
  Index d2 = 0;
  double delta = 1e-4;
};

/// d d1 log2(1/delta) for depth 2; d d1 d2 log2(1/delta) + d1^2 d2^2 for
/// depth 3.
double complexity_bound(const BenchCell &cell);

struct BenchRow {
  BenchCell cell;
  std::uint64_t seed = 0;
  /// False when the generator rejected every candidate for this seed; such
  /// rows carry no measurement and are left out of the fit.
  bool generated = false;
  bool ok = false;
  std::string error;
  std::uint64_t queries = 0;
  std::vector<std::pair<std::string, std::uint64_t>> phases;
  double bound = 0.0;
};

/// Mean over the successful seeds of one cell.
struct BenchSummary {
  BenchCell cell;
  std::size_t runs = 0;
  double mean_queries = 0.0;
  double bound = 0.0;
  /// (mean_queries / bound) / fitted constant.
  double residual = 0.0;
};

struct BenchTable {
  std::vector<BenchRow> rows;
  std::vector<BenchSummary> cells;
  /// Geometric mean of mean_queries / bound over cells with a success.
  double constant = 0.0;
  double worst_residual = 1.0;  // max(r, 1/r) over cells

  /// Calibrated constant: every count must stay below it times the bound.
  double calibrated(double factor = 2.0) const { return factor * constant; }
  /// Every generated instance was extracted, cell residuals are within `factor` of the fit, and
  /// every count is at most calibrated(factor) * bound.
  bool fits(double factor = 2.0) const;
  void write_csv(std::ostream &os) const;
};

/// Generates and extracts one instance per (cell, seed). Failures are
/// recorded per row.
BenchTable query_complexity_bench(const std::vector<BenchCell> &cells,
                                  const std::vector<std::uint64_t> &seeds,
                                  unsigned workers = 0);

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 means hardware
/// concurrency).
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)> &fn);

}  // namespace relex

#endif  // RELEX_VERIFY_HPP_
