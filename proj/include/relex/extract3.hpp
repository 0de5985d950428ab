#ifndef RELEX_EXTRACT3_HPP_
#define RELEX_EXTRACT3_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "relex/extract2.hpp"
#include "relex/network.hpp"
#include "relex/oracle.hpp"
#include "relex/pwl.hpp"
#include "relex/report.hpp"

namespace relex {

/// Offset added to every hidden unit by peel_first_layer during extraction.
/// Keeps the peeled oracle's axes off the first-layer planes, where tiny
/// errors in the recovered rows would otherwise create spurious kinks.
inline constexpr double kDefaultPeelShift = 1e-3;

struct ThreeLayerOptions {
  double delta = 1e-4;
  double peel_shift = kDefaultPeelShift;
  /// Budget on critical points along one probe line.
  int max_candidates = 4096;
  /// Fresh base points tried per row during sign recovery.
  int sign_retries = 32;
  /// Smallest singular value accepted for the signed first layer.
  double rank_tolerance = 1e-8;
  /// Retry on further axes when the probe line misses a first-layer plane.
  bool axis_fallback = true;
  int self_check_points = 16;
  double self_check_box = 5.0;
  double self_check_tol = 1e-6;
  std::uint64_t seed = 0;
  SearchOptions search;
  /// Options for the depth-2 extraction of the peeled oracle; its delta is
  /// overridden by `delta`.
  TwoLayerOptions top;
};

/// Critical hyperplanes met by a probe line, deduplicated in canonical form.
struct CandidateList {
  std::vector<Hyperplaned> hyperplanes;
  /// Critical point on the probe line that produced each hyperplane.
  std::vector<VectorXd> points;

  std::size_t size() const { return hyperplanes.size(); }
};

/// Canonical-form tolerance under which two candidates are the same plane.
inline constexpr double kCandidateDedupTolerance = 1e-7;

CandidateList collect_candidate_hyperplanes(const QueryOracle &oracle,
                                            double delta, int m_max, Index axis,
                                            Rng &rng,
                                            const SearchOptions &opts = {});

/**
 * True when every tested point of `plane` is critical. For each other
 * candidate crossing `plane`, points of `plane` are taken 4, 32 and 256
 * delta on either side of it, perturbed inside the plane, and tested with
 * is_critical_point. Parallel candidates are skipped.
 */
bool is_first_layer_plane(const QueryOracle &oracle, const Hyperplaned &plane,
                          const std::vector<Hyperplaned> &others, double delta,
                          Rng &rng, const SearchOptions &opts = {});

struct SignedRows {
  MatrixXd W;
  VectorXd b;
  /// Rows whose canonical orientation was reversed.
  int flipped = 0;
};

SignedRows recover_row_signs(const QueryOracle &oracle,
                             const std::vector<Hyperplaned> &planes, double eps,
                             double delta, int retries, Rng &rng,
                             const SearchOptions &opts = {});

/// Row order used for the recovered first layer: ascending offset. The
/// hidden units are otherwise in probe-line order, which depends on the axis.
std::vector<Index> hidden_unit_order(const VectorXd &b);

/// Minimum-norm right inverse. Throws ExtractionError(kAssumption) when the
/// smallest singular value is below rank_tolerance.
MatrixXd right_inverse(const MatrixXd &W, double rank_tolerance = 1e-8);

/// h -> oracle(M (h + shift 1 - b)) on the positive orthant of R^{d1}, M the
/// right inverse of W. Equals the top two layers at h + shift 1 when (W, b)
/// is exact.
QueryOracle peel_first_layer(const QueryOracle &oracle, const MatrixXd &W,
                             const VectorXd &b, double rank_tolerance = 1e-8,
                             double shift = 0.0);

struct ExtractedThreeLayer {
  MatrixXd W;
  VectorXd b;
  ExtractedTwoLayer top;
  PhaseQueries queries;
  Index probe_axis = 0;
  std::size_t candidates = 0;
  int flipped = 0;

  double operator()(const VectorXd &x) const;
  ThreeLayerNetd to_network() const;
};

ExtractedThreeLayer extract_three_layer(const QueryOracle &oracle,
                                        const ThreeLayerOptions &opts = {});

}  // namespace relex

#endif  // RELEX_EXTRACT3_HPP_
