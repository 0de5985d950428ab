#ifndef RELEX_GENERATE_HPP_
#define RELEX_GENERATE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relex/network.hpp"
#include "relex/extract3.hpp"
#include "relex/pwl.hpp"

namespace relex {

struct GeneratorOptions {
  /// Whole-network resamples before giving up.
  int max_attempts = 100;
  /// Resamples of a single depth-2 neuron until its hyperplane meets a
  /// positive axis inside the search window.
  int max_neuron_attempts = 10000;
  double unit_norm_tolerance = 1e-12;
  double rank_tolerance = 1e-2;
  double min_second_layer_weight = 1e-3;
  /// Every point of the positive orthant must keep some second-layer
  /// neuron at least this far above zero.
  double alive_margin = 1e-3;
  int partial_probes = 256;
  double partial_probe_box = 10.0;
  double min_partial = 1e-3;
  /// Minimum slope change at a critical point of an axis restriction, and
  /// minimum slope/offset difference between pieces of one restriction.
  double slope_gap = 1e-6;
  /// Hidden-unit offset used by depth-3 extraction; the top layers are
  /// checked as seen from the shifted orthant.
  double peel_shift = kDefaultPeelShift;
  /// Minimum gap between sorted first-layer offsets, so the recovered rows
  /// come out in the same order as the true ones.
  double offset_gap = 1e-6;
  SearchOptions search;
};

/// A ground-truth critical point of an axis restriction of a depth-2 net.
struct AxisCrossing {
  Index axis;
  Index neuron;
  double rho;
};

/// Critical points t > 0 of t -> net(t e_i), for every axis, ascending per
/// axis.
std::vector<AxisCrossing> ground_truth_axis_crossings(const TwoLayerNetd &net);

/// Conditions a depth-2 net must meet for extraction at this delta, or
/// nullopt if all hold. With require_axis_crossing, every neuron's
/// hyperplane must meet some positive axis.
std::optional<std::string> two_layer_violation(const TwoLayerNetd &net,
                                               double delta,
                                               bool require_axis_crossing,
                                               const GeneratorOptions &opts = {});

/// A ground-truth critical point of t -> net(t e_axis) for a depth-3 net.
struct LineKink {
  double t;
  int layer;    // 1 or 2
  Index index;  // neuron index within its layer
  double slope_left;
  double slope_right;
};

/// Critical points of t -> net(t e_axis) with |t| < limit, ascending.
/// First-layer crossings whose slope change vanishes are omitted.
std::vector<LineKink> line_kinks(const ThreeLayerNetd &net, Index axis,
                                 double limit);

std::optional<std::string> three_layer_violation(const ThreeLayerNetd &net,
                                                 double delta,
                                                 const GeneratorOptions &opts = {},
                                                 std::uint64_t probe_seed = 0);

/**
 * Sampled check that F(x) = u^T relu(V x + c) has non-zero one-sided
 * derivatives along +-e_j at n_probes random points of (0, box]^{d1}.
 * A false return is certain; a true return is probabilistic.
 */
bool check_nonzero_partials(const MatrixXd &V, const VectorXd &c,
                            const VectorXd &u, int n_probes, std::uint64_t seed,
                            double box = 10.0, double zero_tol = 1e-9);

/// max over x >= 0 of min_k -(V_k x + c_k), capped at 1: positive iff some
/// point of the positive orthant switches every second-layer neuron off.
double dead_region_depth(const MatrixXd &V, const VectorXd &c);

TwoLayerNetd generate_two_layer(Index d, Index d1, double delta,
                                std::uint64_t seed,
                                const GeneratorOptions &opts = {});

ThreeLayerNetd generate_three_layer(Index d, Index d1, Index d2, double delta,
                                    std::uint64_t seed,
                                    const GeneratorOptions &opts = {});

}  // namespace relex

#endif  // RELEX_GENERATE_HPP_
