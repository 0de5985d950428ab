#ifndef RELEX_PWL_HPP_
#define RELEX_PWL_HPP_

#include <optional>
#include <random>
#include <vector>

#include "relex/affine.hpp"
#include "relex/hyperplane.hpp"
#include "relex/oracle.hpp"

namespace relex {

using Rng = std::mt19937_64;

/// Numeric knobs shared by every black-box search.
struct SearchOptions {
  /// Probe offset for "left proximity" affine pieces, in units of delta.
  double probe_fraction = 0.25;
  /// Value comparisons tolerate this many machine epsilons of the operands'
  /// magnitude (scaled by extrapolation distance).
  double noise_factor = 1024.0;
  /// Second-difference threshold coefficient: kink iff |d2f| > coef*(1+|f|).
  double kink_tolerance = 1e-9;
  int hyperplane_retries = 8;
  int critical_directions = 8;
  /// Magnitude of terms already cancelled out of the oracle value, as
  /// |value| <= magnitude_slope * |x| + magnitude_offset. Rounding noise of a
  /// residual scales with these rather than with the residual itself.
  double magnitude_slope = 0.0;
  double magnitude_offset = 0.0;
  /// Error of cancelled terms: a residual may deviate from the underlying
  /// function by up to residual_offset_noise + residual_slope_noise * |x|.
  double residual_slope_noise = 0.0;
  double residual_offset_noise = 0.0;
  Tolerance tol;
};

/// Search interval [lo, hi] on a line.
struct Window {
  double lo;
  double hi;
};

/// (-1/delta, 1/delta), or [0, 1/delta) on the positive half-line.
Window default_window(double delta, bool positive_half_line);

/// ceil(log2(2/delta^2)) + 1.
int bisection_rounds(double delta);

double kink_threshold(double value, const SearchOptions &opts);

VectorXd random_unit_vector(Index dim, Rng &rng);

/**
 * Affine map agreeing with the oracle near x, from the d+1 queries
 * f(x), f(x + step e_1), ..., f(x + step e_d). The oracle must be affine on
 * B(x, 2 step); this cannot be checked locally.
 */
AffineMapd reconstruct_affine(const QueryOracle &oracle, const VectorXd &x,
                              double step);

/// Like reconstruct_affine with `safe_step`, then each partial is retried
/// with steps growing towards `max_step`, each kept only while it agrees
/// with the previous one to rounding accuracy. If `gradient_error` is given
/// it receives a bound on the 2-norm error of the gradient.
AffineMapd reconstruct_affine_refined(const QueryOracle &oracle,
                                      const VectorXd &x, double safe_step,
                                      double max_step,
                                      const SearchOptions &opts = {},
                                      double *gradient_error = nullptr);

/**
 * Leftmost critical point of a 1-D piecewise linear function inside
 * `window`, or nullopt if the function is affine there. Bisects for
 * bisection_rounds(delta) rounds, comparing the affine piece to the left of
 * the midpoint with the leftmost piece, then intersects the two pieces
 * adjacent to the located kink.
 *
 * Requires every piece to be at least delta long and the first piece to
 * extend at least probe_fraction*delta past window.lo. Throws
 * ExtractionError(kGeneralPosition) when the bracketing pieces coincide.
 */
std::optional<double> leftmost_critical_point_1d(const QueryOracle &line,
                                                 double delta, Window window,
                                                 const SearchOptions &opts = {});

/// All critical points in the window, ascending. Throws kBudget when more
/// than k_max are found.
std::vector<double> all_critical_points_1d(const QueryOracle &line, double delta,
                                           Window window, int k_max,
                                           const SearchOptions &opts = {});

/**
 * Critical hyperplane through the critical point x: the zero set of
 * Lambda_1 - Lambda_2, the affine maps on either side of x along a random
 * direction (then re-probed along the estimated normal). B(x, 2 delta) must
 * meet a single critical hyperplane. Full-domain oracles only.
 */
Hyperplaned reconstruct_critical_hyperplane(const QueryOracle &oracle,
                                            const VectorXd &x, double delta,
                                            Rng &rng,
                                            const SearchOptions &opts = {});

/// True iff some of n_dirs random lines through x has a second difference
/// (step delta) above kink_threshold.
bool is_critical_point(const QueryOracle &oracle, const VectorXd &x,
                       double delta, int n_dirs, Rng &rng,
                       const SearchOptions &opts = {});

}  // namespace relex

#endif  // RELEX_PWL_HPP_
