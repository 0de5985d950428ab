#ifndef RELEX_EXTRACT2_HPP_
#define RELEX_EXTRACT2_HPP_

#include <optional>
#include <vector>

#include "relex/network.hpp"
#include "relex/oracle.hpp"
#include "relex/pwl.hpp"
#include "relex/report.hpp"

namespace relex {

struct TwoLayerOptions {
  double delta = 1e-4;
  int max_neurons = 4096;
  SearchOptions search;
  /// Random points in [0, self_check_box]^d compared against the oracle
  /// after extraction; 0 disables the check.
  int self_check_points = 16;
  double self_check_box = 10.0;
  double self_check_tol = 1e-6;
  std::uint64_t seed = 0;
};

/// N'(x) = skip(x) + sum_j u'_j relu(w'_j.x + b'_j) on the positive orthant.
struct ExtractedTwoLayer {
  AffineMapd skip;
  std::vector<Neurond> neurons;
  PhaseQueries queries;

  double operator()(const VectorXd &x) const;
  TwoLayerNetd to_network() const;
};

/// Segment [x1, x2] on axis `axis` across the critical point rho, with
/// half-width eps.
struct Bracket {
  VectorXd x1;
  VectorXd x2;
  Index axis = 0;
  double rho = 0.0;
  double eps = 0.0;
};

/// Half the distance from kinks[i] to its nearest neighbour (the origin
/// counts as one), floored at delta/4.
double bracket_half_width(const std::vector<double> &kinks, std::size_t i,
                          double delta);

/// Step for the affine reconstructions at bracket endpoints.
inline double affine_probe_step(double eps, double delta) {
  return std::min(delta, eps / 8.0);
}

/// Brackets around every critical point of t -> oracle(t e_axis), t in
/// [0, 1/delta).
std::vector<Bracket> axis_crossings(const QueryOracle &oracle, Index axis,
                                    double delta, int max_points,
                                    const SearchOptions &opts = {});

/// First bracket found scanning axes 0..d-1, or nullopt if every axis
/// restriction is affine.
std::optional<Bracket> find_neuron_crossing(const QueryOracle &oracle,
                                            double delta,
                                            const SearchOptions &opts = {});

/// +1 if the restriction to [x1, x2] is convex, -1 if concave.
int recover_sign_u(const QueryOracle &oracle, const VectorXd &x1,
                   const VectorXd &x2, const SearchOptions &opts = {});

/// (w', b', u') from the affine maps near x1 and x2: w'.x + b' is
/// u' (Lambda_2 - Lambda_1), so the neuron is active at x2. Equal to the true
/// neuron up to an affine function.
/// `gradient_error`, if given, receives a bound on the error of w'.
Neurond recover_neuron(const QueryOracle &oracle, const VectorXd &x1,
                       const VectorXd &x2, double step,
                       const SearchOptions &opts = {},
                       double *gradient_error = nullptr);

/// x -> oracle(x) - sum u' relu(w'.x + b'). One underlying query per call.
QueryOracle subtracted_oracle(const QueryOracle &oracle,
                              std::vector<Neurond> recovered);

/**
 * Recovers a depth-2 network from queries on the positive orthant: scan
 * axes for critical points, recover each neuron (sign by convexity,
 * hyperplane from the affine maps on both sides), subtract, and read the
 * remaining affine function once no axis has a critical point.
 */
ExtractedTwoLayer extract_two_layer(const QueryOracle &oracle,
                                    const TwoLayerOptions &opts = {});

}  // namespace relex

#endif  // RELEX_EXTRACT2_HPP_
