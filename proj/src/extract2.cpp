#include "relex/extract2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "relex/error.hpp"

namespace relex {

namespace {

constexpr double kResidualSafety = 2.0;

double eval_neurons(const std::vector<Neurond> &neurons, const VectorXd &x) {
  double sum = 0.0;
  for (const auto &n : neurons) {
    sum += n(x);
  }
  return sum;
}

}  // namespace

double ExtractedTwoLayer::operator()(const VectorXd &x) const {
  return skip(x) + eval_neurons(neurons, x);
}

TwoLayerNetd ExtractedTwoLayer::to_network() const {
  return TwoLayerNetd(skip.dim(), neurons, skip);
}

double bracket_half_width(const std::vector<double> &kinks, std::size_t i,
                          double delta) {
  double nearest = kinks[i];  // distance to the origin
  if (i > 0) {
    nearest = std::min(nearest, kinks[i] - kinks[i - 1]);
  }
  if (i + 1 < kinks.size()) {
    nearest = std::min(nearest, kinks[i + 1] - kinks[i]);
  }
  return std::max(0.5 * nearest, 0.25 * delta);
}

std::vector<Bracket> axis_crossings(const QueryOracle &oracle, Index axis,
                                    double delta, int max_points,
                                    const SearchOptions &opts) {
  const Index d = oracle.dim();
  const QueryOracle line = restrict_to_ray(oracle, Rayd::axis(d, axis));
  const std::vector<double> kinks =
      all_critical_points_1d(line, delta, default_window(delta, true),
                             max_points, opts);
  std::vector<Bracket> brackets;
  brackets.reserve(kinks.size());
  for (std::size_t i = 0; i < kinks.size(); ++i) {
    Bracket br;
    br.axis = axis;
    br.rho = kinks[i];
    br.eps = bracket_half_width(kinks, i, delta);
    br.x1 = VectorXd::Unit(d, axis) * (br.rho - br.eps);
    br.x2 = VectorXd::Unit(d, axis) * (br.rho + br.eps);
    brackets.push_back(std::move(br));
  }
  return brackets;
}

std::optional<Bracket> find_neuron_crossing(const QueryOracle &oracle,
                                            double delta,
                                            const SearchOptions &opts) {
  for (Index i = 0; i < oracle.dim(); ++i) {
    auto brackets = axis_crossings(oracle, i, delta,
                                   std::numeric_limits<int>::max(), opts);
    if (!brackets.empty()) {
      return brackets.front();
    }
  }
  return std::nullopt;
}

int recover_sign_u(const QueryOracle &oracle, const VectorXd &x1,
                   const VectorXd &x2, const SearchOptions &opts) {
  const double f_mid = oracle(0.5 * (x1 + x2));
  const double second_difference = oracle(x1) + oracle(x2) - 2.0 * f_mid;
  if (!(std::abs(second_difference) > kink_threshold(f_mid, opts))) {
    throw ExtractionError(FailureKind::kGeneralPosition, "sign recovery",
                          "no kink in segment");
  }
  return second_difference > 0.0 ? 1 : -1;
}

Neurond recover_neuron(const QueryOracle &oracle, const VectorXd &x1,
                       const VectorXd &x2, double step,
                       const SearchOptions &opts, double *gradient_error) {
  const double reach = 0.25 * (x2 - x1).norm();
  double error1 = 0.0;
  double error2 = 0.0;
  const AffineMapd lambda1 =
      reconstruct_affine_refined(oracle, x1, step, reach, opts, &error1);
  const AffineMapd lambda2 =
      reconstruct_affine_refined(oracle, x2, step, reach, opts, &error2);
  if (gradient_error != nullptr) {
    *gradient_error = error1 + error2;
  }
  const AffineMapd lambda = lambda1 - lambda2;
  const double jump = std::abs(lambda(x2) - lambda(x1));
  if (!(jump > kink_threshold(lambda1(x1), opts))) {
    throw ExtractionError(FailureKind::kGeneralPosition, "neuron recovery",
                          "endpoints in same linear region");
  }
  const int u = recover_sign_u(oracle, x1, x2, opts);
  // Orient the neuron to be active at x2; the other orientation differs by
  // an affine function that the skip absorbs.
  const double s = u > 0 ? -1.0 : 1.0;
  return Neurond{s * lambda.w, s * lambda.b, u};
}

QueryOracle subtracted_oracle(const QueryOracle &oracle,
                              std::vector<Neurond> recovered) {
  return QueryOracle(oracle.dim(), oracle.domain(),
                     [oracle, recovered = std::move(recovered)](const VectorXd &x) {
                       return oracle(x) - eval_neurons(recovered, x);
                     });
}

ExtractedTwoLayer extract_two_layer(const QueryOracle &oracle,
                                    const TwoLayerOptions &opts) {
  if (oracle.domain() != Domain::kPositiveOrthant) {
    throw std::invalid_argument("extract_two_layer: oracle must be restricted "
                                "to the positive orthant");
  }
  const Index d = oracle.dim();
  const double delta = opts.delta;
  ExtractedTwoLayer result;
  std::vector<Neurond> &recovered = result.neurons;
  QueryOracle working = oracle;
  SearchOptions search = opts.search;
  std::vector<std::pair<double, double>> recovery_errors;  // (|x2|, |dw|)

  std::uint64_t mark = oracle.queries();
  auto charge = [&](const char *phase) {
    result.queries.add(phase, oracle.queries() - mark);
    mark = oracle.queries();
  };

  Index axis = 0;
  std::size_t previous_count = 0;
  bool rescan = false;
  while (axis < d) {
    const int remaining_budget =
        opts.max_neurons - static_cast<int>(recovered.size());
    std::vector<Bracket> brackets =
        axis_crossings(working, axis, delta, std::max(remaining_budget, 0), search);
    charge("search");
    if (brackets.empty()) {
      ++axis;
      rescan = false;
      continue;
    }
    if (rescan && brackets.size() >= previous_count) {
      throw ExtractionError(FailureKind::kGeneralPosition, "neuron recovery",
                            "subtraction did not remove the critical points on axis " +
                                std::to_string(axis));
    }
    for (const Bracket &br : brackets) {
      double error = 0.0;
      recovered.push_back(recover_neuron(working, br.x1, br.x2,
                                         affine_probe_step(br.eps, delta),
                                         search, &error));
      recovery_errors.emplace_back(br.x2.norm(), error);
      if (static_cast<int>(recovered.size()) > opts.max_neurons) {
        throw ExtractionError(FailureKind::kBudget, "neuron recovery",
                              "too many neurons");
      }
    }
    charge("neurons");
    working = subtracted_oracle(oracle, recovered);
    search = opts.search;
    for (const Neurond &n : recovered) {
      search.magnitude_slope += n.w.norm();
      search.magnitude_offset += std::abs(n.b);
    }
    // A recovered neuron off by dw in slope deviates from the true one by
    // at most |dw| (|x| + |x1|).
    for (const auto &[norm_x, error] : recovery_errors) {
      search.residual_slope_noise += kResidualSafety * error;
      search.residual_offset_noise += kResidualSafety * error * norm_x;
    }
    previous_count = brackets.size();
    rescan = true;
  }

  // The residual is affine on the orthant; any interior point will do.
  result.skip = reconstruct_affine(working, VectorXd::Ones(d), 1.0);
  charge("affine");

  if (opts.self_check_points > 0) {
    Rng rng(opts.seed ^ 0x5e1fc4ec5ULL);
    std::uniform_real_distribution<double> unif(0.0, opts.self_check_box);
    for (int k = 0; k < opts.self_check_points; ++k) {
      VectorXd x(d);
      for (Index i = 0; i < d; ++i) {
        x(i) = unif(rng);
      }
      const double truth = oracle(x);
      const double mine = result(x);
      const double rel = std::abs(truth - mine) /
                         (1.0 + std::max(std::abs(truth), std::abs(mine)));
      if (rel > opts.self_check_tol) {
        charge("self-check");
        throw ExtractionError(FailureKind::kGeneralPosition, "self-check",
                              "extracted network disagrees with the oracle "
                              "(relative error " + std::to_string(rel) +
                                  "); general position violated for this delta");
      }
    }
    charge("self-check");
  }
  return result;
}

}  // namespace relex
