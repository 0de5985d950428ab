#include "relex/pwl.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "relex/error.hpp"

namespace relex {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Sample {
  double t;
  double f;
};

// Line through two samples, with a rounding-noise model for its predictions.
class Chord {
 public:
  Chord(Sample a, Sample b, const SearchOptions &opts)
      : a_(a), b_(b), hidden_slope_(opts.magnitude_slope),
        hidden_offset_(opts.magnitude_offset),
        residual_slope_(opts.residual_slope_noise),
        residual_offset_(opts.residual_offset_noise) {}

  double slope() const { return (b_.f - a_.f) / (b_.t - a_.t); }
  double value(double t) const { return a_.f + slope() * (t - a_.t); }

  // Magnitude scale of the rounding error carried by a sample of f at t.
  double scale(double t, double f) const {
    return std::abs(f) + std::abs(t) * (std::abs(slope()) + hidden_slope_) +
           hidden_offset_ + 1.0;
  }

  double residual(double t) const {
    return residual_offset_ + residual_slope_ * std::abs(t);
  }

  double tolerance(double t, double f, double noise_factor) const {
    const double span = std::abs(b_.t - a_.t);
    const double reach = 1.0 + std::abs(t - a_.t) / span;
    return noise_factor * kEps *
               ((scale(a_.t, a_.f) + scale(b_.t, b_.f)) * reach + scale(t, f)) +
           residual(a_.t) + residual(b_.t) + residual(t);
  }

  double slope_noise(double noise_factor) const {
    return noise_factor * kEps * (scale(a_.t, a_.f) + scale(b_.t, b_.f)) /
               std::abs(b_.t - a_.t) +
           residual_slope_;
  }

  bool contains(double t, double f, double noise_factor) const {
    return std::abs(f - value(t)) <= tolerance(t, f, noise_factor);
  }

  const Sample &anchor() const { return a_; }

 private:
  Sample a_;
  Sample b_;
  double hidden_slope_;
  double hidden_offset_;
  double residual_slope_;
  double residual_offset_;
};

}  // namespace

Window default_window(double delta, bool positive_half_line) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("delta must be positive");
  }
  return positive_half_line ? Window{0.0, 1.0 / delta}
                            : Window{-1.0 / delta, 1.0 / delta};
}

int bisection_rounds(double delta) {
  return static_cast<int>(std::ceil(std::log2(2.0 / (delta * delta)))) + 1;
}

double kink_threshold(double value, const SearchOptions &opts) {
  return opts.kink_tolerance * (1.0 + std::abs(value));
}

VectorXd random_unit_vector(Index dim, Rng &rng) {
  std::normal_distribution<double> normal;
  VectorXd v(dim);
  do {
    for (Index i = 0; i < dim; ++i) {
      v(i) = normal(rng);
    }
  } while (v.norm() < 1e-12);
  return v.normalized();
}

AffineMapd reconstruct_affine(const QueryOracle &oracle, const VectorXd &x,
                              double step) {
  const Index d = x.size();
  const double f0 = oracle(x);
  VectorXd w(d);
  VectorXd probe = x;
  for (Index i = 0; i < d; ++i) {
    probe(i) = x(i) + step;
    w(i) = (oracle(probe) - f0) / step;
    probe(i) = x(i);
  }
  return AffineMapd(std::move(w), f0 - w.dot(x));
}

AffineMapd reconstruct_affine_refined(const QueryOracle &oracle,
                                      const VectorXd &x, double safe_step,
                                      double max_step,
                                      const SearchOptions &opts,
                                      double *gradient_error) {
  constexpr double kGrow = 8.0;
  constexpr double kAgreement = 8.0;
  const Index d = x.size();
  const double f0 = oracle(x);
  const double hidden =
      2.0 * (opts.magnitude_slope * x.norm() + opts.magnitude_offset);
  auto noise = [&](double f, double step) {
    return kAgreement * kEps * (std::abs(f0) + std::abs(f) + hidden + 1.0) / step;
  };
  VectorXd w(d);
  double squared_error = 0.0;
  VectorXd probe = x;
  for (Index i = 0; i < d; ++i) {
    double step = safe_step;
    probe(i) = x(i) + step;
    double f = oracle(probe);
    w(i) = (f - f0) / step;
    double current = noise(f, step);
    double error = current;
    while (step * kGrow <= max_step) {
      const double longer = step * kGrow;
      probe(i) = x(i) + longer;
      const double f_long = oracle(probe);
      const double slope = (f_long - f0) / longer;
      if (std::abs(slope - w(i)) > current) {
        break;
      }
      w(i) = slope;
      step = longer;
      const double next = noise(f_long, step);
      error = current + next;
      current = next;
    }
    squared_error += error * error;
    probe(i) = x(i);
  }
  if (gradient_error != nullptr) {
    *gradient_error = std::sqrt(squared_error);
  }
  return AffineMapd(std::move(w), f0 - w.dot(x));
}

std::optional<double> leftmost_critical_point_1d(const QueryOracle &line,
                                                 double delta, Window window,
                                                 const SearchOptions &opts) {
  if (line.dim() != 1) {
    throw std::invalid_argument("leftmost_critical_point_1d: oracle must be 1-D");
  }
  const double h = opts.probe_fraction * delta;
  if (!(window.hi - window.lo > 2.0 * h)) {
    throw std::invalid_argument("leftmost_critical_point_1d: window too narrow");
  }
  const double kappa = opts.noise_factor;

  const Sample anchor{window.lo, eval_line(line, window.lo)};
  Sample verified{window.lo + h, eval_line(line, window.lo + h)};
  Chord left(anchor, verified, opts);

  double x_left = verified.t;
  double x_right = window.hi;
  bool found = false;

  const int rounds = bisection_rounds(delta);
  for (int round = 0; round < rounds; ++round) {
    const double mid = 0.5 * (x_left + x_right);
    const double probe = std::max(mid - h, window.lo);
    const double f_probe = eval_line(line, probe);
    const double f_mid = eval_line(line, mid);
    // The local slope is well conditioned even where extrapolating the left
    // chord to the midpoint is not.
    const Chord local({probe, f_probe}, {mid, f_mid}, opts);
    const bool same_slope = std::abs(local.slope() - left.slope()) <=
                            local.slope_noise(kappa) + left.slope_noise(kappa);
    if (same_slope && left.contains(probe, f_probe, kappa) &&
        left.contains(mid, f_mid, kappa)) {
      verified = Sample{mid, f_mid};
      left = Chord(anchor, verified, opts);
      x_left = mid;
    } else {
      x_right = mid;
      found = true;
    }
  }
  if (!found) {
    return std::nullopt;
  }

  const Sample r0{x_right, eval_line(line, x_right)};
  const Sample r1{x_right + h, eval_line(line, x_right + h)};
  const Chord right(r0, r1, opts);

  const double s_left = left.slope();
  const double s_right = right.slope();
  const double gap = s_left - s_right;
  const double gap_tol =
      std::max(opts.tol.abs + opts.tol.rel * std::max(std::abs(s_left),
                                                      std::abs(s_right)),
               left.slope_noise(kappa) + right.slope_noise(kappa));
  if (std::abs(gap) <= gap_tol) {
    throw ExtractionError(FailureKind::kGeneralPosition, "critical point search",
                          "pieces share affine function near t=" +
                              std::to_string(x_right));
  }
  const double t_star = x_right + (r0.f - left.value(x_right)) / gap;
  if (!(t_star >= x_left - delta && t_star <= x_right + delta)) {
    throw ExtractionError(FailureKind::kGeneralPosition, "critical point search",
                          "adjacent pieces intersect outside the bracket near t=" +
                              std::to_string(x_right));
  }
  return t_star;
}

std::vector<double> all_critical_points_1d(const QueryOracle &line, double delta,
                                           Window window, int k_max,
                                           const SearchOptions &opts) {
  std::vector<double> points;
  const double h = opts.probe_fraction * delta;
  double lo = window.lo;
  while (window.hi - lo > 2.0 * h) {
    const auto p = leftmost_critical_point_1d(line, delta, {lo, window.hi}, opts);
    if (!p) {
      break;
    }
    if (!points.empty() && *p <= points.back()) {
      throw ExtractionError(FailureKind::kGeneralPosition, "critical point search",
                            "critical points out of order; pieces shorter than delta");
    }
    points.push_back(*p);
    if (static_cast<int>(points.size()) > k_max) {
      throw ExtractionError(FailureKind::kBudget, "critical point search",
                            "piece budget exceeded (" + std::to_string(k_max) + ")");
    }
    lo = *p + 0.5 * delta;
  }
  return points;
}

Hyperplaned reconstruct_critical_hyperplane(const QueryOracle &oracle,
                                            const VectorXd &x, double delta,
                                            Rng &rng, const SearchOptions &opts) {
  const double offset = 0.5 * delta;
  const double step = 0.125 * delta;
  constexpr int kRefinements = 3;

  // Lambda_1 - Lambda_2 across x along direction e, or nullopt if the two
  // sides agree (no kink detected along e).
  auto difference_along = [&](const VectorXd &e) -> std::optional<AffineMapd> {
    const AffineMapd plus = reconstruct_affine(oracle, x + offset * e, step);
    const AffineMapd minus = reconstruct_affine(oracle, x - offset * e, step);
    AffineMapd diff = plus - minus;
    const double jump = std::abs(diff.w.dot(e)) * offset;
    if (!(jump > kink_threshold(plus(x), opts))) {
      return std::nullopt;
    }
    return diff;
  };

  for (int attempt = 0; attempt < opts.hyperplane_retries; ++attempt) {
    auto diff = difference_along(random_unit_vector(x.size(), rng));
    if (!diff) {
      continue;
    }
    // Probing along the estimated normal keeps every probe clear of the
    // plane, which a random direction does not guarantee.
    VectorXd normal = diff->w.normalized();
    bool ok = true;
    for (int r = 0; r < kRefinements; ++r) {
      auto refined = difference_along(normal);
      if (!refined) {
        ok = false;
        break;
      }
      diff = refined;
      const VectorXd next = diff->w.normalized();
      const double change = std::min((next - normal).norm(), (next + normal).norm());
      normal = next;
      if (change < 1e-12) {
        break;
      }
    }
    if (ok) {
      return Hyperplaned(*diff);
    }
  }
  throw ExtractionError(FailureKind::kGeneralPosition, "hyperplane reconstruction",
                        "no hyperplane detected");
}

bool is_critical_point(const QueryOracle &oracle, const VectorXd &x,
                       double delta, int n_dirs, Rng &rng,
                       const SearchOptions &opts) {
  const double f0 = oracle(x);
  const double threshold = kink_threshold(f0, opts);
  const bool one_sided = oracle.domain() == Domain::kPositiveOrthant &&
                         (x.array() < delta).any();
  for (int k = 0; k < n_dirs; ++k) {
    VectorXd e = random_unit_vector(x.size(), rng);
    double second_difference;
    if (one_sided) {
      // Only inward directions near the boundary; forward second difference.
      for (Index i = 0; i < e.size(); ++i) {
        if (x(i) < delta) {
          e(i) = std::abs(e(i));
        }
      }
      second_difference = oracle(x + 2.0 * delta * e) - 2.0 * oracle(x + delta * e) + f0;
    } else {
      second_difference = oracle(x + delta * e) + oracle(x - delta * e) - 2.0 * f0;
    }
    if (std::abs(second_difference) > threshold) {
      return true;
    }
  }
  return false;
}

}  // namespace relex
