#include "relex/extract3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "relex/error.hpp"

namespace relex {

namespace {

// Uniform point of the ball of radius r inside the linear subspace
// orthogonal to `normal`.
VectorXd in_plane_perturbation(const VectorXd &normal, double r, Rng &rng) {
  const Index d = normal.size();
  if (d == 1) {
    return VectorXd::Zero(1);  // the plane is a point
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    VectorXd e = random_unit_vector(d, rng);
    e -= e.dot(normal) * normal;
    const double norm = e.norm();
    if (norm < 1e-12) {
      continue;
    }
    const double k = static_cast<double>(std::max<Index>(d - 1, 1));
    return (r * std::pow(unif(rng), 1.0 / k) / norm) * e;
  }
}

bool clear_of(const VectorXd &x, const std::vector<Hyperplaned> &planes,
              const Hyperplaned *skip, double distance) {
  for (const Hyperplaned &q : planes) {
    if (&q != skip && std::abs(q.signed_distance(x)) < distance) {
      return false;
    }
  }
  return true;
}

// Minimum-norm point of the intersection of two non-parallel planes.
VectorXd min_norm_intersection(const Hyperplaned &p, const Hyperplaned &q) {
  MatrixXd A(2, p.dim());
  A.row(0) = p.normal().transpose();
  A.row(1) = q.normal().transpose();
  const Eigen::Vector2d rhs(-p.offset(), -q.offset());
  return A.transpose() * (A * A.transpose()).ldlt().solve(rhs);
}

// Re-measures a first-layer plane near its foot with the widest probe that
// stays clear of the other candidates. Planes found far along the probe line
// carry an offset error amplified by that distance. The new estimate is
// kept only when it agrees with the old one.
Hyperplaned remeasure_plane(const QueryOracle &oracle, const Hyperplaned &plane,
                            const std::vector<Hyperplaned> &others, double delta,
                            Rng &rng, const SearchOptions &opts) {
  constexpr double kAgreement = 1e-6;
  constexpr int kTries = 8;
  for (double reach = 64.0 * delta; reach >= 2.0 * delta; reach *= 0.25) {
    for (int k = 0; k < kTries; ++k) {
      const double spread = reach * static_cast<double>(1 << k);
      const VectorXd z =
          plane.project(plane.foot() + in_plane_perturbation(plane.normal(), spread, rng));
      if (!clear_of(z, others, &plane, reach)) {
        continue;
      }
      try {
        Hyperplaned estimate = reconstruct_critical_hyperplane(oracle, z, reach, rng, opts);
        if (same_plane(estimate, plane, kAgreement)) {
          return estimate;
        }
      } catch (const ExtractionError &) {
      }
      break;
    }
  }
  return plane;
}

}  // namespace

CandidateList collect_candidate_hyperplanes(const QueryOracle &oracle,
                                            double delta, int m_max, Index axis,
                                            Rng &rng,
                                            const SearchOptions &opts) {
  if (oracle.domain() != Domain::kFull) {
    throw std::invalid_argument("collect_candidate_hyperplanes: full-domain oracle required");
  }
  const Index d = oracle.dim();
  const QueryOracle line = restrict_to_ray(oracle, Rayd::axis(d, axis));
  const std::vector<double> points =
      all_critical_points_1d(line, delta, default_window(delta, false), m_max, opts);
  CandidateList out;
  for (double t : points) {
    const VectorXd x = VectorXd::Unit(d, axis) * t;
    Hyperplaned plane = reconstruct_critical_hyperplane(oracle, x, delta, rng, opts);
    bool seen = false;
    for (const Hyperplaned &h : out.hyperplanes) {
      if (same_plane(h, plane, kCandidateDedupTolerance)) {
        seen = true;
        break;
      }
    }
    if (!seen) {
      out.hyperplanes.push_back(std::move(plane));
      out.points.push_back(x);
    }
  }
  return out;
}

bool is_first_layer_plane(const QueryOracle &oracle, const Hyperplaned &plane,
                          const std::vector<Hyperplaned> &others, double delta,
                          Rng &rng, const SearchOptions &opts) {
  // Test points sit 4, 32 and 256 delta from the intersection line. A
  // second-layer kink set that bends only slightly across `other` is still
  // within delta of `plane` at the nearest distance.
  constexpr double kSideDistances[] = {4.0, 32.0, 256.0};
  constexpr double kClearance = 2.0;
  constexpr int kPerturbations = 16;
  constexpr double kParallel = 1e-6;

  const VectorXd &n = plane.normal();
  for (const Hyperplaned &other : others) {
    VectorXd across = other.normal() - other.normal().dot(n) * n;
    const double rate = across.norm();
    if (rate < kParallel) {
      continue;
    }
    across /= rate;
    const VectorXd base = min_norm_intersection(plane, other);
    for (double distance : kSideDistances) {
      for (double side : {-1.0, 1.0}) {
        const VectorXd anchor = base + side * (distance * delta / rate) * across;
        VectorXd z;
        for (int k = 0; k < kPerturbations; ++k) {
          z = plane.project(anchor + in_plane_perturbation(n, delta, rng));
          if (clear_of(z, others, &other, kClearance * delta)) {
            break;
          }
        }
        if (!is_critical_point(oracle, z, delta, opts.critical_directions, rng, opts)) {
          return false;
        }
      }
    }
  }
  return true;
}

SignedRows recover_row_signs(const QueryOracle &oracle,
                             const std::vector<Hyperplaned> &planes, double eps,
                             double delta, int retries, Rng &rng,
                             const SearchOptions &opts) {
  const Index rows = static_cast<Index>(planes.size());
  if (rows == 0) {
    throw std::invalid_argument("recover_row_signs: no planes");
  }
  const Index d = planes.front().dim();
  SignedRows out;
  out.W.resize(rows, d);
  out.b.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    out.W.row(i) = planes[i].normal().transpose();
    out.b(i) = planes[i].offset();
  }
  // Column i of the right inverse is orthogonal to every other row and has
  // positive inner product with row i.
  const MatrixXd M = right_inverse(out.W);

  for (Index i = 0; i < rows; ++i) {
    const Hyperplaned &plane = planes[i];
    const VectorXd z = M.col(i).normalized();
    std::optional<int> sign;
    double radius = 4.0 * delta;
    for (int attempt = 0; attempt < retries && !sign; ++attempt) {
      VectorXd x = plane.foot();
      if (attempt > 0) {
        x = plane.project(x + in_plane_perturbation(plane.normal(), radius, rng));
        radius *= 2.0;
      }
      if (!clear_of(x, planes, &plane, 2.0 * delta)) {
        continue;
      }
      const double f0 = oracle(x);
      const double threshold = kink_threshold(f0, opts);
      const bool forward = std::abs(oracle(x + eps * z) - f0) > threshold;
      const bool backward = std::abs(oracle(x - eps * z) - f0) > threshold;
      if (forward != backward) {
        sign = forward ? 1 : -1;
      }
    }
    if (!sign) {
      throw ExtractionError(FailureKind::kAssumption, "sign recovery",
                            "row " + std::to_string(i) +
                                ": no base point separates the two sides; a "
                                "partial derivative may vanish");
    }
    if (*sign < 0) {
      out.W.row(i) *= -1.0;
      out.b(i) *= -1.0;
      ++out.flipped;
    }
  }
  return out;
}

std::vector<Index> hidden_unit_order(const VectorXd &b) {
  std::vector<Index> order(b.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&b](Index i, Index j) { return b(i) < b(j); });
  return order;
}

MatrixXd right_inverse(const MatrixXd &W, double rank_tolerance) {
  if (W.rows() > W.cols()) {
    throw ExtractionError(FailureKind::kAssumption, "right inverse",
                          "W not right invertible (more rows than columns)");
  }
  Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd &sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma.minCoeff() >= rank_tolerance)) {
    throw ExtractionError(FailureKind::kAssumption, "right inverse",
                          "W not right invertible");
  }
  return svd.matrixV() * sigma.cwiseInverse().asDiagonal() *
         svd.matrixU().transpose();
}

QueryOracle peel_first_layer(const QueryOracle &oracle, const MatrixXd &W,
                             const VectorXd &b, double rank_tolerance,
                             double shift) {
  MatrixXd M = right_inverse(W, rank_tolerance);
  VectorXd origin = (shift - b.array()).matrix();
  return QueryOracle(W.rows(), Domain::kPositiveOrthant,
                     [oracle, M = std::move(M), origin = std::move(origin)](const VectorXd &h) {
                       return oracle(M * (h + origin));
                     });
}

double ExtractedThreeLayer::operator()(const VectorXd &x) const {
  return top(relu(W * x + b).eval());
}

ThreeLayerNetd ExtractedThreeLayer::to_network() const {
  const Index d2 = static_cast<Index>(top.neurons.size());
  MatrixXd V(d2, W.rows());
  VectorXd c(d2);
  VectorXd u(d2);
  for (Index k = 0; k < d2; ++k) {
    V.row(k) = top.neurons[k].w.transpose();
    c(k) = top.neurons[k].b;
    u(k) = top.neurons[k].u;
  }
  return ThreeLayerNetd(W, b, V, c, u, top.skip);
}

ExtractedThreeLayer extract_three_layer(const QueryOracle &oracle,
                                        const ThreeLayerOptions &opts) {
  if (oracle.domain() != Domain::kFull) {
    throw std::invalid_argument("extract_three_layer: full-domain oracle required");
  }
  const Index d = oracle.dim();
  const double delta = opts.delta;
  Rng rng(opts.seed);

  PhaseQueries queries;
  std::uint64_t mark = oracle.queries();
  auto charge = [&](const char *phase) {
    queries.add(phase, oracle.queries() - mark);
    mark = oracle.queries();
  };

  const Index axes = opts.axis_fallback ? d : 1;
  std::optional<ExtractionError> last_failure;
  for (Index axis = 0; axis < axes; ++axis) {
    try {
      CandidateList candidates = collect_candidate_hyperplanes(
          oracle, delta, opts.max_candidates, axis, rng, opts.search);
      charge("collect");

      std::vector<Hyperplaned> survivors;
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        std::vector<Hyperplaned> others;
        others.reserve(candidates.size() - 1);
        for (std::size_t j = 0; j < candidates.size(); ++j) {
          if (j != k) {
            others.push_back(candidates.hyperplanes[j]);
          }
        }
        if (is_first_layer_plane(oracle, candidates.hyperplanes[k], others, delta,
                                 rng, opts.search)) {
          survivors.push_back(remeasure_plane(oracle, candidates.hyperplanes[k],
                                              others, delta, rng, opts.search));
        }
      }
      charge("filter");
      if (survivors.empty()) {
        throw ExtractionError(FailureKind::kAssumption, "filter",
                              "no first-layer plane among the candidates");
      }
      if (static_cast<Index>(survivors.size()) > d) {
        throw ExtractionError(FailureKind::kGeneralPosition, "filter",
                              std::to_string(survivors.size()) +
                                  " first-layer candidates survive in dimension " +
                                  std::to_string(d));
      }

      SignedRows rows = recover_row_signs(oracle, survivors, 0.5 * delta, delta,
                                          opts.sign_retries, rng, opts.search);
      charge("signs");
      {
        const std::vector<Index> order = hidden_unit_order(rows.b);
        const MatrixXd W = rows.W;
        const VectorXd b = rows.b;
        for (Index k = 0; k < b.size(); ++k) {
          rows.W.row(k) = W.row(order[k]);
          rows.b(k) = b(order[k]);
        }
      }

      const QueryOracle peeled = peel_first_layer(oracle, rows.W, rows.b,
                                                  opts.rank_tolerance, opts.peel_shift);
      TwoLayerOptions top_opts = opts.top;
      top_opts.delta = delta;
      ExtractedTwoLayer top = extract_two_layer(peeled, top_opts);
      charge("top");
      // Undo the shift: the peeled oracle sees hidden values h + shift 1.
      for (Neurond &n : top.neurons) {
        n.b -= opts.peel_shift * n.w.sum();
      }
      top.skip.b -= opts.peel_shift * top.skip.w.sum();

      ExtractedThreeLayer result{std::move(rows.W), std::move(rows.b),
                                 std::move(top),    PhaseQueries{},
                                 axis,              candidates.size(),
                                 rows.flipped};
      std::uniform_real_distribution<double> unif(-opts.self_check_box,
                                                  opts.self_check_box);
      double worst = 0.0;
      for (int k = 0; k < opts.self_check_points; ++k) {
        VectorXd x(d);
        for (Index i = 0; i < d; ++i) {
          x(i) = unif(rng);
        }
        const double truth = oracle(x);
        const double mine = result(x);
        worst = std::max(worst, std::abs(truth - mine) /
                                    (1.0 + std::max(std::abs(truth), std::abs(mine))));
      }
      charge("self-check");
      if (worst > opts.self_check_tol) {
        throw ExtractionError(FailureKind::kGeneralPosition, "self-check",
                              "extracted network disagrees with the oracle "
                              "(relative error " + std::to_string(worst) + ")");
      }
      result.queries = std::move(queries);
      return result;
    } catch (const ExtractionError &e) {
      if (e.kind() == FailureKind::kBudget) {
        throw;
      }
      charge("failed");
      last_failure = e;
    }
  }
  throw *last_failure;
}

}  // namespace relex
