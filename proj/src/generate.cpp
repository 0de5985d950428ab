#include "relex/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "relex/error.hpp"
#include "relex/extract2.hpp"
#include "relex/lp.hpp"

namespace relex {

namespace {

std::string describe(const std::string &what, double value) {
  std::ostringstream os;
  os << what << " (" << value << ")";
  return os.str();
}

double plane_distance(const Neurond &n, const VectorXd &x) {
  return std::abs(n.w.dot(x) + n.b) / n.w.norm();
}

// Positive critical point of neuron n on axis i, if any.
std::optional<double> crossing(const Neurond &n, Index i) {
  if (n.w(i) == 0.0) {
    return std::nullopt;
  }
  const double rho = -n.b / n.w(i);
  if (!(rho > 0.0)) {
    return std::nullopt;
  }
  return rho;
}

// Slope and intercept of t -> sum_j u_j relu(w_j(i) t + b_j) on the piece
// containing t (only `members` contribute).
std::pair<double, double> piece_at(const std::vector<Neurond> &neurons,
                                   const std::vector<Index> &members, Index i,
                                   double t) {
  double slope = 0.0;
  double intercept = 0.0;
  for (Index j : members) {
    const Neurond &n = neurons[j];
    if (n.w(i) * t + n.b > 0.0) {
      slope += n.u * n.w(i);
      intercept += n.u * n.b;
    }
  }
  return {slope, intercept};
}

}  // namespace

std::vector<AxisCrossing> ground_truth_axis_crossings(const TwoLayerNetd &net) {
  const auto &neurons = net.neurons();
  std::vector<AxisCrossing> out;
  for (Index i = 0; i < net.dim(); ++i) {
    const std::size_t first = out.size();
    for (Index j = 0; j < static_cast<Index>(neurons.size()); ++j) {
      if (auto rho = crossing(neurons[j], i)) {
        out.push_back({i, j, *rho});
      }
    }
    std::sort(out.begin() + first, out.end(),
              [](const AxisCrossing &a, const AxisCrossing &b) { return a.rho < b.rho; });
  }
  return out;
}

std::optional<std::string> two_layer_violation(const TwoLayerNetd &net,
                                               double delta,
                                               bool require_axis_crossing,
                                               const GeneratorOptions &opts) {
  const auto &neurons = net.neurons();
  const Index d = net.dim();
  const Index d1 = static_cast<Index>(neurons.size());
  const double limit = 1.0 / delta;

  // Neurons visible on the orthant, in the order extraction removes them.
  std::vector<bool> visible(d1, false);
  for (Index j = 0; j < d1; ++j) {
    for (Index i = 0; i < d; ++i) {
      if (auto rho = crossing(neurons[j], i)) {
        visible[j] = true;
        if (*rho <= delta || *rho >= limit - delta) {
          return describe("axis critical point outside (delta, 1/delta - delta)", *rho);
        }
      }
    }
    if (require_axis_crossing && !visible[j]) {
      return std::string("critical hyperplane misses every positive axis");
    }
  }

  std::vector<Index> remaining;
  for (Index j = 0; j < d1; ++j) {
    if (visible[j]) {
      remaining.push_back(j);
    }
  }

  for (Index i = 0; i < d && !remaining.empty(); ++i) {
    std::vector<std::pair<double, Index>> on_axis;
    for (Index j : remaining) {
      if (auto rho = crossing(neurons[j], i)) {
        on_axis.emplace_back(*rho, j);
      }
    }
    if (on_axis.empty()) {
      continue;
    }
    std::sort(on_axis.begin(), on_axis.end());
    std::vector<double> kinks;
    for (const auto &p : on_axis) {
      kinks.push_back(p.first);
    }
    for (std::size_t k = 1; k < kinks.size(); ++k) {
      if (kinks[k] - kinks[k - 1] < delta) {
        return describe("axis critical points closer than delta", kinks[k] - kinks[k - 1]);
      }
    }

    // Distinct affine pieces along the axis.
    std::vector<std::pair<double, double>> pieces;
    pieces.push_back(piece_at(neurons, remaining, i, 0.5 * kinks.front()));
    for (std::size_t k = 0; k < kinks.size(); ++k) {
      const double next = k + 1 < kinks.size() ? kinks[k + 1] : kinks[k] + 1.0;
      pieces.push_back(piece_at(neurons, remaining, i, 0.5 * (kinks[k] + next)));
    }
    for (std::size_t a = 0; a < pieces.size(); ++a) {
      for (std::size_t b = a + 1; b < pieces.size(); ++b) {
        if (std::abs(pieces[a].first - pieces[b].first) < opts.slope_gap &&
            std::abs(pieces[a].second - pieces[b].second) < opts.slope_gap) {
          return std::string("two pieces of an axis restriction share an affine function");
        }
      }
    }

    for (std::size_t k = 0; k < on_axis.size(); ++k) {
      const Index j = on_axis[k].second;
      const double rho = on_axis[k].first;
      const VectorXd point = VectorXd::Unit(d, i) * rho;
      if (std::abs(neurons[j].w(i)) < opts.slope_gap) {
        return describe("slope change at axis critical point below floor", neurons[j].w(i));
      }
      for (Index m = 0; m < d1; ++m) {
        if (m != j && visible[m] && plane_distance(neurons[m], point) <= delta) {
          return std::string("axis critical point is not delta-non-degenerate");
        }
      }
      // The slope change must stand out from the rounding noise of a chord
      // spanning probe_fraction * delta at this magnitude.
      double magnitude = 1.0;
      for (const Neurond &n : neurons) {
        magnitude += std::abs(n.b) + rho * std::abs(n.w(i));
      }
      const double chord_noise = 2.0 * opts.search.noise_factor *
                                 std::numeric_limits<double>::epsilon() *
                                 3.0 * magnitude /
                                 (opts.search.probe_fraction * delta);
      if (std::abs(neurons[j].w(i)) <= 4.0 * chord_noise) {
        return describe("slope change at axis critical point below search "
                        "resolution", neurons[j].w(i));
      }
      const double eps = bracket_half_width(kinks, k, delta);
      const double step = affine_probe_step(eps, delta);
      const double value = net(point);
      if (std::abs(neurons[j].w(i)) * eps <= 4.0 * kink_threshold(value, opts.search)) {
        return std::string("kink too shallow to detect over the bracket");
      }
      for (const VectorXd &x : {VectorXd(VectorXd::Unit(d, i) * (rho - eps)),
                                VectorXd(VectorXd::Unit(d, i) * (rho + eps))}) {
        // Hyperplanes already recovered stay visible to the search as
        // residual slivers, so clearance is against every visible neuron.
        for (Index m = 0; m < d1; ++m) {
          if (visible[m] && plane_distance(neurons[m], x) <= 2.0 * step * (1.0 + 1e-3)) {
            return std::string("bracket endpoint too close to a critical hyperplane");
          }
        }
      }
    }
    std::vector<Index> still;
    for (Index j : remaining) {
      if (!crossing(neurons[j], i)) {
        still.push_back(j);
      }
    }
    remaining.swap(still);
  }
  return std::nullopt;
}

std::vector<LineKink> line_kinks(const ThreeLayerNetd &net, Index axis,
                                 double limit) {
  const MatrixXd &W = net.W();
  const VectorXd &b = net.b();
  const MatrixXd &V = net.V();
  const VectorXd &c = net.c();
  const VectorXd &u = net.u();
  const Index d = W.cols();
  const VectorXd dir = VectorXd::Unit(d, axis);

  // Directional derivative of N along the axis at t, evaluated on the piece
  // containing t + side * tiny.
  auto slope_at = [&](double t) {
    const VectorXd x = dir * t;
    const VectorXd pre1 = W * x + b;
    const VectorXd mask1 = (pre1.array() > 0.0).cast<double>();
    const VectorXd hidden = pre1.cwiseMax(0.0);
    const VectorXd pre2 = V * hidden + c;
    const VectorXd mask2 = (pre2.array() > 0.0).cast<double>();
    const VectorXd dhidden = mask1.asDiagonal() * W.col(axis);
    return u.dot(mask2.asDiagonal() * (V * dhidden));
  };

  std::vector<std::pair<double, Index>> first;
  for (Index j = 0; j < W.rows(); ++j) {
    if (W(j, axis) != 0.0) {
      first.emplace_back(-b(j) / W(j, axis), j);
    }
  }
  std::sort(first.begin(), first.end());

  std::vector<LineKink> kinks;
  // Segment boundaries: -limit, first-layer crossings, +limit.
  std::vector<double> bounds{-limit};
  for (const auto &p : first) {
    if (std::abs(p.first) < limit) {
      bounds.push_back(p.first);
    }
  }
  bounds.push_back(limit);

  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const double lo = bounds[s];
    const double hi = bounds[s + 1];
    const double mid = 0.5 * (lo + hi);
    const VectorXd pre1 = W * (dir * mid) + b;
    const VectorXd mask1 = (pre1.array() > 0.0).cast<double>();
    // hidden(t) = A + B t on this segment
    const VectorXd A = mask1.asDiagonal() * b;
    const VectorXd B = mask1.asDiagonal() * W.col(axis);
    for (Index k = 0; k < V.rows(); ++k) {
      const double g0 = V.row(k).dot(A) + c(k);
      const double g1 = V.row(k).dot(B);
      if (g1 == 0.0) {
        continue;
      }
      const double t = -g0 / g1;
      if (t > lo && t < hi) {
        kinks.push_back({t, 2, k, 0.0, 0.0});
      }
    }
  }
  for (const auto &p : first) {
    if (std::abs(p.first) < limit) {
      kinks.push_back({p.first, 1, p.second, 0.0, 0.0});
    }
  }
  std::sort(kinks.begin(), kinks.end(),
            [](const LineKink &a, const LineKink &b) { return a.t < b.t; });

  std::vector<LineKink> out;
  for (std::size_t k = 0; k < kinks.size(); ++k) {
    LineKink kink = kinks[k];
    double left_room = k > 0 ? kink.t - kinks[k - 1].t : 1.0;
    double right_room = k + 1 < kinks.size() ? kinks[k + 1].t - kink.t : 1.0;
    const double eta = 0.25 * std::min({left_room, right_room, 1.0});
    kink.slope_left = slope_at(kink.t - eta);
    kink.slope_right = slope_at(kink.t + eta);
    if (kink.layer == 1 && kink.slope_left == kink.slope_right) {
      continue;
    }
    out.push_back(kink);
  }
  return out;
}

bool check_nonzero_partials(const MatrixXd &V, const VectorXd &c,
                            const VectorXd &u, int n_probes, std::uint64_t seed,
                            double box, double zero_tol) {
  const Index d1 = V.cols();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd x(d1);
  for (int p = 0; p < n_probes; ++p) {
    for (Index j = 0; j < d1; ++j) {
      x(j) = box * (1.0 - unif(rng));  // (0, box]
    }
    const VectorXd pre = V * x + c;
    for (Index j = 0; j < d1; ++j) {
      for (double dir : {1.0, -1.0}) {
        double derivative = 0.0;
        for (Index k = 0; k < V.rows(); ++k) {
          const bool active = pre(k) > 0.0 || (pre(k) == 0.0 && dir * V(k, j) > 0.0);
          if (active) {
            derivative += u(k) * V(k, j) * dir;
          }
        }
        if (std::abs(derivative) <= zero_tol) {
          return false;
        }
      }
    }
  }
  return true;
}

double dead_region_depth(const MatrixXd &V, const VectorXd &c) {
  // maximize t  s.t.  V x + t 1 <= -c,  t <= 1,  x >= 0,  t free
  const Index d2 = V.rows();
  const Index d1 = V.cols();
  LinearProgram lp;
  lp.A = MatrixXd::Zero(d2 + 1, d1 + 1);
  lp.A.topLeftCorner(d2, d1) = V;
  lp.A.col(d1).head(d2).setOnes();
  lp.A(d2, d1) = 1.0;
  lp.b.resize(d2 + 1);
  lp.b.head(d2) = -c;
  lp.b(d2) = 1.0;
  lp.c = VectorXd::Unit(d1 + 1, d1);
  lp.free_vars.assign(d1 + 1, false);
  lp.free_vars[d1] = true;
  const LpResult res = solve_lp(lp);
  if (res.status != LpStatus::kOptimal) {
    throw std::runtime_error("dead_region_depth: LP did not converge");
  }
  return res.value;
}

std::optional<std::string> three_layer_violation(const ThreeLayerNetd &net,
                                                 double delta,
                                                 const GeneratorOptions &opts,
                                                 std::uint64_t probe_seed) {
  const MatrixXd &W = net.W();
  const VectorXd &b = net.b();
  const MatrixXd &V = net.V();
  const VectorXd &c = net.c();
  const VectorXd &u = net.u();
  const Index d1 = W.rows();

  for (Index j = 0; j < d1; ++j) {
    if (std::abs(W.row(j).norm() - 1.0) > opts.unit_norm_tolerance) {
      return std::string("first-layer row is not unit norm");
    }
  }
  if (d1 > W.cols()) {
    return std::string("W is not right invertible (d1 > d)");
  }
  const double smin = Eigen::JacobiSVD<MatrixXd>(W).singularValues().minCoeff();
  if (!(smin >= opts.rank_tolerance)) {
    return describe("W is not right invertible (smallest singular value)", smin);
  }
  if (V.cwiseAbs().minCoeff() < opts.min_second_layer_weight) {
    return std::string("a second-layer weight is zero");
  }
  const double dead = dead_region_depth(V, c);
  if (dead > -opts.alive_margin) {
    return describe("non-zero partial derivatives: all second-layer neurons "
                    "switch off somewhere on the positive orthant", dead);
  }
  if (!check_nonzero_partials(V, c, u, opts.partial_probes, probe_seed,
                              opts.partial_probe_box, opts.min_partial)) {
    return std::string("non-zero partial derivatives: sampled derivative below floor");
  }

  // Probe line e_1.
  const double limit = 1.0 / delta;
  const std::vector<LineKink> kinks = line_kinks(net, 0, limit);
  std::vector<bool> seen(d1, false);
  for (std::size_t k = 0; k < kinks.size(); ++k) {
    const LineKink &kink = kinks[k];
    if (std::abs(kink.t) >= limit - delta) {
      return describe("probe-line critical point outside the search window", kink.t);
    }
    if (k > 0 && kink.t - kinks[k - 1].t < delta) {
      return describe("probe-line critical points closer than delta",
                      kink.t - kinks[k - 1].t);
    }
    const double gap = std::abs(kink.slope_right - kink.slope_left);
    const VectorXd x = VectorXd::Unit(W.cols(), 0) * kink.t;
    const double value = net(x);
    if (gap < opts.slope_gap ||
        gap * 0.5 * delta <= 10.0 * kink_threshold(value, opts.search)) {
      return describe("probe-line kink too shallow", gap);
    }
    if (kink.layer == 1) {
      seen[kink.index] = true;
    }
    // delta-non-degeneracy: nothing else critical within B(x, delta).
    const VectorXd pre1 = W * x + b;
    for (Index j = 0; j < d1; ++j) {
      if (!(kink.layer == 1 && kink.index == j) && std::abs(pre1(j)) <= delta) {
        return std::string("probe-line critical point is not delta-non-degenerate");
      }
    }
    std::vector<VectorXd> masks{(pre1.array() > 0.0).cast<double>().matrix()};
    if (kink.layer == 1) {
      VectorXd other = masks.front();
      other(kink.index) = 1.0 - other(kink.index);
      masks.push_back(other);
    }
    const VectorXd pre2 = V * pre1.cwiseMax(0.0) + c;
    for (Index k2 = 0; k2 < V.rows(); ++k2) {
      if (kink.layer == 2 && kink.index == k2) {
        continue;
      }
      for (const VectorXd &mask : masks) {
        const double grad = (V.row(k2) * mask.asDiagonal() * W).norm();
        if (std::abs(pre2(k2)) <= delta * grad) {
          return std::string("probe-line critical point is not delta-non-degenerate");
        }
      }
    }
  }
  for (Index j = 0; j < d1; ++j) {
    if (!seen[j]) {
      return std::string("first-layer hyperplane not visible on the probe line");
    }
  }
  // Distinct pieces along the probe line: compare slopes and values.
  for (std::size_t a = 0; a < kinks.size(); ++a) {
    for (std::size_t bb = a + 1; bb < kinks.size(); ++bb) {
      if (std::abs(kinks[a].slope_right - kinks[bb].slope_right) < opts.slope_gap) {
        const double ta = 0.5 * (kinks[a].t + (a + 1 < kinks.size() ? kinks[a + 1].t : limit));
        const double tb = 0.5 * (kinks[bb].t + (bb + 1 < kinks.size() ? kinks[bb + 1].t : limit));
        const double ia = net(VectorXd::Unit(W.cols(), 0) * ta) - kinks[a].slope_right * ta;
        const double ib = net(VectorXd::Unit(W.cols(), 0) * tb) - kinks[bb].slope_right * tb;
        if (std::abs(ia - ib) < opts.slope_gap) {
          return std::string("two pieces of the probe line share an affine function");
        }
      }
    }
  }

  // Extraction sees the top layers at h + shift 1. Every top neuron whose
  // plane meets the orthant must stay visible on the shifted axes.
  // Hidden units are seen in the extractor's order.
  const std::vector<Index> order = hidden_unit_order(b);
  for (Index k = 1; k < d1; ++k) {
    if (b(order[k]) - b(order[k - 1]) < opts.offset_gap) {
      return describe("first-layer offsets too close to order", b(order[k]) - b(order[k - 1]));
    }
  }
  const TwoLayerNetd top = net.top_layers();
  std::vector<Neurond> shifted;
  for (const Neurond &original : top.neurons()) {
    Neurond n = original;
    for (Index k = 0; k < d1; ++k) {
      n.w(k) = original.w(order[k]);
    }
    const bool meets = n.b > 0.0 ? (n.w.array() < 0.0).any()
                                 : n.b < 0.0 ? (n.w.array() > 0.0).any() : true;
    Neurond moved{n.w, n.b + opts.peel_shift * n.w.sum(), n.u};
    bool visible = false;
    for (Index i = 0; i < moved.w.size() && !visible; ++i) {
      visible = crossing(moved, i).has_value();
    }
    if (meets && !visible) {
      return std::string("top neuron hidden from the shifted axes");
    }
    shifted.push_back(std::move(moved));
  }
  const TwoLayerNetd shifted_top(top.dim(), std::move(shifted));
  if (auto problem = two_layer_violation(shifted_top, delta, false, opts)) {
    return "top two layers: " + *problem;
  }
  return std::nullopt;
}

TwoLayerNetd generate_two_layer(Index d, Index d1, double delta,
                                std::uint64_t seed,
                                const GeneratorOptions &opts) {
  if (d < 1 || d1 < 1) {
    throw std::invalid_argument("generate_two_layer: dimensions must be >= 1");
  }
  if (!(delta > 0.0)) {
    throw std::invalid_argument("generate_two_layer: delta must be positive");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  const double limit = 1.0 / delta;

  auto sample_neuron = [&]() {
    for (int attempt = 0; attempt < opts.max_neuron_attempts; ++attempt) {
      Neurond n{VectorXd(d), normal(rng), coin(rng) ? 1 : -1};
      for (Index i = 0; i < d; ++i) {
        n.w(i) = normal(rng);
      }
      bool hits = false;
      bool inside = true;
      for (Index i = 0; i < d; ++i) {
        if (auto rho = crossing(n, i)) {
          hits = true;
          inside = inside && *rho > delta && *rho < limit - delta;
        }
      }
      if (hits && inside) {
        return n;
      }
    }
    throw GenerationError("critical hyperplane misses every positive axis");
  };

  std::string violation = "none";
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    std::vector<Neurond> neurons;
    neurons.reserve(d1);
    for (Index j = 0; j < d1; ++j) {
      neurons.push_back(sample_neuron());
    }
    TwoLayerNetd net(d, std::move(neurons));
    auto bad = two_layer_violation(net, delta, true, opts);
    if (!bad) {
      return net;
    }
    violation = *bad;
  }
  throw GenerationError(violation);
}

ThreeLayerNetd generate_three_layer(Index d, Index d1, Index d2, double delta,
                                    std::uint64_t seed,
                                    const GeneratorOptions &opts) {
  if (d < 1 || d1 < 1 || d2 < 1) {
    throw std::invalid_argument("generate_three_layer: dimensions must be >= 1");
  }
  if (d1 > d) {
    throw std::invalid_argument("generate_three_layer: d1 > d, W cannot be right invertible");
  }
  if (!(delta > 0.0)) {
    throw std::invalid_argument("generate_three_layer: delta must be positive");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);

  std::string violation = "none";
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    MatrixXd W(d1, d);
    VectorXd b(d1);
    MatrixXd V(d2, d1);
    VectorXd c(d2);
    VectorXd u(d2);
    for (Index j = 0; j < d1; ++j) {
      for (Index i = 0; i < d; ++i) {
        W(j, i) = normal(rng);
      }
      b(j) = normal(rng);
      const double norm = W.row(j).norm();
      W.row(j) /= norm;
      b(j) /= norm;
    }
    for (Index k = 0; k < d2; ++k) {
      for (Index j = 0; j < d1; ++j) {
        V(k, j) = normal(rng);
      }
      c(k) = normal(rng);
      u(k) = coin(rng) ? 1.0 : -1.0;
    }
    ThreeLayerNetd net(W, b, V, c, u);
    auto bad = three_layer_violation(net, delta, opts, seed * 1000003ULL + attempt);
    if (!bad) {
      return net;
    }
    violation = *bad;
  }
  throw GenerationError(violation);
}

}  // namespace relex
