// Depth-3 extraction: candidates, filter, row signs, peeling, round trip.
#include <gtest/gtest.h>

#include <random>

#include "relex/audit.hpp"
#include "relex/error.hpp"
#include "relex/extract3.hpp"
#include "relex/generate.hpp"

namespace relex {
namespace {

constexpr double kDelta = 1e-4;

MatrixXd mat(Index r, Index c, std::initializer_list<double> v) {
  MatrixXd m(r, c);
  Index k = 0;
  for (double x : v) m(k / c, k % c) = x, ++k;
  return m;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Largest canonical (normal, offset) gap to the closest plane of `pool`.
double nearest_gap(const Hyperplaned &p, const std::vector<Hyperplaned> &pool) {
  double best = std::numeric_limits<double>::infinity();
  for (const Hyperplaned &q : pool) {
    const double gap = std::max((p.normal() - q.normal()).cwiseAbs().maxCoeff(),
                                std::abs(p.offset() - q.offset()));
    best = std::min(best, gap);
  }
  return best;
}

std::vector<Hyperplaned> first_layer_planes(const ThreeLayerNetd &net) {
  std::vector<Hyperplaned> out;
  for (Index j = 0; j < net.width1(); ++j) {
    out.emplace_back(VectorXd(net.W().row(j).transpose()), net.b()(j));
  }
  return out;
}

/// Second layer evaluated directly: u^T relu(V h + c).
double top_function(const ThreeLayerNetd &net, const VectorXd &h) {
  return net.u().dot((net.V() * h + net.c()).cwiseMax(0.0));
}

TEST(CollectCandidates, OneDimensionalComposite) {
  // relu(relu(x - 1)): a single kink at x = 1.
  const ThreeLayerNetd net(mat(1, 1, {1}), vec({-1}), mat(1, 1, {1}), vec({0}), vec({1}));
  Rng rng(0);
  const CandidateList list = collect_candidate_hyperplanes(as_oracle(net), kDelta, 16, 0, rng);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_NEAR(list.hyperplanes[0].normal()(0), 1.0, 1e-12);
  EXPECT_NEAR(list.hyperplanes[0].offset(), -1.0, 1e-9);
}

TEST(CollectCandidates, AffineAlongProbeLine) {
  // Depends on x2 only, so the line t e1 sees a constant.
  const ThreeLayerNetd net(mat(1, 2, {0, 1}), vec({0}), mat(1, 1, {1}), vec({0}), vec({1}));
  Rng rng(0);
  EXPECT_EQ(collect_candidate_hyperplanes(as_oracle(net), kDelta, 16, 0, rng).size(), 0u);
}

TEST(CollectCandidates, ContainsFirstLayer) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ThreeLayerNetd net = generate_three_layer(4, 3, 9, kDelta, seed);
    Rng rng(seed);
    const CandidateList list = collect_candidate_hyperplanes(as_oracle(net), kDelta, 4096, 0, rng);
    for (const Hyperplaned &truth : first_layer_planes(net)) {
      EXPECT_LE(nearest_gap(truth, list.hyperplanes), 1e-7) << "seed " << seed;
    }
  }
}

TEST(FirstLayerFilter, SurvivorsAreExactlyTheFirstLayer) {
  int trials = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ThreeLayerNetd net = generate_three_layer(4, 3, 9, kDelta, seed);
    const QueryOracle oracle = as_oracle(net);
    Rng rng(seed);
    const CandidateList list = collect_candidate_hyperplanes(oracle, kDelta, 4096, 0, rng);
    const auto truth = first_layer_planes(net);
    std::vector<Hyperplaned> survivors;
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::vector<Hyperplaned> others = list.hyperplanes;
      others.erase(others.begin() + static_cast<std::ptrdiff_t>(i));
      const bool keep = is_first_layer_plane(oracle, list.hyperplanes[i], others, kDelta, rng);
      // Ground-truth labelling of the candidate.
      const bool is_truth = nearest_gap(list.hyperplanes[i], truth) <= 1e-6;
      EXPECT_EQ(keep, is_truth) << "seed " << seed << " candidate " << i;
      if (keep) survivors.push_back(list.hyperplanes[i]);
    }
    EXPECT_EQ(survivors.size(), truth.size()) << "seed " << seed;
    ++trials;
  }
  EXPECT_EQ(trials, 100);
}

TEST(RowSigns, KeepsAlignedRow) {
  const ThreeLayerNetd net(mat(1, 1, {1}), vec({-1}), mat(1, 1, {1}), vec({0}), vec({1}));
  Rng rng(0);
  const SignedRows s = recover_row_signs(as_oracle(net), {Hyperplaned(vec({1}), -1)},
                                         kDelta / 2, kDelta, 32, rng);
  EXPECT_EQ(s.W(0, 0), 1.0);
  EXPECT_EQ(s.b(0), -1.0);
  EXPECT_EQ(s.flipped, 0);
}

TEST(RowSigns, FlipsMirroredRow) {
  const ThreeLayerNetd net(mat(1, 1, {-1}), vec({1}), mat(1, 1, {1}), vec({0}), vec({1}));
  Rng rng(0);
  const SignedRows s = recover_row_signs(as_oracle(net), {Hyperplaned(vec({1}), -1)},
                                         kDelta / 2, kDelta, 32, rng);
  EXPECT_EQ(s.W(0, 0), -1.0);
  EXPECT_EQ(s.b(0), 1.0);
  EXPECT_EQ(s.flipped, 1);
}

TEST(RowSigns, MatchGroundTruth) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ThreeLayerNetd net = generate_three_layer(4, 3, 9, kDelta, seed);
    Rng rng(seed);
    const SignedRows s = recover_row_signs(as_oracle(net), first_layer_planes(net),
                                           kDelta / 2, kDelta, 32, rng);
    EXPECT_LE((s.W - net.W()).cwiseAbs().maxCoeff(), 1e-7) << "seed " << seed;
    EXPECT_LE((s.b - net.b()).cwiseAbs().maxCoeff(), 1e-7) << "seed " << seed;
  }
}

TEST(RightInverse, Examples) {
  EXPECT_EQ(right_inverse(MatrixXd::Identity(3, 3)), MatrixXd::Identity(3, 3));
  const MatrixXd M = right_inverse(mat(2, 3, {1, 0, 0, 0, 1, 0}));
  EXPECT_LE((M - mat(3, 2, {1, 0, 0, 1, 0, 0})).cwiseAbs().maxCoeff(), 1e-15);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  MatrixXd W(3, 5);
  for (Index i = 0; i < W.size(); ++i) W(i) = normal(rng);
  EXPECT_LE((W * right_inverse(W) - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RightInverse, RankDeficient) {
  try {
    right_inverse(mat(2, 2, {1, 1, 1, 1}));
    FAIL() << "expected an assumption failure";
  } catch (const ExtractionError &e) {
    EXPECT_EQ(e.kind(), FailureKind::kAssumption);
  }
}

TEST(PeelFirstLayer, IdentityLayerIsRestriction) {
  const ThreeLayerNetd net(MatrixXd::Identity(2, 2), VectorXd::Zero(2), mat(1, 2, {1, -1}),
                           vec({0.5}), vec({1}));
  const QueryOracle oracle = as_oracle(net);
  const QueryOracle peeled = peel_first_layer(oracle, net.W(), net.b());
  const VectorXd h = vec({2.0, 0.75});
  EXPECT_EQ(peeled(h), net(h));
  EXPECT_EQ(oracle.queries(), 1u);
}

TEST(PeelFirstLayer, AffineReparametrization) {
  const ThreeLayerNetd net(mat(1, 1, {1}), vec({-1}), mat(1, 1, {2}), vec({-0.5}), vec({1}));
  const QueryOracle peeled = peel_first_layer(as_oracle(net), net.W(), net.b());
  for (double x : {0.0, 0.1, 3.0}) {
    EXPECT_DOUBLE_EQ(peeled(vec({x})), net(vec({x + 1.0})));
  }
}

TEST(PeelFirstLayer, EqualsTopLayers) {
  const ThreeLayerNetd net = generate_three_layer(5, 3, 12, kDelta, 17);
  const QueryOracle oracle = as_oracle(net);
  const QueryOracle peeled = peel_first_layer(oracle, net.W(), net.b());
  const QueryOracle shifted = peel_first_layer(oracle, net.W(), net.b(), 1e-8, 0.25);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    VectorXd h(3);
    for (Index i = 0; i < 3; ++i) h(i) = unif(rng);
    const double f = top_function(net, h);
    EXPECT_NEAR(peeled(h), f, 1e-9 * (1.0 + std::abs(f)));
    const double g = top_function(net, h + VectorXd::Constant(3, 0.25));
    EXPECT_NEAR(shifted(h), g, 1e-9 * (1.0 + std::abs(g)));
  }
}

TEST(HiddenUnitOrder, StableForTies) {
  EXPECT_EQ(hidden_unit_order(vec({1, 0, 1, 0})), (std::vector<Index>{1, 3, 0, 2}));
}

TEST(ExtractThreeLayer, ScalarInstance) {
  const ThreeLayerNetd net = generate_three_layer(1, 1, 1, kDelta, 3);
  const QueryOracle oracle = as_oracle(net);
  const ExtractedThreeLayer got = extract_three_layer(oracle);
  for (int k = 0; k <= 2000; ++k) {
    const VectorXd x = vec({-10.0 + 0.01 * k});
    const double a = net(x), b = got(x);
    EXPECT_LE(std::abs(a - b), 1e-7 * (1.0 + std::abs(a))) << "x = " << x(0);
  }
}

TEST(ExtractThreeLayer, RandomRoundTrip) {
  const ThreeLayerNetd net = generate_three_layer(4, 3, 9, kDelta, 11);
  const QueryOracle oracle = as_oracle(net);
  const auto reads = audit::parameter_reads();
  const ExtractedThreeLayer got = extract_three_layer(oracle);
  EXPECT_EQ(audit::parameter_reads(), reads);
  EXPECT_EQ(got.queries.total(), oracle.queries());

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    VectorXd x(4);
    for (Index i = 0; i < 4; ++i) x(i) = unif(rng);
    const double a = net(x), b = got(x);
    worst = std::max(worst, std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))));
  }
  EXPECT_LE(worst, 1e-6);

  // Rows paired by largest absolute cosine.
  ASSERT_EQ(got.W.rows(), 3);
  for (Index j = 0; j < 3; ++j) {
    Index best = 0;
    double best_cos = -1.0;
    for (Index i = 0; i < 3; ++i) {
      const double cos = std::abs(got.W.row(i).dot(net.W().row(j)));
      if (cos > best_cos) best_cos = cos, best = i;
    }
    EXPECT_LE((got.W.row(best) - net.W().row(j)).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE(std::abs(got.b(best) - net.b()(j)), 1e-7);
  }
}

TEST(ExtractThreeLayer, ToNetworkEvaluatesTheSame) {
  const ThreeLayerNetd net = generate_three_layer(3, 2, 6, kDelta, 2);
  const ExtractedThreeLayer got = extract_three_layer(as_oracle(net));
  const ThreeLayerNetd rebuilt = got.to_network();
  const VectorXd x = vec({0.5, -2.0, 1.5});
  EXPECT_NEAR(rebuilt(x), got(x), 1e-12 * (1.0 + std::abs(got(x))));
}

}  // namespace
}  // namespace relex
