// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all
// pass. Ground truth is evaluated and compared here with plain loops that
// share no code with the extraction library.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "relex/audit.hpp"
#include "relex/error.hpp"
#include "relex/extract2.hpp"
#include "relex/extract3.hpp"
#include "relex/generate.hpp"
#include "relex/pwl.hpp"
#include "relex/verify.hpp"

using namespace relex;

namespace {

constexpr double kDelta = 1e-4;
constexpr double kTau = 1e-6;
constexpr int kSamples = 10000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double relu_(double v) { return v > 0.0 ? v : 0.0; }

// Plain copies of ground-truth parameters, taken before extraction starts.
struct PlainTwoLayer {
  int d = 0;
  std::vector<std::vector<double>> w;
  std::vector<double> b;
  std::vector<int> u;
  std::vector<double> skip_w;
  double skip_b = 0.0;

  double operator()(const VectorXd &x) const {
    double v = skip_b;
    for (int i = 0; i < d; ++i) v += skip_w[i] * x(i);
    for (std::size_t j = 0; j < w.size(); ++j) {
      double z = b[j];
      for (int i = 0; i < d; ++i) z += w[j][i] * x(i);
      v += u[j] * relu_(z);
    }
    return v;
  }
};

PlainTwoLayer copy_of(const TwoLayerNetd &net) {
  PlainTwoLayer p;
  p.d = static_cast<int>(net.dim());
  p.skip_w.assign(p.d, 0.0);
  for (const Neurond &n : net.neurons()) {
    p.w.emplace_back(n.w.data(), n.w.data() + n.w.size());
    p.b.push_back(n.b);
    p.u.push_back(n.u);
  }
  if (net.skip()) {
    for (int i = 0; i < p.d; ++i) p.skip_w[i] = net.skip()->w(i);
    p.skip_b = net.skip()->b;
  }
  return p;
}

struct PlainThreeLayer {
  int d = 0, d1 = 0, d2 = 0;
  std::vector<double> W, b, V, c, u;  // row-major

  double operator()(const VectorXd &x) const {
    std::vector<double> h(d1);
    for (int j = 0; j < d1; ++j) {
      double z = b[j];
      for (int i = 0; i < d; ++i) z += W[j * d + i] * x(i);
      h[j] = relu_(z);
    }
    double v = 0.0;
    for (int k = 0; k < d2; ++k) {
      double z = c[k];
      for (int j = 0; j < d1; ++j) z += V[k * d1 + j] * h[j];
      v += u[k] * relu_(z);
    }
    return v;
  }
};

PlainThreeLayer copy_of(const ThreeLayerNetd &net) {
  PlainThreeLayer p;
  p.d = static_cast<int>(net.W().cols());
  p.d1 = static_cast<int>(net.W().rows());
  p.d2 = static_cast<int>(net.V().rows());
  for (int j = 0; j < p.d1; ++j)
    for (int i = 0; i < p.d; ++i) p.W.push_back(net.W()(j, i));
  for (int k = 0; k < p.d2; ++k)
    for (int j = 0; j < p.d1; ++j) p.V.push_back(net.V()(k, j));
  p.b.assign(net.b().data(), net.b().data() + p.d1);
  p.c.assign(net.c().data(), net.c().data() + p.d2);
  p.u.assign(net.u().data(), net.u().data() + p.d2);
  return p;
}

/// Worst |a - b| / (1 + max(|a|, |b|)) over uniform points of [lo, hi]^d.
double worst_gap(const std::function<double(const VectorXd &)> &a,
                 const std::function<double(const VectorXd &)> &b, int d, double lo, double hi,
                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  double worst = 0.0;
  VectorXd x(d);
  for (int k = 0; k < kSamples; ++k) {
    for (int i = 0; i < d; ++i) x(i) = unif(rng);
    const double va = a(x), vb = b(x);
    const double gap = std::abs(va - vb) / (1.0 + std::max(std::abs(va), std::abs(vb)));
    worst = std::max(worst, std::isfinite(gap) ? gap : std::numeric_limits<double>::infinity());
  }
  return worst;
}

/// Unit normal with first non-negligible entry positive, and matching offset.
std::pair<std::vector<double>, double> canonical(const std::vector<double> &w, double b) {
  double norm = 0.0;
  for (double v : w) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<double> n(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) n[i] = w[i] / norm;
  double off = b / norm;
  for (double v : n) {
    if (std::abs(v) > 1e-9) {
      if (v < 0) {
        for (double &e : n) e = -e;
        off = -off;
      }
      break;
    }
  }
  return {n, off};
}

double canonical_gap(const std::vector<double> &w1, double b1, const std::vector<double> &w2,
                     double b2) {
  const auto [n1, o1] = canonical(w1, b1);
  const auto [n2, o2] = canonical(w2, b2);
  double gap = std::abs(o1 - o2);
  for (std::size_t i = 0; i < n1.size(); ++i) gap = std::max(gap, std::abs(n1[i] - n2[i]));
  return gap;
}

std::vector<double> row(const MatrixXd &m, Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.cols(); ++i) out[static_cast<std::size_t>(i)] = m(r, i);
  return out;
}

void report(int id, bool pass, const std::string &what, const std::string &detail) {
  std::printf("[%s] criterion %d: %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char *f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::uint64_t extraction_reads = 0;

// Criteria 1 and 2.
void depth_two(bool &ok1, bool &ok2) {
  const int dims[] = {2, 5, 10};
  const int widths[] = {1, 8, 32};
  int passed = 0, matched = 0, visible = 0, failures = 0;
  double worst_err = 0.0, slowest = 0.0, worst_plane = 0.0;
  std::string first_problem;
  for (int i = 0; i < 50; ++i) {
    const int d = dims[i % 3];
    const int d1 = widths[(i / 3) % 3];
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    try {
      const TwoLayerNetd net = generate_two_layer(d, d1, kDelta, seed);
      const PlainTwoLayer truth = copy_of(net);
      const QueryOracle oracle = as_oracle(net);
      const auto reads = audit::parameter_reads();
      const auto t0 = Clock::now();
      TwoLayerOptions opts;
      opts.delta = kDelta;
      const ExtractedTwoLayer got = extract_two_layer(oracle, opts);
      const double secs = seconds_since(t0);
      extraction_reads += audit::parameter_reads() - reads;
      slowest = std::max(slowest, secs);
      const double err =
          worst_gap(truth, [&](const VectorXd &x) { return got(x); }, d, 0.0, 10.0, seed);
      worst_err = std::max(worst_err, err);
      if (err <= kTau && secs < 5.0) {
        ++passed;
      } else if (first_problem.empty()) {
        first_problem = fmt(" (first miss: seed %llu err %.2e time %.2fs)",
                            static_cast<unsigned long long>(seed), err, secs);
      }
      // Neurons whose plane meets a positive axis inside the search window.
      for (std::size_t j = 0; j < truth.w.size(); ++j) {
        bool meets = false;
        for (int a = 0; a < d; ++a) {
          const double w = truth.w[j][a];
          if (w != 0.0) {
            const double rho = -truth.b[j] / w;
            meets = meets || (rho > 0.0 && rho < 1.0 / kDelta);
          }
        }
        if (!meets) continue;
        ++visible;
        double best = std::numeric_limits<double>::infinity();
        for (const Neurond &n : got.neurons) {
          if (n.u != truth.u[j]) continue;
          const std::vector<double> w(n.w.data(), n.w.data() + n.w.size());
          best = std::min(best, canonical_gap(truth.w[j], truth.b[j], w, n.b));
        }
        worst_plane = std::max(worst_plane, best);
        if (best <= 1e-7) ++matched;
      }
    } catch (const std::exception &e) {
      ++failures;
      if (first_problem.empty()) {
        first_problem = fmt(" (first failure: seed %llu: %s)",
                            static_cast<unsigned long long>(seed), e.what());
      }
    }
  }
  ok1 = passed == 50;
  ok2 = failures == 0 && matched == visible;
  report(1, ok1, "depth-2 round trip",
         fmt("%d/50 instances within tau=1e-6 and 5 s; worst error %.2e; slowest %.3f s%s",
             passed, worst_err, slowest, first_problem.c_str()));
  report(2, ok2, "depth-2 neuron recovery",
         fmt("%d/%d axis-visible neurons matched (hyperplane within 1e-7, same sign); worst "
             "canonical gap %.2e",
             matched, visible, worst_plane));
}

// Criteria 3, 4 and 5.
void depth_three(bool &ok3, bool &ok4, bool &ok5) {
  struct Shape {
    int d, d1, d2;
  };
  std::vector<Shape> shapes;
  for (int d : {3, 6})
    for (int d1 = 2; d1 <= d; ++d1)
      for (int m : {3, 5}) shapes.push_back({d, d1, m * d1});
  int passed = 0, exact_sets = 0, exact_rows = 0;
  double worst_err = 0.0, slowest = 0.0, worst_row = 0.0;
  std::string first_problem;
  for (int i = 0; i < 30; ++i) {
    const Shape s = shapes[static_cast<std::size_t>(i) % shapes.size()];
    const std::uint64_t seed = 2000 + static_cast<std::uint64_t>(i);
    try {
      const ThreeLayerNetd net = generate_three_layer(s.d, s.d1, s.d2, kDelta, seed);
      const PlainThreeLayer truth = copy_of(net);
      const QueryOracle oracle = as_oracle(net);
      const auto reads = audit::parameter_reads();
      const auto t0 = Clock::now();
      ThreeLayerOptions opts;
      opts.delta = kDelta;
      const ExtractedThreeLayer got = extract_three_layer(oracle, opts);
      const double secs = seconds_since(t0);
      extraction_reads += audit::parameter_reads() - reads;
      slowest = std::max(slowest, secs);
      const double err =
          worst_gap(truth, [&](const VectorXd &x) { return got(x); }, s.d, -5.0, 5.0, seed);
      worst_err = std::max(worst_err, err);
      if (err <= kTau && secs < 30.0) {
        ++passed;
      } else if (first_problem.empty()) {
        first_problem = fmt(" (first miss: seed %llu err %.2e time %.2fs)",
                            static_cast<unsigned long long>(seed), err, secs);
      }

      // Plane set: a bijection under canonical matching.
      const int rows = static_cast<int>(got.W.rows());
      std::vector<std::vector<double>> true_rows;
      for (int j = 0; j < s.d1; ++j) {
        true_rows.emplace_back(truth.W.begin() + j * s.d, truth.W.begin() + (j + 1) * s.d);
      }
      bool set_ok = rows == s.d1;
      std::vector<bool> used(static_cast<std::size_t>(rows), false);
      for (int j = 0; j < s.d1 && set_ok; ++j) {
        int hit = -1;
        for (int r = 0; r < rows; ++r) {
          if (!used[r] && canonical_gap(true_rows[j], truth.b[j], row(got.W, r), got.b(r)) <= 1e-7) {
            hit = r;
            break;
          }
        }
        set_ok = hit >= 0;
        if (set_ok) used[hit] = true;
      }
      if (set_ok) ++exact_sets;

      // Signed rows, paired by largest absolute cosine.
      bool rows_ok = rows == s.d1;
      std::vector<bool> taken(static_cast<std::size_t>(rows), false);
      for (int j = 0; j < s.d1 && rows_ok; ++j) {
        int best = -1;
        double best_cos = -1.0;
        for (int r = 0; r < rows; ++r) {
          double dot = 0.0, nr = 0.0;
          for (int a = 0; a < s.d; ++a) {
            dot += got.W(r, a) * true_rows[j][a];
            nr += got.W(r, a) * got.W(r, a);
          }
          const double cos = std::abs(dot) / std::sqrt(nr);
          if (cos > best_cos) best_cos = cos, best = r;
        }
        if (taken[best]) {
          rows_ok = false;
          break;
        }
        taken[best] = true;
        double gap = std::abs(got.b(best) - truth.b[j]);
        for (int a = 0; a < s.d; ++a) gap = std::max(gap, std::abs(got.W(best, a) - true_rows[j][a]));
        worst_row = std::max(worst_row, gap);
        rows_ok = gap <= 1e-7;
      }
      if (rows_ok) ++exact_rows;
    } catch (const std::exception &e) {
      if (first_problem.empty()) {
        first_problem = fmt(" (first failure: seed %llu: %s)",
                            static_cast<unsigned long long>(seed), e.what());
      }
    }
  }
  ok3 = passed == 30;
  ok4 = exact_sets == 30;
  ok5 = exact_rows == 30;
  report(3, ok3, "depth-3 round trip",
         fmt("%d/30 instances within tau=1e-6 and 30 s; worst error %.2e; slowest %.3f s%s",
             passed, worst_err, slowest, first_problem.c_str()));
  report(4, ok4, "first-layer filter", fmt("%d/30 trials recover exactly the first-layer set", exact_sets));
  report(5, ok5, "row signs",
         fmt("%d/30 trials with every signed row within 1e-7; worst row gap %.2e", exact_rows,
             worst_row));
}

// Criterion 6.
bool complexity() {
  const auto grid = [](BenchCell base) {
    std::vector<BenchCell> cells = {base};
    BenchCell c = base;
    c.d *= 2;
    cells.push_back(c);
    c = base;
    c.d1 *= 2;
    if (base.depth == 2 || c.d1 <= c.d) cells.push_back(c);
    if (base.depth == 3) {
      c = base;
      c.d2 *= 2;
      cells.push_back(c);
    }
    c = base;
    c.delta = base.delta * base.delta;
    cells.push_back(c);
    return cells;
  };
  const std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7};
  const BenchTable t3 = query_complexity_bench(grid({3, 6, 3, 9, 1e-2}), seeds);
  const BenchTable t2 = query_complexity_bench(grid({2, 4, 4, 0, 1e-2}), seeds);
  // Recheck the count ceiling here rather than trusting fits().
  auto ceiling_ok = [](const BenchTable &t, std::size_t &runs) {
    bool ok = true;
    for (const BenchRow &r : t.rows) {
      if (!r.generated) continue;
      ++runs;
      const double bound = complexity_bound(r.cell);
      ok = ok && r.ok && static_cast<double>(r.queries) <= 2.0 * t.constant * bound;
    }
    return ok;
  };
  std::size_t runs3 = 0, runs2 = 0;
  const bool ok = t3.fits() && t2.fits() && ceiling_ok(t3, runs3) && ceiling_ok(t2, runs2) &&
                  runs3 > 0 && runs2 > 0;
  report(6, ok, "query complexity",
         fmt("depth 3: %zu runs over %zu cells, C=%.3g, worst residual %.2fx; depth 2: %zu runs "
             "over %zu cells, C=%.3g, worst residual %.2fx",
             runs3, t3.cells.size(), t3.calibrated(), t3.worst_residual, runs2, t2.cells.size(),
             t2.calibrated(), t2.worst_residual));
  return ok;
}

// Criterion 7.
bool orthant_experiment() {
  const auto t0 = Clock::now();
  const BoundExperiment e = empirical_orthant_bound(2, 30, 100000, 0);
  const double secs = seconds_since(t0);
  // Closed form recomputed here.
  const double bound = std::pow(std::exp(1.0) * 30.0 / 2.0, 3.0) / std::pow(2.0, 30.0);
  const double sigma = std::sqrt(bound * (1.0 - bound) / 1e5);
  const double rate = static_cast<double>(e.hits) / 1e5;
  const bool ok = e.trials == 100000 && rate <= bound + 3.0 * sigma && secs < 60.0 &&
                  std::abs(e.bound - bound) <= 1e-12 * bound;
  report(7, ok, "orthant bound",
         fmt("%llu hits in 1e5 trials, rate %.2e vs bound %.3e + 3 sigma (%.2e); %.1f s",
             static_cast<unsigned long long>(e.hits), rate, bound, 3.0 * sigma, secs));
  return ok;
}

// Criterion 8.
bool critical_points() {
  const double delta = 1e-3;
  const double pitch = delta / 4.0;
  const double lo = -10.0, hi = 10.0;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> count(0, 8);
  std::uniform_real_distribution<double> pos(lo + 2 * delta, hi - 2 * delta);
  std::uniform_real_distribution<double> mag(0.2, 2.0);
  std::bernoulli_distribution flip(0.5);
  int agree = 0;
  double worst = 0.0;
  std::string first_problem;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = count(rng);
    std::vector<double> kinks;
    while (static_cast<int>(kinks.size()) < n) {
      const double t = pos(rng);
      bool clear = true;
      for (double k : kinks) clear = clear && std::abs(k - t) >= 2 * delta;
      if (clear) kinks.push_back(t);
    }
    std::sort(kinks.begin(), kinks.end());
    std::vector<double> jumps;
    for (int i = 0; i < n; ++i) jumps.push_back(flip(rng) ? mag(rng) : -mag(rng));
    const double slope = mag(rng) - 1.0, offset = mag(rng);
    auto f = [=](double t) {
      double v = slope * t + offset;
      for (int i = 0; i < n; ++i) v += jumps[i] * relu_(t - kinks[i]);
      return v;
    };

    // Dense scan: flag grid points with a non-zero second difference, then
    // intersect the clean pieces on either side of each flagged run.
    const long steps = std::lround((hi - lo) / pitch);
    std::vector<double> ts(steps + 1), vs(steps + 1);
    for (long i = 0; i <= steps; ++i) {
      ts[i] = lo + pitch * static_cast<double>(i);
      vs[i] = f(ts[i]);
    }
    std::vector<double> scanned;
    long i = 1;
    while (i < steps) {
      const double d2 = vs[i - 1] - 2 * vs[i] + vs[i + 1];
      if (std::abs(d2) <= 1e-9 * (1.0 + std::abs(vs[i]))) {
        ++i;
        continue;
      }
      long j = i;
      while (j + 1 < steps &&
             std::abs(vs[j] - 2 * vs[j + 1] + vs[j + 2]) > 1e-9 * (1.0 + std::abs(vs[j + 1]))) {
        ++j;
      }
      // Pieces through (i-2, i-1) and (j+1, j+2).
      const long a = std::max(i - 2, 0L), b = std::min(j + 2, steps);
      const double sl = (vs[i - 1] - vs[a]) / (ts[i - 1] - ts[a]);
      const double sr = (vs[b] - vs[j + 1]) / (ts[b] - ts[j + 1]);
      const double t = (vs[j + 1] - vs[i - 1] + sl * ts[i - 1] - sr * ts[j + 1]) / (sl - sr);
      scanned.push_back(t);
      i = j + 1;
    }

    const QueryOracle line(1, Domain::kFull,
                           [&](const VectorXd &x) { return f(x(0)); });
    std::vector<double> found;
    try {
      found = all_critical_points_1d(line, delta, {lo, hi}, 16);
    } catch (const std::exception &e) {
      if (first_problem.empty()) first_problem = fmt(" (trial %d: %s)", trial, e.what());
      continue;
    }
    bool same = found.size() == scanned.size();
    for (std::size_t k = 0; same && k < found.size(); ++k) {
      worst = std::max(worst, std::abs(found[k] - scanned[k]));
      same = std::abs(found[k] - scanned[k]) <= 1e-6;
    }
    if (same) {
      ++agree;
    } else if (first_problem.empty()) {
      first_problem = fmt(" (trial %d: %zu found, %zu scanned)", trial, found.size(), scanned.size());
    }
  }
  const bool ok = agree == 100;
  report(8, ok, "1-D critical points vs dense scan",
         fmt("%d/100 functions agree (counts equal, positions within 1e-6); worst gap %.2e%s",
             agree, worst, first_problem.c_str()));
  return ok;
}

}  // namespace

int main() {
  bool ok[10] = {};
  depth_two(ok[1], ok[2]);
  depth_three(ok[3], ok[4], ok[5]);
  ok[6] = complexity();
  ok[7] = orthant_experiment();
  ok[8] = critical_points();
  ok[9] = extraction_reads == 0;
  report(9, ok[9], "no parameter reads during extraction",
         fmt("%llu reads across the runs of criteria 1 and 3",
             static_cast<unsigned long long>(extraction_reads)));
  int failed = 0;
  for (int k = 1; k <= 9; ++k) failed += ok[k] ? 0 : 1;
  std::printf("%d/9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
