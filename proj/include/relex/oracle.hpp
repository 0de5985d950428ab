#ifndef RELEX_ORACLE_HPP_
#define RELEX_ORACLE_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>

#include "relex/hyperplane.hpp"
#include "relex/network.hpp"

namespace relex {

enum class Domain { kFull, kPositiveOrthant };

/**
 * Black-box evaluation handle. Every call increments a query counter by one.
 *
 * Copies share the counter, so a copy handed to a helper still charges the
 * same budget. Oracles created separately (e.g. two as_oracle() calls on the
 * same net) count independently. Counting is atomic.
 */
class QueryOracle {
 public:
  using Function = std::function<double(const VectorXd &)>;

  QueryOracle(Index dim, Domain domain, Function f);

  double operator()(const VectorXd &x) const;

  std::uint64_t queries() const {
    return counter_->load(std::memory_order_relaxed);
  }
  Index dim() const { return dim_; }
  Domain domain() const { return domain_; }

 private:
  Index dim_;
  Domain domain_;
  Function f_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// Depth-2 networks are queried on the positive orthant only.
QueryOracle as_oracle(const TwoLayerNetd &net,
                      Domain domain = Domain::kPositiveOrthant);
QueryOracle as_oracle(const ThreeLayerNetd &net, Domain domain = Domain::kFull);

/// One-dimensional oracle t -> oracle(ray.at(t)). Each evaluation costs one
/// query of the underlying oracle (and one of its own counter).
QueryOracle restrict_to_ray(const QueryOracle &oracle, const Rayd &ray);

/// Convenience for scalar functions of a 1-D oracle.
inline double eval_line(const QueryOracle &line, double t) {
  return line(VectorXd::Constant(1, t));
}

}  // namespace relex

#endif  // RELEX_ORACLE_HPP_
