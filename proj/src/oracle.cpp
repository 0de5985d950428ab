#include "relex/oracle.hpp"

#include <stdexcept>

#include "relex/audit.hpp"

namespace relex {

QueryOracle::QueryOracle(Index dim, Domain domain, Function f)
    : dim_(dim),
      domain_(domain),
      f_(std::move(f)),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (dim_ < 1) {
    throw std::invalid_argument("QueryOracle: dimension must be >= 1");
  }
  if (!f_) {
    throw std::invalid_argument("QueryOracle: empty evaluation function");
  }
}

double QueryOracle::operator()(const VectorXd &x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("QueryOracle: dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::domain_error("QueryOracle: non-finite input");
  }
  if (domain_ == Domain::kPositiveOrthant && (x.array() < 0.0).any()) {
    throw std::domain_error("QueryOracle: input outside the positive orthant");
  }
  counter_->fetch_add(1, std::memory_order_relaxed);
  audit::OracleScope scope;
  return f_(x);
}

QueryOracle as_oracle(const TwoLayerNetd &net, Domain domain) {
  return QueryOracle(net.dim(), domain,
                     [net](const VectorXd &x) { return eval_two_layer(net, x); });
}

QueryOracle as_oracle(const ThreeLayerNetd &net, Domain domain) {
  return QueryOracle(net.dim(), domain, [net](const VectorXd &x) {
    return eval_three_layer(net, x);
  });
}

QueryOracle restrict_to_ray(const QueryOracle &oracle, const Rayd &ray) {
  if (ray.base.size() != oracle.dim()) {
    throw std::invalid_argument("restrict_to_ray: dimension mismatch");
  }
  return QueryOracle(1, Domain::kFull, [oracle, ray](const VectorXd &t) {
    return oracle(ray.at(t(0)));
  });
}

}  // namespace relex
