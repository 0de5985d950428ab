#ifndef RELEX_TYPES_HPP_
#define RELEX_TYPES_HPP_

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <Eigen/Dense>

namespace relex {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename Scalar,
          typename = std::enable_if_t<std::is_arithmetic_v<Scalar>>>
inline Scalar relu(Scalar z) {
  return z > Scalar(0) ? z : Scalar(0);
}

/// Elementwise ReLU usable inside Eigen expressions.
template <typename Derived>
inline auto relu(const Eigen::MatrixBase<Derived> &z) {
  return z.cwiseMax(typename Derived::Scalar(0));
}

/**
 * Mixed absolute/relative comparison of reals:
 *   |a - b| <= abs + rel * max(|a|, |b|)
 */
struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-9;

  bool equal(double a, double b) const {
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
  }
};

inline bool approx_equal(double a, double b, const Tolerance &tol = {}) {
  return tol.equal(a, b);
}

template <typename DerivedA, typename DerivedB>
inline bool approx_equal(const Eigen::MatrixBase<DerivedA> &a,
                         const Eigen::MatrixBase<DerivedB> &b,
                         const Tolerance &tol = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return false;
  }
  for (Index i = 0; i < a.size(); ++i) {
    if (!tol.equal(a(i), b(i))) {
      return false;
    }
  }
  return true;
}

template <typename Derived>
inline bool all_finite(const Eigen::MatrixBase<Derived> &m) {
  return m.allFinite();
}

}  // namespace relex

#endif  // RELEX_TYPES_HPP_
