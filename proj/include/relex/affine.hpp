#ifndef RELEX_AFFINE_HPP_
#define RELEX_AFFINE_HPP_

#include <stdexcept>

#include "relex/types.hpp"

namespace relex {

/// x -> w.x + b on R^d.
template <typename Scalar>
struct AffineMap {
  VectorX<Scalar> w;
  Scalar b = Scalar(0);

  AffineMap() = default;
  AffineMap(VectorX<Scalar> w_, Scalar b_) : w(std::move(w_)), b(b_) {}

  static AffineMap zero(Index dim) {
    return AffineMap(VectorX<Scalar>::Zero(dim), Scalar(0));
  }

  Index dim() const { return w.size(); }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived> &x) const {
    if (x.size() != w.size()) {
      throw std::invalid_argument("AffineMap: dimension mismatch");
    }
    return w.dot(x) + b;
  }

  AffineMap operator-(const AffineMap &other) const {
    return AffineMap(w - other.w, b - other.b);
  }
  AffineMap operator+(const AffineMap &other) const {
    return AffineMap(w + other.w, b + other.b);
  }
  AffineMap operator*(Scalar s) const { return AffineMap(w * s, b * s); }
};

using AffineMapd = AffineMap<double>;

template <typename Scalar>
inline bool approx_equal(const AffineMap<Scalar> &a, const AffineMap<Scalar> &b,
                         const Tolerance &tol = {}) {
  return approx_equal(a.w, b.w, tol) && tol.equal(a.b, b.b);
}

}  // namespace relex

#endif  // RELEX_AFFINE_HPP_
