#ifndef RELEX_HYPERPLANE_HPP_
#define RELEX_HYPERPLANE_HPP_

#include <cmath>
#include <stdexcept>

#include "relex/affine.hpp"

namespace relex {

/**
 * Affine hyperplane {x : normal.x + offset = 0} with unit normal, stored in
 * canonical orientation: the first normal coordinate with magnitude above
 * 1e-9 is positive, so (w, b) and (-w, -b) describe the same object.
 */
template <typename Scalar>
class Hyperplane {
 public:
  static constexpr double kOrientationThreshold = 1e-9;

  Hyperplane() = default;

  /// Normalizes and canonicalizes. Throws on a (numerically) zero normal.
  Hyperplane(const VectorX<Scalar> &w, Scalar b) {
    const Scalar norm = w.norm();
    if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm))) {
      throw std::invalid_argument("Hyperplane: zero or non-finite normal");
    }
    normal_ = w / norm;
    offset_ = b / norm;
    for (Index i = 0; i < normal_.size(); ++i) {
      if (std::abs(normal_(i)) > Scalar(kOrientationThreshold)) {
        if (normal_(i) < Scalar(0)) {
          normal_ = -normal_;
          offset_ = -offset_;
        }
        break;
      }
    }
  }

  explicit Hyperplane(const AffineMap<Scalar> &f) : Hyperplane(f.w, f.b) {}

  const VectorX<Scalar> &normal() const { return normal_; }
  Scalar offset() const { return offset_; }
  Index dim() const { return normal_.size(); }

  /// Signed distance from x (positive on the side the normal points to).
  template <typename Derived>
  Scalar signed_distance(const Eigen::MatrixBase<Derived> &x) const {
    return normal_.dot(x) + offset_;
  }

  /// Point of the plane closest to the origin.
  VectorX<Scalar> foot() const { return -offset_ * normal_; }

  /// Projects x onto the plane.
  template <typename Derived>
  VectorX<Scalar> project(const Eigen::MatrixBase<Derived> &x) const {
    return x - signed_distance(x) * normal_;
  }

 private:
  VectorX<Scalar> normal_;
  Scalar offset_ = Scalar(0);
};

using Hyperplaned = Hyperplane<double>;

/// Planes agree when normals and offsets agree within `tol`, offsets
/// compared relative to (1 + |offset|).
template <typename Scalar>
inline bool same_plane(const Hyperplane<Scalar> &a, const Hyperplane<Scalar> &b,
                       double tol) {
  if (a.dim() != b.dim()) {
    return false;
  }
  const double dn = (a.normal() - b.normal()).template lpNorm<Eigen::Infinity>();
  const double doff = std::abs(a.offset() - b.offset()) /
                      (1.0 + std::max(std::abs(a.offset()), std::abs(b.offset())));
  return dn <= tol && doff <= tol;
}

/// Maximum of normal and (relative) offset discrepancy between two planes.
template <typename Scalar>
inline double plane_distance(const Hyperplane<Scalar> &a,
                             const Hyperplane<Scalar> &b) {
  const double dn = (a.normal() - b.normal()).template lpNorm<Eigen::Infinity>();
  const double doff = std::abs(a.offset() - b.offset()) /
                      (1.0 + std::max(std::abs(a.offset()), std::abs(b.offset())));
  return std::max(dn, doff);
}

/// base + t * direction, with unit direction.
template <typename Scalar>
struct Ray {
  VectorX<Scalar> base;
  VectorX<Scalar> direction;

  Ray(VectorX<Scalar> base_, const VectorX<Scalar> &dir)
      : base(std::move(base_)), direction(dir.normalized()) {
    if (base.size() != direction.size()) {
      throw std::invalid_argument("Ray: dimension mismatch");
    }
  }

  static Ray axis(Index dim, Index i) {
    return Ray(VectorX<Scalar>::Zero(dim), VectorX<Scalar>::Unit(dim, i));
  }

  VectorX<Scalar> at(Scalar t) const { return base + t * direction; }
};

using Rayd = Ray<double>;

}  // namespace relex

#endif  // RELEX_HYPERPLANE_HPP_
