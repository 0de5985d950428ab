#ifndef RELEX_NETWORK_HPP_
#define RELEX_NETWORK_HPP_

#include <optional>
#include <stdexcept>
#include <vector>

#include "relex/affine.hpp"
#include "relex/audit.hpp"

namespace relex {

/// One hidden unit contributing u * relu(w.x + b).
template <typename Scalar>
struct Neuron {
  VectorX<Scalar> w;
  Scalar b = Scalar(0);
  int u = 1;

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived> &x) const {
    return Scalar(u) * relu(Scalar(w.dot(x) + b));
  }
};

using Neurond = Neuron<double>;

namespace detail {
template <typename Derived>
void require_input(const Eigen::MatrixBase<Derived> &x, Index dim) {
  if (x.size() != dim) {
    throw std::invalid_argument("network input dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::domain_error("network input is not finite");
  }
}
}  // namespace detail

/**
 * N(x) = skip(x) + sum_j u_j relu(w_j.x + b_j).
 *
 * Parameter accessors are audited: reading them outside a query oracle
 * evaluation increments audit::parameter_reads().
 */
template <typename Scalar>
class TwoLayerNet {
 public:
  TwoLayerNet() = default;

  TwoLayerNet(Index dim, std::vector<Neuron<Scalar>> neurons,
              std::optional<AffineMap<Scalar>> skip = std::nullopt)
      : dim_(dim), neurons_(std::move(neurons)), skip_(std::move(skip)) {
    if (dim_ < 1) {
      throw std::invalid_argument("TwoLayerNet: dimension must be >= 1");
    }
    for (const auto &n : neurons_) {
      if (n.w.size() != dim_) {
        throw std::invalid_argument("TwoLayerNet: neuron dimension mismatch");
      }
      if (n.u != 1 && n.u != -1) {
        throw std::invalid_argument("TwoLayerNet: output sign must be +1 or -1");
      }
      if (!n.w.allFinite() || !std::isfinite(static_cast<double>(n.b))) {
        throw std::invalid_argument("TwoLayerNet: non-finite parameter");
      }
    }
    if (skip_ && skip_->dim() != dim_) {
      throw std::invalid_argument("TwoLayerNet: skip dimension mismatch");
    }
  }

  Index dim() const { return dim_; }

  Index width() const {
    audit::note_parameter_read();
    return static_cast<Index>(neurons_.size());
  }
  const std::vector<Neuron<Scalar>> &neurons() const {
    audit::note_parameter_read();
    return neurons_;
  }
  const std::optional<AffineMap<Scalar>> &skip() const {
    audit::note_parameter_read();
    return skip_;
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived> &x) const {
    audit::note_parameter_read();
    detail::require_input(x, dim_);
    Scalar out = skip_ ? (*skip_)(x) : Scalar(0);
    for (const auto &n : neurons_) {
      out += n(x);
    }
    return out;
  }

 private:
  Index dim_ = 0;
  std::vector<Neuron<Scalar>> neurons_;
  std::optional<AffineMap<Scalar>> skip_;
};

using TwoLayerNetd = TwoLayerNet<double>;

/**
 * N(x) = u^T relu(V relu(W x + b) + c) [+ skip(relu(W x + b))].
 *
 * Ground-truth instances carry no skip term; extracted networks use it for
 * the affine part of the recovered top layers.
 */
template <typename Scalar>
class ThreeLayerNet {
 public:
  ThreeLayerNet() = default;

  ThreeLayerNet(MatrixX<Scalar> W, VectorX<Scalar> b, MatrixX<Scalar> V,
                VectorX<Scalar> c, VectorX<Scalar> u,
                std::optional<AffineMap<Scalar>> skip = std::nullopt)
      : W_(std::move(W)),
        b_(std::move(b)),
        V_(std::move(V)),
        c_(std::move(c)),
        u_(std::move(u)),
        skip_(std::move(skip)) {
    if (W_.rows() < 1 || W_.cols() < 1) {
      throw std::invalid_argument("ThreeLayerNet: empty first layer");
    }
    if (b_.size() != W_.rows() || V_.cols() != W_.rows() ||
        c_.size() != V_.rows() || u_.size() != V_.rows()) {
      throw std::invalid_argument("ThreeLayerNet: inconsistent shapes");
    }
    for (Index i = 0; i < u_.size(); ++i) {
      if (u_(i) != Scalar(1) && u_(i) != Scalar(-1)) {
        throw std::invalid_argument("ThreeLayerNet: output sign must be +1 or -1");
      }
    }
    if (!W_.allFinite() || !b_.allFinite() || !V_.allFinite() ||
        !c_.allFinite()) {
      throw std::invalid_argument("ThreeLayerNet: non-finite parameter");
    }
    if (skip_ && skip_->dim() != W_.rows()) {
      throw std::invalid_argument("ThreeLayerNet: skip dimension mismatch");
    }
  }

  Index dim() const { return W_.cols(); }

  Index width1() const {
    audit::note_parameter_read();
    return W_.rows();
  }
  Index width2() const {
    audit::note_parameter_read();
    return V_.rows();
  }
  const MatrixX<Scalar> &W() const {
    audit::note_parameter_read();
    return W_;
  }
  const VectorX<Scalar> &b() const {
    audit::note_parameter_read();
    return b_;
  }
  const MatrixX<Scalar> &V() const {
    audit::note_parameter_read();
    return V_;
  }
  const VectorX<Scalar> &c() const {
    audit::note_parameter_read();
    return c_;
  }
  const VectorX<Scalar> &u() const {
    audit::note_parameter_read();
    return u_;
  }
  const std::optional<AffineMap<Scalar>> &skip() const {
    audit::note_parameter_read();
    return skip_;
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived> &x) const {
    audit::note_parameter_read();
    detail::require_input(x, dim());
    const VectorX<Scalar> hidden = relu(W_ * x + b_);
    Scalar out = u_.dot(relu(V_ * hidden + c_));
    if (skip_) {
      out += (*skip_)(hidden);
    }
    return out;
  }

  /// The function of the top two layers, F(h) = u^T relu(V h + c) [+ skip(h)],
  /// as a depth-2 network on R^{d1}.
  TwoLayerNet<Scalar> top_layers() const {
    audit::note_parameter_read();
    std::vector<Neuron<Scalar>> neurons;
    neurons.reserve(V_.rows());
    for (Index k = 0; k < V_.rows(); ++k) {
      neurons.push_back({V_.row(k).transpose(), c_(k),
                         u_(k) > Scalar(0) ? 1 : -1});
    }
    return TwoLayerNet<Scalar>(W_.rows(), std::move(neurons), skip_);
  }

 private:
  MatrixX<Scalar> W_;
  VectorX<Scalar> b_;
  MatrixX<Scalar> V_;
  VectorX<Scalar> c_;
  VectorX<Scalar> u_;
  std::optional<AffineMap<Scalar>> skip_;
};

using ThreeLayerNetd = ThreeLayerNet<double>;

template <typename Scalar, typename Derived>
Scalar eval_two_layer(const TwoLayerNet<Scalar> &net,
                      const Eigen::MatrixBase<Derived> &x) {
  return net(x);
}

template <typename Scalar, typename Derived>
Scalar eval_three_layer(const ThreeLayerNet<Scalar> &net,
                        const Eigen::MatrixBase<Derived> &x) {
  return net(x);
}

}  // namespace relex

#endif  // RELEX_NETWORK_HPP_
