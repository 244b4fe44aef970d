#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "panforge/core/errors.hpp"
#include "panforge/core/shape.hpp"

namespace panforge {

using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;

namespace detail {

template <typename Real>
struct TensorStorage {
  std::vector<Real> values;
  std::vector<Real> grad;  // empty until a gradient is first accumulated
  bool requires_grad = false;
  NodeId node = kNoNode;
};

}  // namespace detail

/// Dense N-dimensional array, a node in a differentiable computation graph.
///
/// A Tensor is a cheap handle: copies share the underlying value and gradient
/// buffers, which is what lets backward closures see gradients accumulated
/// after the closure was created. Use deep_copy() for an independent tensor.
template <typename Real>
class Tensor {
 public:
  using Storage = detail::TensorStorage<Real>;

  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), st_(std::make_shared<Storage>()) {
    st_->values.assign(static_cast<std::size_t>(shape_.numel()), Real(0));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, Real v) {
    Tensor t(std::move(shape));
    std::fill(t.values().begin(), t.values().end(), v);
    return t;
  }

  static Tensor scalar(Real v) { return full(Shape{1}, v); }

  static Tensor from(Shape shape, std::vector<Real> vals) {
    if (shape.numel() != static_cast<std::int64_t>(vals.size()))
      throw ShapeError("value count " + std::to_string(vals.size()) +
                       " does not fill shape " + shape.to_string());
    Tensor t;
    t.shape_ = std::move(shape);
    t.st_ = std::make_shared<Storage>();
    t.st_->values = std::move(vals);
    return t;
  }

  bool defined() const { return st_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int rank() const { return shape_.rank(); }
  int dim(int i) const { return shape_[i]; }
  std::int64_t size() const { return shape_.numel(); }

  std::vector<Real>& values() { return st_->values; }
  const std::vector<Real>& values() const { return st_->values; }
  Real* data() { return st_->values.data(); }
  const Real* data() const { return st_->values.data(); }

  /// Value of a single-element tensor.
  Real value() const {
    if (size() != 1) throw ContractError("value() called on non-scalar tensor " + shape_.to_string());
    return st_->values[0];
  }

  bool requires_grad() const { return st_ && st_->requires_grad; }
  void set_requires_grad(bool b) { st_->requires_grad = b; }

  NodeId node() const { return st_ ? st_->node : kNoNode; }
  void set_node(NodeId id) { st_->node = id; }

  bool has_grad() const { return st_ && !st_->grad.empty(); }

  /// Gradient buffer, allocated (zero-filled) on first use.
  std::vector<Real>& grad() {
    if (st_->grad.empty()) st_->grad.assign(st_->values.size(), Real(0));
    return st_->grad;
  }
  const std::vector<Real>& grad() const { return st_->grad; }
  Real* grad_data() { return grad().data(); }

  void zero_grad() {
    if (st_ && !st_->grad.empty()) std::fill(st_->grad.begin(), st_->grad.end(), Real(0));
  }
  void drop_grad() {
    if (st_) st_->grad.clear();
  }

  Tensor deep_copy() const {
    Tensor t = from(shape_, st_->values);
    return t;
  }

  /// Value copy that is detached from any graph and never tracks gradients.
  Tensor detached() const { return deep_copy(); }

  bool all_finite() const {
    for (Real v : st_->values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

 private:
  Shape shape_;
  std::shared_ptr<Storage> st_;
};

}  // namespace panforge
