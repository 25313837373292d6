#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polsar/errors.hpp"

namespace polsar::cx {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <class T>
using cplx = std::complex<T>;

template <class T>
struct TensorImpl;

// One recorded operation in the backward graph. `backward` receives the
// gradient of the op output and accumulates into the parents' buffers.
template <class T>
struct GradRecord {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl<T>>> parents;
  std::function<void(std::span<const cplx<T>>)> backward;
};

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<cplx<T>> data;
  std::vector<cplx<T>> grad;
  bool requires_grad = false;
  std::shared_ptr<GradRecord<T>> node;

  std::vector<cplx<T>>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), cplx<T>{});
    return grad;
  }
};

/// Shared handle to a complex N-d tensor with an optional gradient.
///
/// Copies alias the same storage. Gradients follow the convention
/// grad = dL/dRe(w) + j dL/dIm(w), so plain descent is w <- w - lr * grad.
template <class T>
class Tensor {
 public:
  using value_type = cplx<T>;

  Tensor() = default;
  Tensor(Shape shape, std::vector<cplx<T>> data, bool requires_grad = false);

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, cplx<T> value, bool requires_grad = false);
  static Tensor scalar(cplx<T> value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const cplx<T>> data() const { return impl_->data; }
  // Leaves only: a tensor that is the output of a recorded op is frozen.
  std::span<cplx<T>> mutable_data();
  cplx<T> item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }
  std::span<const cplx<T>> grad() const { return impl_->grad; }
  std::span<cplx<T>> mutable_grad() { return impl_->grad_buffer(); }
  void zero_grad() { impl_->grad.clear(); }

  bool is_leaf() const { return impl_->node == nullptr; }
  const GradRecord<T>* node() const { return impl_->node.get(); }

  Tensor detach() const;
  Tensor clone() const { return detach(); }

  const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl<T>> impl_;

  template <class U, class F>
  friend Tensor<U> make_result(std::string op, Shape shape, std::vector<cplx<U>> data,
                               std::vector<Tensor<U>> parents, F&& backward);
};

/// Builds the output of a differentiable op. The backward closure is only
/// recorded when at least one parent requires a gradient.
template <class T, class F>
Tensor<T> make_result(std::string op, Shape shape, std::vector<cplx<T>> data,
                      std::vector<Tensor<T>> parents, F&& backward) {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (any) {
    impl->requires_grad = true;
    auto rec = std::make_shared<GradRecord<T>>();
    rec->op = std::move(op);
    for (const auto& p : parents) rec->parents.push_back(p.impl());
    rec->backward = std::forward<F>(backward);
    impl->node = std::move(rec);
  }
  return Tensor<T>(std::move(impl));
}

/// Accumulates `g` into `t`'s gradient if `t` takes part in differentiation.
template <class T>
inline void accumulate(const Tensor<T>& t, std::size_t i, cplx<T> g) {
  if (t.requires_grad()) t.impl()->grad_buffer()[i] += g;
}

/// Pulls an output gradient G back through an elementwise map w = f(z) with
/// real Jacobian [[du/dx, du/dy], [dv/dx, dv/dy]].
template <class T>
inline cplx<T> pullback(cplx<T> g, T ux, T uy, T vx, T vy) {
  return {g.real() * ux + g.imag() * vx, g.real() * uy + g.imag() * vy};
}

/// Reverse-mode sweep from a real scalar loss. Populates the gradient of
/// every tensor reachable from `loss` that requires one.
template <class T>
void backward(const Tensor<T>& loss);

}  // namespace polsar::cx
