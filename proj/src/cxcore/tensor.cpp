#include "polsar/cxcore/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace polsar::cx {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<cplx<T>> data, bool requires_grad) {
  if (cx::numel(shape) != data.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  impl_ = std::make_shared<TensorImpl<T>>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <class T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(shape, std::vector<cplx<T>>(cx::numel(shape)), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(const Shape& shape, cplx<T> value, bool requires_grad) {
  return Tensor(shape, std::vector<cplx<T>>(cx::numel(shape), value), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::scalar(cplx<T> value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

template <class T>
std::span<cplx<T>> Tensor<T>::mutable_data() {
  if (impl_->node) throw ContractViolation("cannot mutate a tensor produced by a recorded op");
  return impl_->data;
}

template <class T>
cplx<T> Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

template <class T>
void Tensor<T>::set_requires_grad(bool on) {
  if (impl_->node && !on) throw ContractViolation("cannot clear requires_grad on a non-leaf");
  impl_->requires_grad = on;
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

template <class T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined()) throw ContractViolation("backward on undefined tensor");
  if (loss.rank() != 0) throw ContractViolation("loss must be a 0-dimensional tensor, got shape " +
                                                to_string(loss.shape()));
  const auto v = loss.item();
  const T tol = std::sqrt(std::numeric_limits<T>::epsilon()) * (T(1) + std::abs(v.real()));
  if (!(std::abs(v.imag()) <= tol))
    throw ContractViolation("loss must be real-valued, imaginary part is " +
                            std::to_string(static_cast<double>(v.imag())));
  if (!loss.requires_grad()) return;

  // Iterative DFS post-order; grey nodes on the stack detect cycles.
  using Impl = TensorImpl<T>;
  enum class Mark : char { grey, black };
  std::unordered_map<Impl*, Mark> marks;
  std::vector<Impl*> order;
  std::vector<std::pair<Impl*, std::size_t>> stack;
  stack.emplace_back(loss.impl().get(), 0);
  marks[loss.impl().get()] = Mark::grey;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto* rec = node->node.get();
    if (rec && next < rec->parents.size()) {
      Impl* parent = rec->parents[next++].get();
      if (!parent->requires_grad) continue;
      auto it = marks.find(parent);
      if (it == marks.end()) {
        marks[parent] = Mark::grey;
        stack.emplace_back(parent, 0);
      } else if (it->second == Mark::grey) {
        throw InternalError("cycle detected in autodiff graph at op '" + rec->op + "'");
      }
      continue;
    }
    marks[node] = Mark::black;
    order.push_back(node);
    stack.pop_back();
  }

  loss.impl()->grad_buffer()[0] += cplx<T>(1, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Impl* node = *it;
    auto& g = node->grad_buffer();
    if (node->node) node->node->backward(std::span<const cplx<T>>(g));
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace polsar::cx
