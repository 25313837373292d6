#pragma once

#include "polsar/cxcore/tensor.hpp"

namespace polsar::cx {

// Elementwise binary ops broadcast over singleton extents (shapes are
// right-aligned, as in numpy).
template <class T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <class T> Tensor<T> conj(const Tensor<T>& a);
// abs and angle return real-valued tensors (zero imaginary part).
template <class T> Tensor<T> abs(const Tensor<T>& a);
template <class T> Tensor<T> angle(const Tensor<T>& a);
template <class T> Tensor<T> exp(const Tensor<T>& a);
template <class T> Tensor<T> real(const Tensor<T>& a);
template <class T> Tensor<T> imag(const Tensor<T>& a);
template <class T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <class T> Tensor<T> scale(const Tensor<T>& a, cplx<T> factor);

// Reductions produce rank-0 tensors.
template <class T> Tensor<T> sum(const Tensor<T>& a);
template <class T> Tensor<T> mean(const Tensor<T>& a);

template <class T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace polsar::cx
