#include "polsar/cxcore/ops.hpp"

#include <Eigen/Core>
#include <cmath>

namespace polsar::cx {

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t ea = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t eb = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (ea != eb && ea != 1 && eb != 1)
      throw ShapeError("shapes " + to_string(a) + " and " + to_string(b) +
                       " are not broadcast-compatible");
    out[i] = ea == 1 ? eb : ea;
  }
  return out;
}

namespace {

// Flat source index of every output element for an operand broadcast to `out`.
std::vector<std::size_t> broadcast_index(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t k = in.size(); k-- > 0;) {
    const std::size_t i = k + (r - in.size());
    stride[i] = in[k] == 1 ? 0 : s;
    s *= in[k];
  }
  std::vector<std::size_t> idx(numel(out));
  std::vector<std::size_t> counter(r, 0);
  std::size_t cur = 0;
  for (std::size_t n = 0; n < idx.size(); ++n) {
    idx[n] = cur;
    for (std::size_t d = r; d-- > 0;) {
      if (++counter[d] < out[d]) {
        cur += stride[d];
        break;
      }
      cur -= stride[d] * (counter[d] - 1);
      counter[d] = 0;
    }
  }
  return idx;
}

template <class T, class Fwd, class Bwd>
Tensor<T> binary(const char* name, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, Bwd bwd) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  auto ia = broadcast_index(a.shape(), out);
  auto ib = broadcast_index(b.shape(), out);
  std::vector<cplx<T>> data(ia.size());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t n = 0; n < data.size(); ++n) data[n] = fwd(da[ia[n]], db[ib[n]]);
  return make_result<T>(name, out, std::move(data), {a, b},
                        [a, b, ia = std::move(ia), ib = std::move(ib), bwd](std::span<const cplx<T>> g) {
                          const auto da = a.data();
                          const auto db = b.data();
                          for (std::size_t n = 0; n < g.size(); ++n) {
                            auto [ga, gb] = bwd(g[n], da[ia[n]], db[ib[n]]);
                            accumulate(a, ia[n], ga);
                            accumulate(b, ib[n], gb);
                          }
                        });
}

template <class T, class Fwd, class Bwd>
Tensor<T> unary(const char* name, const Tensor<T>& a, Fwd fwd, Bwd bwd) {
  const auto da = a.data();
  std::vector<cplx<T>> data(da.size());
  for (std::size_t n = 0; n < data.size(); ++n) data[n] = fwd(da[n]);
  return make_result<T>(name, a.shape(), std::move(data), {a}, [a, bwd](std::span<const cplx<T>> g) {
    if (!a.requires_grad()) return;
    const auto da = a.data();
    auto& ga = a.impl()->grad_buffer();
    for (std::size_t n = 0; n < g.size(); ++n) ga[n] += bwd(g[n], da[n]);
  });
}

}  // namespace

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "add", a, b, [](cplx<T> x, cplx<T> y) { return x + y; },
      [](cplx<T> g, cplx<T>, cplx<T>) { return std::pair{g, g}; });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "sub", a, b, [](cplx<T> x, cplx<T> y) { return x - y; },
      [](cplx<T> g, cplx<T>, cplx<T>) { return std::pair{g, -g}; });
}

// Holomorphic in each argument: grad_a = g * conj(b), grad_b = g * conj(a).
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "mul", a, b, [](cplx<T> x, cplx<T> y) { return x * y; },
      [](cplx<T> g, cplx<T> x, cplx<T> y) { return std::pair{g * std::conj(y), g * std::conj(x)}; });
}

template <class T>
Tensor<T> conj(const Tensor<T>& a) {
  return unary<T>(
      "conj", a, [](cplx<T> z) { return std::conj(z); }, [](cplx<T> g, cplx<T>) { return std::conj(g); });
}

template <class T>
Tensor<T> abs(const Tensor<T>& a) {
  return unary<T>(
      "abs", a, [](cplx<T> z) { return cplx<T>(std::abs(z), 0); },
      [](cplx<T> g, cplx<T> z) {
        const T r = std::abs(z);
        if (r == T(0)) return cplx<T>{};
        return cplx<T>(g.real() * z.real() / r, g.real() * z.imag() / r);
      });
}

// angle(0) := 0 with zero gradient.
template <class T>
Tensor<T> angle(const Tensor<T>& a) {
  return unary<T>(
      "angle", a,
      [](cplx<T> z) { return cplx<T>(z == cplx<T>{} ? T(0) : std::arg(z), 0); },
      [](cplx<T> g, cplx<T> z) {
        const T r2 = std::norm(z);
        if (r2 == T(0)) return cplx<T>{};
        return cplx<T>(-g.real() * z.imag() / r2, g.real() * z.real() / r2);
      });
}

template <class T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary<T>(
      "exp", a, [](cplx<T> z) { return std::exp(z); },
      [](cplx<T> g, cplx<T> z) { return g * std::conj(std::exp(z)); });
}

template <class T>
Tensor<T> real(const Tensor<T>& a) {
  return unary<T>(
      "real", a, [](cplx<T> z) { return cplx<T>(z.real(), 0); },
      [](cplx<T> g, cplx<T>) { return cplx<T>(g.real(), 0); });
}

template <class T>
Tensor<T> imag(const Tensor<T>& a) {
  return unary<T>(
      "imag", a, [](cplx<T> z) { return cplx<T>(z.imag(), 0); },
      [](cplx<T> g, cplx<T>) { return cplx<T>(0, g.real()); });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary<T>(
      "scale", a, [factor](cplx<T> z) { return z * factor; },
      [factor](cplx<T> g, cplx<T>) { return g * factor; });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, cplx<T> factor) {
  return unary<T>(
      "scale", a, [factor](cplx<T> z) { return z * factor; },
      [factor](cplx<T> g, cplx<T>) { return g * std::conj(factor); });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  cplx<T> s{};
  for (auto v : a.data()) s += v;
  return make_result<T>("sum", {}, {s}, {a}, [a](std::span<const cplx<T>> g) {
    if (!a.requires_grad()) return;
    for (auto& v : a.impl()->grad_buffer()) v += g[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  const T inv = T(1) / static_cast<T>(a.numel());
  return scale(sum(a), inv);
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul of " + to_string(a.shape()) + " and " + to_string(b.shape()));
  using Mat = Eigen::Matrix<cplx<T>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<const Mat>;
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<cplx<T>> out(static_cast<std::size_t>(m * n));
  Eigen::Map<Mat>(out.data(), m, n).noalias() = CMap(a.data().data(), m, k) * CMap(b.data().data(), k, n);
  return make_result<T>("matmul", {a.dim(0), b.dim(1)}, std::move(out), {a, b},
                        [a, b, m, k, n](std::span<const cplx<T>> g) {
                          CMap G(g.data(), m, n);
                          if (a.requires_grad()) {
                            Eigen::Map<Mat> ga(a.impl()->grad_buffer().data(), m, k);
                            ga.noalias() += G * CMap(b.data().data(), k, n).adjoint();
                          }
                          if (b.requires_grad()) {
                            Eigen::Map<Mat> gb(b.impl()->grad_buffer().data(), k, n);
                            gb.noalias() += CMap(a.data().data(), m, k).adjoint() * G;
                          }
                        });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.numel())
    throw ShapeError("cannot reshape " + to_string(a.shape()) + " to " + to_string(shape));
  std::vector<cplx<T>> data(a.data().begin(), a.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(data), {a}, [a](std::span<const cplx<T>> g) {
    if (!a.requires_grad()) return;
    auto& ga = a.impl()->grad_buffer();
    for (std::size_t n = 0; n < g.size(); ++n) ga[n] += g[n];
  });
}

#define POLSAR_INSTANTIATE(T)                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> conj(const Tensor<T>&);                           \
  template Tensor<T> abs(const Tensor<T>&);                            \
  template Tensor<T> angle(const Tensor<T>&);                          \
  template Tensor<T> exp(const Tensor<T>&);                            \
  template Tensor<T> real(const Tensor<T>&);                           \
  template Tensor<T> imag(const Tensor<T>&);                           \
  template Tensor<T> scale(const Tensor<T>&, T);                       \
  template Tensor<T> scale(const Tensor<T>&, cplx<T>);                 \
  template Tensor<T> sum(const Tensor<T>&);                            \
  template Tensor<T> mean(const Tensor<T>&);                           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> reshape(const Tensor<T>&, Shape);

POLSAR_INSTANTIATE(float)
POLSAR_INSTANTIATE(double)

}  // namespace polsar::cx
