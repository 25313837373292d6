#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "polsar/cxcore/tensor.hpp"

namespace polsar::nn {

using cx::cplx;
using cx::Shape;
using cx::Tensor;

using Rng = std::mt19937_64;

enum class InitScheme {
  complex_he_normal,
  complex_he_uniform,
  complex_xavier_normal,
  complex_xavier_uniform,
  real_he_normal,
  real_xavier_normal,
  zeros,
  identity2x2,  // per-channel 2x2 identity (complex batch-norm Gamma)
  ones,
};

InitScheme parse_init_scheme(std::string_view s);
std::string_view to_string(InitScheme s);

/// Scheme a real-valued twin uses for weights initialised with `s`.
InitScheme real_counterpart(InitScheme s);

/// A trainable tensor plus its initializer identity and AdamW moments.
/// Moments hold one real accumulator per real component: the real part of
/// m[i] tracks Re(w[i]), the imaginary part tracks Im(w[i]).
template <class T>
struct LayerParam {
  std::string name;
  Tensor<T> value;
  InitScheme scheme = InitScheme::zeros;
  // Imaginary part pinned at zero (real BN affine, modReLU offsets, RVNN weights).
  bool real_valued = false;
  std::vector<cplx<T>> adam_m;
  std::vector<cplx<T>> adam_v;

  std::size_t real_count() const { return value.numel() * (real_valued ? 1 : 2); }
  void reset_state();
};

/// Draws a parameter of `shape` per `scheme`. For the complex schemes Re and
/// Im are i.i.d. with the per-component law (He normal: N(0, 1/fan_in)).
template <class T>
LayerParam<T> init_param(std::string name, const Shape& shape, InitScheme scheme, std::size_t fan_in,
                         std::size_t fan_out, Rng& rng, bool real_valued = false);

/// Non-trainable state persisted with the model (batch-norm running stats).
template <class T>
struct BufferRef {
  std::string name;
  std::variant<std::vector<cplx<T>>*, std::vector<T>*> data;
};

template <class T>
using ParamList = std::vector<LayerParam<T>*>;
template <class T>
using BufferList = std::vector<BufferRef<T>>;

}  // namespace polsar::nn
