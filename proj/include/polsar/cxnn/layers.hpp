#pragma once

#include <optional>
#include <string>

#include "polsar/cxnn/functional.hpp"
#include "polsar/cxnn/param.hpp"

namespace polsar::nn {

enum class Downsample { strided_conv, avgpool };
enum class Upsample { nearest, bilinear };

Downsample parse_downsample(std::string_view s);
Upsample parse_upsample(std::string_view s);
std::string_view to_string(Downsample d);
std::string_view to_string(Upsample u);

template <class T>
struct Conv2d {
  LayerParam<T> weight, bias;
  int stride = 1;
  int padding = 0;
  Field field = Field::complex;

  Conv2d() = default;
  // same-padding (k/2) convolution; `scheme` applies to the kernel, bias starts at 0
  Conv2d(const std::string& name, std::size_t cin, std::size_t cout, int kernel, int stride, Field field,
         InitScheme scheme, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;
  void collect(ParamList<T>& out);
};

template <class T>
struct Linear {
  LayerParam<T> weight, bias;
  Field field = Field::complex;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Field field, InitScheme scheme, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;
  void collect(ParamList<T>& out);
};

/// Complex BN for Field::complex, standard real BN for Field::real.
template <class T>
struct BatchNorm {
  Field field = Field::complex;
  LayerParam<T> gamma, beta;
  ComplexBNStats<T> cstats;
  RealBNStats<T> rstats;
  BNOptions opt;
  std::string name;

  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t channels, Field field, BNOptions opt, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  void collect(ParamList<T>& out);
  void collect_buffers(BufferList<T>& out);
};

template <class T>
struct Activation {
  ActivationKind kind = ActivationKind::crelu;
  std::optional<LayerParam<T>> bias;  // modReLU only, one real offset per channel

  Activation() = default;
  Activation(const std::string& name, ActivationKind kind, std::size_t channels, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;
  void collect(ParamList<T>& out);
};

struct BlockSpec {
  std::size_t cin = 0, cout = 0;
  int kernel = 3;
  bool downsample = false;
  Downsample mode = Downsample::strided_conv;
  Field field = Field::complex;
  ActivationKind activation = ActivationKind::crelu;
  InitScheme init = InitScheme::complex_he_normal;
  BNOptions bn;
};

/// Y = BN(act(Conv X)); out = skip(X) + BN(act(Conv Y)).
/// skip is the identity when shapes match, otherwise a 1x1 (strided) conv.
template <class T>
struct ResBlock {
  BlockSpec spec;
  Conv2d<T> conv1, conv2;
  Activation<T> act1, act2;
  BatchNorm<T> bn1, bn2;
  std::optional<Conv2d<T>> skip;

  ResBlock() = default;
  ResBlock(const std::string& name, const BlockSpec& spec, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  void collect(ParamList<T>& out);
  void collect_buffers(BufferList<T>& out);
};

/// Flatten -> Linear(p) -> act -> BN -> Linear(back) -> act -> BN -> Unflatten.
template <class T>
struct Bottleneck {
  Shape feature;  // C x h x w of one sample
  Linear<T> fc1, fc2;
  Activation<T> act1, act2;
  BatchNorm<T> bn1, bn2;

  Bottleneck() = default;
  Bottleneck(const std::string& name, Shape feature, std::size_t p, Field field, ActivationKind act,
             InitScheme init, BNOptions bn, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  void collect(ParamList<T>& out);
  void collect_buffers(BufferList<T>& out);
};

}  // namespace polsar::nn
