#include "polsar/cxnn/layers.hpp"

#include "polsar/cxcore/ops.hpp"

namespace polsar::nn {

Downsample parse_downsample(std::string_view s) {
  if (s == "strided-conv") return Downsample::strided_conv;
  if (s == "avgpool") return Downsample::avgpool;
  throw ConfigError("unknown downsample mode '" + std::string(s) + "'");
}

Upsample parse_upsample(std::string_view s) {
  if (s == "nearest") return Upsample::nearest;
  if (s == "bilinear") return Upsample::bilinear;
  throw ConfigError("unknown upsample mode '" + std::string(s) + "'");
}

std::string_view to_string(Downsample d) { return d == Downsample::strided_conv ? "strided-conv" : "avgpool"; }
std::string_view to_string(Upsample u) { return u == Upsample::nearest ? "nearest" : "bilinear"; }

namespace {

InitScheme weight_scheme(Field field, InitScheme scheme) {
  return field == Field::real ? real_counterpart(scheme) : scheme;
}

}  // namespace

template <class T>
Conv2d<T>::Conv2d(const std::string& name, std::size_t cin, std::size_t cout, int kernel, int stride_,
                  Field field_, InitScheme scheme, Rng& rng)
    : stride(stride_), padding(kernel / 2), field(field_) {
  const std::size_t k2 = std::size_t(kernel) * std::size_t(kernel);
  const bool rv = field == Field::real;
  weight = init_param<T>(name + ".weight", {cout, cin, std::size_t(kernel), std::size_t(kernel)},
                         weight_scheme(field, scheme), cin * k2, cout * k2, rng, rv);
  bias = init_param<T>(name + ".bias", {cout}, InitScheme::zeros, 0, 0, rng, rv);
}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  return conv2d(x, weight.value, bias.value, stride, padding, field);
}

template <class T>
void Conv2d<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <class T>
Linear<T>::Linear(const std::string& name, std::size_t in, std::size_t out, Field field_, InitScheme scheme,
                  Rng& rng)
    : field(field_) {
  const bool rv = field == Field::real;
  weight = init_param<T>(name + ".weight", {out, in}, weight_scheme(field, scheme), in, out, rng, rv);
  bias = init_param<T>(name + ".bias", {out}, InitScheme::zeros, 0, 0, rng, rv);
}

template <class T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  return linear(x, weight.value, bias.value, field);
}

template <class T>
void Linear<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <class T>
BatchNorm<T>::BatchNorm(const std::string& name_, std::size_t channels, Field field_, BNOptions opt_, Rng& rng)
    : field(field_), cstats(field_ == Field::complex ? channels : 0),
      rstats(field_ == Field::real ? channels : 0), opt(opt_), name(name_) {
  if (field == Field::complex) {
    gamma = init_param<T>(name + ".gamma", {channels, 4}, InitScheme::identity2x2, 0, 0, rng, true);
    beta = init_param<T>(name + ".beta", {channels}, InitScheme::zeros, 0, 0, rng, false);
  } else {
    gamma = init_param<T>(name + ".gamma", {channels}, InitScheme::ones, 0, 0, rng, true);
    beta = init_param<T>(name + ".beta", {channels}, InitScheme::zeros, 0, 0, rng, true);
  }
}

template <class T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode) {
  if (field == Field::complex) return complex_batch_norm(x, gamma.value, beta.value, cstats, mode, opt);
  return real_batch_norm(x, gamma.value, beta.value, rstats, mode, opt);
}

template <class T>
void BatchNorm<T>::collect(ParamList<T>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

template <class T>
void BatchNorm<T>::collect_buffers(BufferList<T>& out) {
  if (field == Field::complex) {
    out.push_back({name + ".running_mean", &cstats.mean});
    out.push_back({name + ".running_cov_rr", &cstats.cov_rr});
    out.push_back({name + ".running_cov_ri", &cstats.cov_ri});
    out.push_back({name + ".running_cov_ii", &cstats.cov_ii});
  } else {
    out.push_back({name + ".running_mean", &rstats.mean});
    out.push_back({name + ".running_var", &rstats.var});
  }
}

template <class T>
Activation<T>::Activation(const std::string& name, ActivationKind kind_, std::size_t channels, Rng& rng)
    : kind(kind_) {
  if (kind == ActivationKind::modrelu)
    bias = init_param<T>(name + ".bias", {channels}, InitScheme::zeros, 0, 0, rng, true);
}

template <class T>
Tensor<T> Activation<T>::forward(const Tensor<T>& x) const {
  return activation(x, kind, bias ? bias->value : Tensor<T>{});
}

template <class T>
void Activation<T>::collect(ParamList<T>& out) {
  if (bias) out.push_back(&*bias);
}

template <class T>
ResBlock<T>::ResBlock(const std::string& name, const BlockSpec& s, Rng& rng) : spec(s) {
  const bool strided = s.downsample && s.mode == Downsample::strided_conv;
  conv1 = Conv2d<T>(name + ".conv1", s.cin, s.cout, s.kernel, strided ? 2 : 1, s.field, s.init, rng);
  act1 = Activation<T>(name + ".act1", s.activation, s.cout, rng);
  bn1 = BatchNorm<T>(name + ".bn1", s.cout, s.field, s.bn, rng);
  conv2 = Conv2d<T>(name + ".conv2", s.cout, s.cout, s.kernel, 1, s.field, s.init, rng);
  act2 = Activation<T>(name + ".act2", s.activation, s.cout, rng);
  bn2 = BatchNorm<T>(name + ".bn2", s.cout, s.field, s.bn, rng);
  if (strided || s.cin != s.cout)
    skip = Conv2d<T>(name + ".skip", s.cin, s.cout, 1, strided ? 2 : 1, s.field, s.init, rng);
}

template <class T>
Tensor<T> ResBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  const bool pool = spec.downsample && spec.mode == Downsample::avgpool;
  auto h = conv1.forward(x);
  if (pool) h = avg_pool2d(h, 2, 2);
  auto y = bn1.forward(act1.forward(h), mode);
  auto y2 = bn2.forward(act2.forward(conv2.forward(y)), mode);
  Tensor<T> s = pool ? avg_pool2d(x, 2, 2) : x;
  if (skip) s = skip->forward(s);
  return cx::add(s, y2);
}

template <class T>
void ResBlock<T>::collect(ParamList<T>& out) {
  conv1.collect(out);
  act1.collect(out);
  bn1.collect(out);
  conv2.collect(out);
  act2.collect(out);
  bn2.collect(out);
  if (skip) skip->collect(out);
}

template <class T>
void ResBlock<T>::collect_buffers(BufferList<T>& out) {
  bn1.collect_buffers(out);
  bn2.collect_buffers(out);
}

template <class T>
Bottleneck<T>::Bottleneck(const std::string& name, Shape feature_, std::size_t p, Field field, ActivationKind act,
                          InitScheme init, BNOptions bn, Rng& rng)
    : feature(std::move(feature_)) {
  const std::size_t F = cx::numel(feature);
  fc1 = Linear<T>(name + ".fc1", F, p, field, init, rng);
  act1 = Activation<T>(name + ".act1", act, p, rng);
  bn1 = BatchNorm<T>(name + ".bn1", p, field, bn, rng);
  fc2 = Linear<T>(name + ".fc2", p, F, field, init, rng);
  act2 = Activation<T>(name + ".act2", act, F, rng);
  bn2 = BatchNorm<T>(name + ".bn2", F, field, bn, rng);
}

template <class T>
Tensor<T> Bottleneck<T>::forward(const Tensor<T>& x, Mode mode) {
  const std::size_t B = x.dim(0);
  auto flat = cx::reshape(x, {B, cx::numel(feature)});
  auto z = bn1.forward(act1.forward(fc1.forward(flat)), mode);
  auto back = bn2.forward(act2.forward(fc2.forward(z)), mode);
  Shape s{B};
  s.insert(s.end(), feature.begin(), feature.end());
  return cx::reshape(back, s);
}

template <class T>
void Bottleneck<T>::collect(ParamList<T>& out) {
  fc1.collect(out);
  act1.collect(out);
  bn1.collect(out);
  fc2.collect(out);
  act2.collect(out);
  bn2.collect(out);
}

template <class T>
void Bottleneck<T>::collect_buffers(BufferList<T>& out) {
  bn1.collect_buffers(out);
  bn2.collect_buffers(out);
}

#define POLSAR_LAYERS_INSTANTIATE(T) \
  template struct Conv2d<T>;         \
  template struct Linear<T>;         \
  template struct BatchNorm<T>;      \
  template struct Activation<T>;     \
  template struct ResBlock<T>;       \
  template struct Bottleneck<T>;

POLSAR_LAYERS_INSTANTIATE(float)
POLSAR_LAYERS_INSTANTIATE(double)

}  // namespace polsar::nn
