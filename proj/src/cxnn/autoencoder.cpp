#include "polsar/cxnn/autoencoder.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "polsar/cxcore/ops.hpp"

namespace polsar::nn {

ModelKind parse_model_kind(std::string_view s) {
  if (s == "cvnn") return ModelKind::cvnn;
  if (s == "dual-rvnn") return ModelKind::dual_rvnn;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

std::string_view to_string(ModelKind k) { return k == ModelKind::cvnn ? "cvnn" : "dual-rvnn"; }

void AEConfig::validate() const {
  if (depth < 0) throw ConfigError("model.depth must be >= 0");
  if (width < 1) throw ConfigError("model.width must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("model.kernel must be a positive odd number");
  if (input_channels < 1) throw ConfigError("model.input_channels must be >= 1");
  if (tile_size < 1 || tile_size % (1 << depth) != 0)
    throw ConfigError("model.tile_size " + std::to_string(tile_size) + " is not divisible by 2^depth = " +
                      std::to_string(1 << depth));
  if (bottleneck_dim && *bottleneck_dim <= 0) throw ConfigError("model.bottleneck_dim must be > 0");
  if (!(bn.eps > 0)) throw ConfigError("model.bn_eps must be > 0");
  if (!(bn.momentum > 0 && bn.momentum <= 1)) throw ConfigError("model.bn_momentum must be in (0, 1]");
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("model." + key + ": not an integer: '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("model." + key + ": not a number: '" + v + "'");
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> AEConfig::to_map() const {
  return {
      {"depth", std::to_string(depth)},
      {"width", std::to_string(width)},
      {"kernel", std::to_string(kernel)},
      {"activation", std::string(to_string(activation))},
      {"bottleneck_dim", std::to_string(bottleneck_dim.value_or(0))},
      {"downsample", std::string(to_string(downsample))},
      {"upsample", std::string(to_string(upsample))},
      {"input_channels", std::to_string(input_channels)},
      {"tile_size", std::to_string(tile_size)},
      {"init", std::string(to_string(init))},
      {"kind", std::string(to_string(kind))},
      {"bn_eps", fmt(bn.eps)},
      {"bn_momentum", fmt(bn.momentum)},
  };
}

AEConfig AEConfig::from_map(const std::map<std::string, std::string>& kv) {
  AEConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "depth") c.depth = to_int(k, v);
    else if (k == "width") c.width = to_int(k, v);
    else if (k == "kernel") c.kernel = to_int(k, v);
    else if (k == "activation") c.activation = parse_activation(v);
    else if (k == "bottleneck_dim") {
      const int p = to_int(k, v);
      c.bottleneck_dim = p == 0 ? std::nullopt : std::optional<int>(p);
      if (p < 0) throw ConfigError("model.bottleneck_dim must be > 0 (0 disables it)");
    } else if (k == "downsample") c.downsample = parse_downsample(v);
    else if (k == "upsample") c.upsample = parse_upsample(v);
    else if (k == "input_channels") c.input_channels = to_int(k, v);
    else if (k == "tile_size") c.tile_size = to_int(k, v);
    else if (k == "init") c.init = parse_init_scheme(v);
    else if (k == "kind") c.kind = parse_model_kind(v);
    else if (k == "bn_eps") c.bn.eps = to_double(k, v);
    else if (k == "bn_momentum") c.bn.momentum = to_double(k, v);
    else throw ConfigError("unknown key model." + k);
  }
  return c;
}

std::size_t count_parameters(const AEConfig& cfg, const std::vector<std::size_t>& w) {
  const bool cplx_net = cfg.kind == ModelKind::cvnn;
  const std::size_t m = cplx_net ? 2 : 1;
  const std::size_t k2 = std::size_t(cfg.kernel) * std::size_t(cfg.kernel);
  const std::size_t cin = std::size_t(cfg.input_channels) * (cplx_net ? 1 : 2);
  const bool modrelu = cplx_net && cfg.activation == ActivationKind::modrelu;
  auto conv = [&](std::size_t a, std::size_t b, std::size_t kk) { return m * (a * b * kk + b); };
  auto bn = [&](std::size_t c) { return cplx_net ? 6 * c : 2 * c; };
  auto act = [&](std::size_t c) { return modrelu ? c : 0; };
  auto block = [&](std::size_t a, std::size_t b, bool down) {
    const bool strided = down && cfg.downsample == Downsample::strided_conv;
    std::size_t n = conv(a, b, k2) + act(b) + bn(b) + conv(b, b, k2) + act(b) + bn(b);
    if (strided || a != b) n += conv(a, b, 1);
    return n;
  };
  std::size_t total = conv(cin, w[0], k2) + conv(w[0], cin, k2);
  for (int i = 0; i < cfg.depth; ++i) total += block(w[i], w[i + 1], true) + block(w[i + 1], w[i], false);
  if (cfg.bottleneck_dim) {
    const std::size_t side = std::size_t(cfg.tile_size >> cfg.depth);
    const std::size_t F = w[cfg.depth] * side * side, p = std::size_t(*cfg.bottleneck_dim);
    total += m * (F * p + p) + act(p) + bn(p) + m * (p * F + F) + act(F) + bn(F);
  }
  return total;
}

namespace {

std::vector<std::size_t> scaled_widths(const AEConfig& cfg, double s) {
  std::vector<std::size_t> w(cfg.depth + 1);
  for (int i = 0; i <= cfg.depth; ++i)
    w[i] = std::max<std::size_t>(1, std::size_t(std::lround(s * cfg.width * std::ldexp(1.0, i))));
  return w;
}

}  // namespace

std::vector<std::size_t> level_widths(const AEConfig& cfg) {
  if (cfg.kind == ModelKind::cvnn) return scaled_widths(cfg, 1.0);
  AEConfig twin = cfg;
  twin.kind = ModelKind::cvnn;
  const double target = double(count_parameters(twin, scaled_widths(twin, 1.0)));
  // grid search over a common width multiplier; first best wins so the result is deterministic
  std::vector<std::size_t> best;
  double best_gap = 1e300;
  for (int step = 0; step <= 4000; ++step) {
    const double s = 0.5 + step * 0.001;
    auto w = scaled_widths(cfg, s);
    const double gap = std::abs(double(count_parameters(cfg, w)) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(w);
    }
  }
  return best;
}

template <class T>
AutoEncoder<T>::AutoEncoder(const AEConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  widths_ = level_widths(cfg_);
  const bool rv = cfg_.kind == ModelKind::dual_rvnn;
  field_ = rv ? Field::real : Field::complex;
  const ActivationKind act = rv ? ActivationKind::crelu : cfg_.activation;
  const InitScheme init = rv ? real_counterpart(cfg_.init) : cfg_.init;
  const std::size_t cin = std::size_t(cfg_.input_channels) * (rv ? 2 : 1);
  Rng rng(seed);

  in_conv_ = Conv2d<T>("enc.in", cin, widths_[0], cfg_.kernel, 1, field_, init, rng);
  for (int i = 0; i < cfg_.depth; ++i) {
    BlockSpec s{widths_[i], widths_[i + 1], cfg_.kernel, true, cfg_.downsample, field_, act, init, cfg_.bn};
    encoder_.emplace_back("enc.block" + std::to_string(i), s, rng);
  }
  if (cfg_.bottleneck_dim)
    bottleneck_.emplace("bottleneck", latent_shape(), std::size_t(*cfg_.bottleneck_dim), field_, act, init, cfg_.bn,
                        rng);
  for (int i = cfg_.depth - 1; i >= 0; --i) {
    BlockSpec s{widths_[i + 1], widths_[i], cfg_.kernel, false, cfg_.downsample, field_, act, init, cfg_.bn};
    decoder_.emplace_back("dec.block" + std::to_string(i), s, rng);
  }
  out_conv_ = Conv2d<T>("dec.out", widths_[0], cin, cfg_.kernel, 1, field_, init, rng);
}

template <class T>
Shape AutoEncoder<T>::latent_shape() const {
  const std::size_t side = std::size_t(cfg_.tile_size >> cfg_.depth);
  return {widths_[cfg_.depth], side, side};
}

template <class T>
Tensor<T> AutoEncoder<T>::forward(const Tensor<T>& x, Mode mode) {
  const std::size_t t = std::size_t(cfg_.tile_size);
  if (x.rank() != 4 || x.dim(1) != std::size_t(cfg_.input_channels) || x.dim(2) != t || x.dim(3) != t)
    throw ShapeError("autoencoder expects B x " + std::to_string(cfg_.input_channels) + " x " + std::to_string(t) +
                     " x " + std::to_string(t) + " input, got " + cx::to_string(x.shape()));
  const bool rv = cfg_.kind == ModelKind::dual_rvnn;
  Tensor<T> h = in_conv_.forward(rv ? stack_re_im(x) : x);
  for (auto& b : encoder_) h = b.forward(h, mode);
  if (bottleneck_) h = bottleneck_->forward(h, mode);
  for (auto& b : decoder_) {
    h = cfg_.upsample == Upsample::nearest ? upsample_nearest(h, 2) : upsample_bilinear(h, 2);
    h = b.forward(h, mode);
  }
  h = out_conv_.forward(h);
  return rv ? combine_re_im(h) : h;
}

template <class T>
ParamList<T> AutoEncoder<T>::parameters() {
  ParamList<T> out;
  in_conv_.collect(out);
  for (auto& b : encoder_) b.collect(out);
  if (bottleneck_) bottleneck_->collect(out);
  for (auto& b : decoder_) b.collect(out);
  out_conv_.collect(out);
  return out;
}

template <class T>
BufferList<T> AutoEncoder<T>::buffers() {
  BufferList<T> out;
  for (auto& b : encoder_) b.collect_buffers(out);
  if (bottleneck_) bottleneck_->collect_buffers(out);
  for (auto& b : decoder_) b.collect_buffers(out);
  return out;
}

template <class T>
std::size_t AutoEncoder<T>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->real_count();
  return n;
}

template <class T>
AutoEncoder<T> build_dual_rvnn(AEConfig cfg, std::uint64_t seed) {
  cfg.kind = ModelKind::dual_rvnn;
  return AutoEncoder<T>(cfg, seed);
}

template class AutoEncoder<float>;
template class AutoEncoder<double>;
template AutoEncoder<float> build_dual_rvnn(AEConfig, std::uint64_t);
template AutoEncoder<double> build_dual_rvnn(AEConfig, std::uint64_t);

}  // namespace polsar::nn
