#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polsar/cxnn/layers.hpp"

namespace polsar::nn {

enum class ModelKind { cvnn, dual_rvnn };

ModelKind parse_model_kind(std::string_view s);
std::string_view to_string(ModelKind k);

struct AEConfig {
  int depth = 2;
  int width = 64;
  int kernel = 3;
  ActivationKind activation = ActivationKind::crelu;
  std::optional<int> bottleneck_dim;
  Downsample downsample = Downsample::strided_conv;
  Upsample upsample = Upsample::nearest;
  int input_channels = 4;
  int tile_size = 64;
  InitScheme init = InitScheme::complex_he_normal;
  ModelKind kind = ModelKind::cvnn;
  BNOptions bn;

  /// Throws ConfigError on an invalid combination.
  void validate() const;

  /// Flat key=value form used in checkpoints and run configs.
  std::map<std::string, std::string> to_map() const;
  /// Applies known keys from `kv` on top of the defaults; unknown keys throw.
  static AEConfig from_map(const std::map<std::string, std::string>& kv);
};

/// Per-level channel widths: widths[i] channels at spatial extent tile / 2^i.
std::vector<std::size_t> level_widths(const AEConfig& cfg);

/// Real-scalar parameter count of an AutoEncoder built with these widths.
std::size_t count_parameters(const AEConfig& cfg, const std::vector<std::size_t>& widths);

/// Convolutional AutoEncoder: input conv, `depth` downsampling ResBlocks,
/// optional dense bottleneck, mirrored decoder (upsample then ResBlock), and
/// an output conv back to the input channel count. With kind = dual_rvnn the
/// same topology runs on stacked (Re, Im) real channels with ReLU, real BN
/// and the real counterpart of the init scheme, its widths scaled for parameter parity.
template <class T>
class AutoEncoder {
 public:
  AutoEncoder(const AEConfig& cfg, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);

  const AEConfig& config() const { return cfg_; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  Shape latent_shape() const;  // C x h x w after the encoder, per sample

  ParamList<T> parameters();
  BufferList<T> buffers();
  std::size_t parameter_count();

 private:
  AEConfig cfg_;
  std::vector<std::size_t> widths_;
  Field field_ = Field::complex;
  Conv2d<T> in_conv_;
  std::vector<ResBlock<T>> encoder_;
  std::optional<Bottleneck<T>> bottleneck_;
  std::vector<ResBlock<T>> decoder_;
  Conv2d<T> out_conv_;
};

/// Real-valued twin of `cfg` at parameter parity.
template <class T>
AutoEncoder<T> build_dual_rvnn(AEConfig cfg, std::uint64_t seed);

}  // namespace polsar::nn
