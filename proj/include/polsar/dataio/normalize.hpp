#pragma once

#include <string_view>
#include <vector>

#include "polsar/dataio/raster.hpp"

namespace polsar::data {

enum class NormMode { none, global_amp_max, per_channel_std };
std::string_view to_string(NormMode m);
NormMode parse_norm_mode(std::string_view s);

/// Normalized sample = scale[channel] * original sample.
struct NormParams {
  NormMode mode = NormMode::none;
  std::vector<double> scale;

  bool operator==(const NormParams&) const = default;
};

/// global-amp-max: one scale so max |x| = 1.
/// per-channel-std: per channel, the pooled std of the real and imaginary
/// parts becomes 1/sqrt2 (no centering, the map stays a pure scaling).
/// Throws DataError for an all-zero raster or channel.
NormParams fit_normalization(const ComplexRaster& img, NormMode mode);

ComplexRaster apply_normalization(const ComplexRaster& img, const NormParams& p);
ComplexRaster denormalize(const ComplexRaster& img, const NormParams& p);

/// Fits, applies and records the parameters in the output's meta.
std::pair<ComplexRaster, NormParams> normalize(const ComplexRaster& img, NormMode mode);

void store_params(Meta& meta, const NormParams& p);
NormParams params_from_meta(const Meta& meta);

}  // namespace polsar::data
