#include "polsar/dataio/normalize.hpp"

#include <cmath>
#include <sstream>

#include "polsar/errors.hpp"

namespace polsar::data {

std::string_view to_string(NormMode m) {
  switch (m) {
    case NormMode::none: return "none";
    case NormMode::global_amp_max: return "global-amp-max";
    case NormMode::per_channel_std: return "per-channel-std";
  }
  return "?";
}

NormMode parse_norm_mode(std::string_view s) {
  if (s == "none") return NormMode::none;
  if (s == "global-amp-max") return NormMode::global_amp_max;
  if (s == "per-channel-std") return NormMode::per_channel_std;
  throw ConfigError("unknown normalization mode '" + std::string(s) + "'");
}

NormParams fit_normalization(const ComplexRaster& img, NormMode mode) {
  NormParams p;
  p.mode = mode;
  p.scale.assign(img.channels, 1.0);
  for (const auto& v : img.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DataError("raster holds non-finite samples");
  if (mode == NormMode::none) return p;
  if (mode == NormMode::global_amp_max) {
    double m = 0;
    for (const auto& v : img.data) m = std::max(m, std::abs(v));
    if (!(m > 0)) throw DataError("cannot normalize a zero-power raster");
    p.scale.assign(img.channels, 1 / m);
    return p;
  }
  const double n = double(img.pixels());
  for (std::size_t ch = 0; ch < img.channels; ++ch) {
    cd mean = 0;
    for (std::size_t i = 0; i < img.pixels(); ++i) mean += img.data[i * img.channels + ch];
    mean /= n;
    double ss = 0;
    for (std::size_t i = 0; i < img.pixels(); ++i) ss += std::norm(img.data[i * img.channels + ch] - mean);
    // pooled component variance (var re + var im) / 2
    const double sd = std::sqrt(ss / (2 * n));
    if (!(sd > 0)) throw DataError("cannot normalize channel " + std::to_string(ch) + ": zero variance");
    p.scale[ch] = 1 / (std::sqrt(2.0) * sd);
  }
  return p;
}

namespace {

ComplexRaster scaled(const ComplexRaster& img, const NormParams& p, bool inverse) {
  if (p.scale.size() != img.channels)
    throw DataError("normalization has " + std::to_string(p.scale.size()) + " channel scales, raster has " +
                    std::to_string(img.channels) + " channels");
  ComplexRaster out = img;
  for (std::size_t i = 0; i < img.pixels(); ++i)
    for (std::size_t ch = 0; ch < img.channels; ++ch) {
      auto& v = out.data[i * img.channels + ch];
      v = inverse ? v / p.scale[ch] : v * p.scale[ch];
    }
  return out;
}

}  // namespace

ComplexRaster apply_normalization(const ComplexRaster& img, const NormParams& p) { return scaled(img, p, false); }
ComplexRaster denormalize(const ComplexRaster& img, const NormParams& p) { return scaled(img, p, true); }

std::pair<ComplexRaster, NormParams> normalize(const ComplexRaster& img, NormMode mode) {
  auto p = fit_normalization(img, mode);
  auto out = apply_normalization(img, p);
  store_params(out.meta, p);
  return {std::move(out), std::move(p)};
}

void store_params(Meta& meta, const NormParams& p) {
  meta["norm.mode"] = std::string(to_string(p.mode));
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < p.scale.size(); ++i) os << (i ? "," : "") << p.scale[i];
  meta["norm.scale"] = os.str();
}

NormParams params_from_meta(const Meta& meta) {
  const auto m = meta.find("norm.mode"), s = meta.find("norm.scale");
  if (m == meta.end() || s == meta.end()) throw DataError("raster carries no normalization parameters");
  NormParams p;
  p.mode = parse_norm_mode(m->second);
  std::istringstream is(s->second);
  std::string part;
  while (std::getline(is, part, ',')) {
    try {
      p.scale.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw DataError("bad norm.scale entry '" + part + "'");
    }
  }
  return p;
}

}  // namespace polsar::data
