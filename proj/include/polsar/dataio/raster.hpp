#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace polsar::data {

using cd = std::complex<double>;
using Meta = std::map<std::string, std::string>;

enum class Dtype : std::uint8_t { c64 = 0, c128 = 1, u8 = 2 };

/// H x W x C complex samples, row-major with the channel index fastest.
/// Samples are held at 64-bit precision; `dtype` is the on-disk precision
/// (values read from a c64 file are exactly representable in float).
/// Channel order is (hh, hv, vh, vv) for 4 channels, (hh, hv, vv) for 3.
struct ComplexRaster {
  std::size_t height = 0, width = 0, channels = 0;
  Dtype dtype = Dtype::c64;
  std::vector<cd> data;
  Meta meta;

  ComplexRaster() = default;
  ComplexRaster(std::size_t h, std::size_t w, std::size_t c, Dtype dt = Dtype::c64);

  cd& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * width + c) * channels + ch]; }
  cd at(std::size_t r, std::size_t c, std::size_t ch) const { return data[(r * width + c) * channels + ch]; }
  std::size_t pixels() const { return height * width; }

  /// Rounds every sample to the on-disk precision (no-op for c128).
  void quantize();
};

/// One u8 label per pixel (0 = invalid / unlabelled).
struct LabelPlane {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> data;
  Meta meta;

  LabelPlane() = default;
  LabelPlane(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), data(h * w, fill) {}
  std::uint8_t& at(std::size_t r, std::size_t c) { return data[r * width + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return data[r * width + c]; }
};

struct ReadOptions {
  // Expand a 3-channel (hh, hv, vv) raster to 4 channels with vh := hv.
  bool expand_to_sinclair = false;
};

/// CPLXR container: "CPLXR", u16 version, u8 dtype, u32 H, W, C, u32 meta
/// length + UTF-8 "key=value\n" lines sorted by key, then the little-endian
/// payload (re, im interleaved per sample for complex dtypes, raw bytes for u8).
void write_raster(const std::filesystem::path& path, const ComplexRaster& r);
ComplexRaster read_raster(const std::filesystem::path& path, const ReadOptions& opt = {});
void write_labels(const std::filesystem::path& path, const LabelPlane& l);
LabelPlane read_labels(const std::filesystem::path& path);

std::vector<char> encode_raster(const ComplexRaster& r);
ComplexRaster decode_raster(const std::vector<char>& bytes, const ReadOptions& opt = {});

/// 3 -> 4 channels with vh := hv; 4-channel input is returned unchanged.
ComplexRaster expand_to_sinclair(const ComplexRaster& r);

/// Imports raw interleaved little-endian float32 / float64 (re, im) samples
/// laid out H x W x C, channel fastest.
ComplexRaster import_raw(const std::filesystem::path& path, std::size_t height, std::size_t width,
                         std::size_t channels, Dtype dtype);

std::string encode_meta(const Meta& m);

}  // namespace polsar::data
