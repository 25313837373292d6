#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "polsar/dataio/raster.hpp"
#include "polsar/metrics/metrics.hpp"
#include "polsar/polarimetry/raster_decomp.hpp"

namespace polsar::pipeline {

struct Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::array<std::uint8_t, 3> fill = {255, 255, 255});
  void set(long x, long y, std::array<std::uint8_t, 3> c);
  std::array<std::uint8_t, 3> get(std::size_t x, std::size_t y) const;
};

/// Binary P6 portable pixmap.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

/// False colour from three amplitude planes (red, green, blue), each clipped
/// at its 99th percentile and gamma-corrected with exponent 0.7.
Image false_color(const std::vector<double>& r, const std::vector<double>& g, const std::vector<double>& b,
                  std::size_t width, std::size_t height);

/// Pauli: R = |beta|, G = |gamma|, B = |alpha|. Krogager: R = k_d, G = k_h, B = k_s.
Image composite(const pol::DecompositionMap& m);

/// Fixed palettes: Cameron classes and H-alpha zones; label 0 is black.
Image class_map(const data::LabelPlane& labels, pol::Decomposition which);
std::array<std::uint8_t, 3> palette_color(pol::Decomposition which, int label);

/// Row-normalized confusion matrix as a grey-scale grid.
Image confusion_image(const metrics::ClassMetrics& m, int cell = 16);

/// H-alpha plane with zone boundaries, the feasible-region boundary and one
/// arrow per zone shift from the reference to the reconstruction centroid.
Image shift_figure(const std::vector<metrics::ShiftPair>& shifts, const pol::ZoneTable& zones, int size = 400);

}  // namespace polsar::pipeline
