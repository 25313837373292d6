#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "polsar/dataio/raster.hpp"
#include "polsar/polarimetry/coherent.hpp"
#include "polsar/polarimetry/halpha.hpp"

namespace polsar::pol {

enum class Decomposition { pauli, krogager, cameron, halpha };

Decomposition parse_decomposition(std::string_view s);
std::string_view to_string(Decomposition d);

struct DecomposeOptions {
  int window = 7;
  ZoneTable zones;
  CameronOptions cameron;
  int workers = 0;  // 0: worker_count()
};

/// Per-pixel output of one decomposition over a raster.
///  pauli:    values (alpha, beta, gamma); labels = dominant component 1..3
///  krogager: values (k_s, k_d, k_h) as real parts; labels = dominant component 1..3
///  cameron:  values (rec_angle, sym_angle, z); labels = CameronClass
///  halpha:   values (H, alpha_mean, l1, l2, l3) as real parts; labels = zone, plus `halpha`
/// Label 0 marks invalid pixels (zero power or non-finite input).
struct DecompositionMap {
  Decomposition which = Decomposition::pauli;
  data::ComplexRaster values;
  data::LabelPlane labels;
  std::vector<HAlphaResult> halpha;

  std::size_t height() const { return labels.height; }
  std::size_t width() const { return labels.width; }
};

SinclairPixel pixel_at(const data::ComplexRaster& img, std::size_t r, std::size_t c);
std::vector<PauliVector> pauli_field(const data::ComplexRaster& img);

/// Krogager is applied to the reciprocal part (hv + vh)/2 of each pixel so
/// reconstructed rasters with hv != vh never abort the pass.
DecompositionMap decompose_raster(const data::ComplexRaster& img, Decomposition which,
                                  const DecomposeOptions& opt = {});

/// Writes <stem>.cplxr and <stem>.labels.cplxr.
void save_decomposition(const std::filesystem::path& stem, const DecompositionMap& m);

}  // namespace polsar::pol
