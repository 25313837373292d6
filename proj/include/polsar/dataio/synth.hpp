#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "polsar/dataio/raster.hpp"
#include "polsar/polarimetry/coherent.hpp"
#include "polsar/polarimetry/halpha.hpp"

namespace polsar::data {

enum class Mechanism { sphere, dihedral, helix, clutter };
std::string_view to_string(Mechanism m);
Mechanism parse_mechanism(std::string_view s);

struct Region {
  Mechanism mechanism = Mechanism::sphere;
  double theta = 0;                               // dihedral orientation (radians)
  pol::Helicity hand = pol::Helicity::right;      // helix handedness
  pol::Coherency t = pol::Coherency::Identity();  // clutter coherency in the Pauli basis
  double power = 1;                               // mean span of the region
};

/// Regions are laid out as a Voronoi partition with `cells` random sites;
/// cell i belongs to region i mod regions.size().
struct SynthSpec {
  std::size_t height = 512, width = 512;
  std::vector<Region> regions;
  int cells = 0;             // 0: one cell per region
  double noise_sigma = 0;    // std of the additive circular Gaussian per channel
  std::uint64_t seed = 1;
  Dtype dtype = Dtype::c64;

  void validate() const;
};

struct SynthResult {
  ComplexRaster raster;     // 4 channels, vh = hv
  LabelPlane region;        // region index + 1
  LabelPlane cameron;       // analytic Cameron class, 0 for clutter
  LabelPlane zone;          // analytic H-alpha zone of the region's coherency
};

/// Canonical scattering matrix of a coherent mechanism, scaled to unit span.
pol::SinclairPixel canonical_matrix(const Region& r);

/// Coherency matrix a region's pixels are drawn from (rank 1 for coherent ones).
pol::Coherency region_coherency(const Region& r);

SynthResult synthesize(const SynthSpec& spec, const pol::ZoneTable& zones = {});

/// The desk-scale scene: sphere, dihedral, oriented dihedral and helix
/// regions plus two clutter types.
SynthSpec desk_spec(std::size_t size = 512, double noise_sigma = 0.05, std::uint64_t seed = 1);

}  // namespace polsar::data
