#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "polsar/dataio/raster.hpp"

namespace polsar::data {

struct Tile {
  std::uint32_t raster_id = 0;
  std::uint32_t row0 = 0, col0 = 0, size = 0;
  bool operator==(const Tile&) const = default;
};

enum class Fold : std::uint8_t { train = 0, val = 1, test = 2, none = 3 };
std::string_view to_string(Fold f);
Fold parse_fold(std::string_view s);

struct TileSet {
  std::vector<Tile> tiles;
  std::vector<Fold> fold;  // parallel to tiles; Fold::none before split()
  std::uint64_t seed = 0;
  std::array<double, 3> fractions{0.8, 0.1, 0.1};

  std::size_t count(Fold f) const;
  std::vector<Tile> select(Fold f) const;
  bool operator==(const TileSet&) const = default;
};

/// floor(H/size) x floor(W/size) non-overlapping tiles in row-major order.
/// size > min(H, W) gives an empty set and a warning on stderr.
TileSet tile(std::size_t height, std::size_t width, std::size_t size, std::uint32_t raster_id = 0);

/// Uniform shuffle under `seed`; val and test get floor(f * N) tiles, the
/// remainder goes to train.
TileSet split(TileSet set, const std::array<double, 3>& fractions, std::uint64_t seed);

/// Deterministic Fisher-Yates permutation of [0, n) (platform independent).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

ComplexRaster extract_tile(const ComplexRaster& img, const Tile& t);

/// Text manifest: a header line with seed and fractions, then CSV rows
/// raster_id,row0,col0,size,fold.
void write_manifest(const std::filesystem::path& path, const TileSet& set);
TileSet read_manifest(const std::filesystem::path& path);

}  // namespace polsar::data
