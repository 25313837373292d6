#include "polsar/dataio/tiles.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "polsar/errors.hpp"

namespace polsar::data {

std::string_view to_string(Fold f) {
  switch (f) {
    case Fold::train: return "train";
    case Fold::val: return "val";
    case Fold::test: return "test";
    case Fold::none: return "none";
  }
  return "?";
}

Fold parse_fold(std::string_view s) {
  if (s == "train") return Fold::train;
  if (s == "val") return Fold::val;
  if (s == "test") return Fold::test;
  if (s == "none") return Fold::none;
  throw DataError("unknown fold '" + std::string(s) + "'");
}

std::size_t TileSet::count(Fold f) const {
  std::size_t n = 0;
  for (Fold x : fold) n += x == f;
  return n;
}

std::vector<Tile> TileSet::select(Fold f) const {
  std::vector<Tile> out;
  for (std::size_t i = 0; i < tiles.size(); ++i)
    if (fold[i] == f) out.push_back(tiles[i]);
  return out;
}

TileSet tile(std::size_t height, std::size_t width, std::size_t size, std::uint32_t raster_id) {
  if (size < 8) throw ConfigError("tile size must be >= 8, got " + std::to_string(size));
  TileSet s;
  if (size > std::min(height, width)) {
    std::cerr << "warning: tile size " << size << " exceeds raster " << height << "x" << width << ", no tiles\n";
    return s;
  }
  const std::size_t rows = height / size, cols = width / size;
  s.tiles.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      s.tiles.push_back({raster_id, std::uint32_t(r * size), std::uint32_t(c * size), std::uint32_t(size)});
  s.fold.assign(s.tiles.size(), Fold::none);
  return s;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  // unbiased bounded draw by rejection; std::uniform_int_distribution differs between libraries
  auto below = [&rng](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % bound;
  };
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[below(i)]);
  return idx;
}

TileSet split(TileSet set, const std::array<double, 3>& f, std::uint64_t seed) {
  for (double v : f)
    if (!(v >= 0 && v <= 1)) throw ConfigError("split fractions must lie in [0, 1]");
  if (std::abs(f[0] + f[1] + f[2] - 1) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const std::size_t n = set.tiles.size();
  // small epsilon so 0.1 * 10 floors to 1, not 0
  const auto n_val = std::size_t(std::floor(f[1] * double(n) + 1e-9));
  const auto n_test = std::size_t(std::floor(f[2] * double(n) + 1e-9));
  const auto perm = shuffled_indices(n, seed);
  set.fold.assign(n, Fold::train);
  for (std::size_t i = 0; i < n_val; ++i) set.fold[perm[i]] = Fold::val;
  for (std::size_t i = n_val; i < n_val + n_test; ++i) set.fold[perm[i]] = Fold::test;
  set.seed = seed;
  set.fractions = f;
  return set;
}

ComplexRaster extract_tile(const ComplexRaster& img, const Tile& t) {
  if (t.row0 + t.size > img.height || t.col0 + t.size > img.width)
    throw DataError("tile at (" + std::to_string(t.row0) + ", " + std::to_string(t.col0) + ") exceeds the raster");
  ComplexRaster out(t.size, t.size, img.channels, img.dtype);
  for (std::size_t r = 0; r < t.size; ++r)
    for (std::size_t c = 0; c < t.size; ++c)
      for (std::size_t ch = 0; ch < img.channels; ++ch) out.at(r, c, ch) = img.at(t.row0 + r, t.col0 + c, ch);
  return out;
}

void write_manifest(const std::filesystem::path& path, const TileSet& set) {
  std::ostringstream os;
  os.precision(17);
  os << "# tileset seed=" << set.seed << " fractions=" << set.fractions[0] << "," << set.fractions[1] << ","
     << set.fractions[2] << "\n";
  os << "raster_id,row0,col0,size,fold\n";
  for (std::size_t i = 0; i < set.tiles.size(); ++i) {
    const auto& t = set.tiles[i];
    os << t.raster_id << "," << t.row0 << "," << t.col0 << "," << t.size << "," << to_string(set.fold[i]) << "\n";
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw DataError("cannot write " + tmp);
    f << os.str();
  }
  std::filesystem::rename(tmp, path);
}

TileSet read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open manifest " + path.string());
  TileSet s;
  std::string line;
  if (!std::getline(f, line) || line.rfind("# tileset ", 0) != 0) throw DataError("manifest header missing in " + path.string());
  {
    std::istringstream is(line.substr(10));
    std::string tok;
    while (is >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const auto k = tok.substr(0, eq), v = tok.substr(eq + 1);
      if (k == "seed") s.seed = std::stoull(v);
      else if (k == "fractions") {
        std::istringstream fs(v);
        std::string part;
        for (int i = 0; i < 3 && std::getline(fs, part, ','); ++i) s.fractions[i] = std::stod(part);
      }
    }
  }
  if (!std::getline(f, line) || line != "raster_id,row0,col0,size,fold") throw DataError("manifest column header missing");
  std::size_t lineno = 2;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string a, b, c, d, e;
    if (!std::getline(is, a, ',') || !std::getline(is, b, ',') || !std::getline(is, c, ',') ||
        !std::getline(is, d, ',') || !std::getline(is, e))
      throw DataError("malformed manifest line " + std::to_string(lineno));
    try {
      s.tiles.push_back({std::uint32_t(std::stoul(a)), std::uint32_t(std::stoul(b)), std::uint32_t(std::stoul(c)),
                         std::uint32_t(std::stoul(d))});
    } catch (const std::exception&) {
      throw DataError("malformed manifest line " + std::to_string(lineno));
    }
    s.fold.push_back(parse_fold(e));
  }
  return s;
}

}  // namespace polsar::data
