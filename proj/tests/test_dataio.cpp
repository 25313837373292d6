#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "polsar/dataio/normalize.hpp"
#include "polsar/dataio/synth.hpp"
#include "polsar/dataio/tiles.hpp"
#include "polsar/errors.hpp"
#include "polsar/polarimetry/raster_decomp.hpp"

using namespace polsar;
using namespace polsar::data;
namespace fs = std::filesystem;

TEST_CASE("tile counts") {
  CHECK(tile(22608, 8080, 64).tiles.size() == 44478);
  CHECK(tile(64, 64, 64).tiles.size() == 1);
  CHECK(tile(100, 100, 64).tiles.size() == 1);
  CHECK(tile(32, 100, 64).tiles.empty());
  CHECK_THROWS_AS(tile(100, 100, 4), ConfigError);
}

TEST_CASE("tiles partition the cropped region in row-major order") {
  const std::size_t H = 70, W = 100, s = 16;
  const auto set = tile(H, W, s);
  REQUIRE(set.tiles.size() == (H / s) * (W / s));
  std::vector<int> cover(H * W, 0);
  for (const auto& t : set.tiles)
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t c = 0; c < s; ++c) ++cover[(t.row0 + r) * W + t.col0 + c];
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) CHECK(cover[r * W + c] == ((r < 64 && c < 96) ? 1 : 0));
  for (std::size_t i = 1; i < set.tiles.size(); ++i) {
    const auto& a = set.tiles[i - 1];
    const auto& b = set.tiles[i];
    CHECK((a.row0 < b.row0 || (a.row0 == b.row0 && a.col0 < b.col0)));
  }
}

TEST_CASE("split counts follow the floor rule") {
  auto big = split(tile(22608, 8080, 64), {0.8, 0.1, 0.1}, 42);
  CHECK(big.count(Fold::train) == 35584);
  CHECK(big.count(Fold::val) == 4447);
  CHECK(big.count(Fold::test) == 4447);

  TileSet ten;
  for (std::uint32_t i = 0; i < 10; ++i) ten.tiles.push_back({0, 0, i * 8, 8});
  ten.fold.assign(10, Fold::none);
  const auto s = split(ten, {0.8, 0.1, 0.1}, 3);
  CHECK(s.count(Fold::train) == 8);
  CHECK(s.count(Fold::val) == 1);
  CHECK(s.count(Fold::test) == 1);
  CHECK_THROWS_AS(split(ten, {0.8, 0.1, 0.2}, 3), ConfigError);
}

TEST_CASE("split is deterministic and seed dependent") {
  const auto base = tile(512, 512, 32);
  const auto a = split(base, {0.8, 0.1, 0.1}, 7);
  const auto b = split(base, {0.8, 0.1, 0.1}, 7);
  const auto c = split(base, {0.8, 0.1, 0.1}, 8);
  CHECK(a == b);
  CHECK(a.fold != c.fold);
  // fixed permutation for a fixed seed, independent of the standard library
  const auto p = shuffled_indices(5, 1);
  CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 5);
  CHECK(p == shuffled_indices(5, 1));
}

TEST_CASE("shuffle is close to uniform") {
  // position of element 0 over many seeds, chi-square against uniform
  const int n = 6, trials = 60000;
  std::vector<int> hist(n, 0);
  for (int s = 0; s < trials; ++s) {
    const auto p = shuffled_indices(n, std::uint64_t(s));
    for (int i = 0; i < n; ++i)
      if (p[i] == 0) ++hist[i];
  }
  double chi2 = 0;
  const double e = double(trials) / n;
  for (int h : hist) chi2 += (h - e) * (h - e) / e;
  CHECK(chi2 < 20.5);  // 5 dof, p = 0.001
}

TEST_CASE("manifest round trip") {
  const auto s = split(tile(200, 130, 32), {0.6, 0.2, 0.2}, 99);
  const auto p = fs::temp_directory_path() / "polsar_manifest_test.csv";
  write_manifest(p, s);
  const auto back = read_manifest(p);
  CHECK(back == s);
}

TEST_CASE("extract_tile copies the window") {
  ComplexRaster img(20, 30, 4, Dtype::c128);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = cd(double(i), -double(i));
  const Tile t{0, 8, 16, 8};
  const auto sub = extract_tile(img, t);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c)
      for (std::size_t ch = 0; ch < 4; ++ch) CHECK(sub.at(r, c, ch) == img.at(8 + r, 16 + c, ch));
  CHECK_THROWS_AS(extract_tile(img, Tile{0, 16, 0, 8}), DataError);
}

TEST_CASE("noise-free sphere scene classifies trihedral everywhere") {
  SynthSpec spec;
  spec.height = spec.width = 24;
  spec.regions = {Region{.mechanism = Mechanism::sphere, .power = 2.0}};
  const auto out = synthesize(spec);
  const auto cam = pol::decompose_raster(out.raster, pol::Decomposition::cameron);
  for (auto l : cam.labels.data) CHECK(l == std::uint8_t(pol::CameronClass::trihedral));
  for (auto l : out.cameron.data) CHECK(l == std::uint8_t(pol::CameronClass::trihedral));
  for (auto l : out.zone.data) CHECK(l == 9);
  CHECK(out.raster.at(3, 3, 0) == out.raster.at(3, 3, 3));
}

TEST_CASE("noise-free coherent regions match the generator labels") {
  SynthSpec spec;
  spec.height = 40;
  spec.width = 50;
  spec.cells = 9;
  spec.regions = {Region{.mechanism = Mechanism::sphere},
                  Region{.mechanism = Mechanism::dihedral, .theta = 0.3},
                  Region{.mechanism = Mechanism::helix, .hand = pol::Helicity::left},
                  Region{.mechanism = Mechanism::helix, .hand = pol::Helicity::right}};
  const auto out = synthesize(spec);
  const auto cam = pol::decompose_raster(out.raster, pol::Decomposition::cameron);
  CHECK(cam.labels.data == out.cameron.data);
  std::set<std::uint8_t> seen(out.region.data.begin(), out.region.data.end());
  CHECK(seen.size() == 4);
}

TEST_CASE("rank-one clutter has zero entropy") {
  SynthSpec spec;
  spec.height = spec.width = 32;
  Region r{.mechanism = Mechanism::clutter};
  r.t = pol::Coherency::Zero();
  r.t(0, 0) = 1;
  spec.regions = {r};
  const auto out = synthesize(spec);
  for (int w : {3, 7, 11}) {
    pol::DecomposeOptions o;
    o.window = w;
    const auto ha = pol::decompose_raster(out.raster, pol::Decomposition::halpha, o);
    double worst = 0;
    for (const auto& p : ha.halpha) worst = std::max(worst, p.entropy);
    // float32 storage leaves a tiny second eigenvalue
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("white clutter has near-maximal entropy in 9x9 windows") {
  SynthSpec spec;
  spec.height = spec.width = 108;
  spec.dtype = Dtype::c128;
  Region r{.mechanism = Mechanism::clutter};
  r.t = pol::Coherency::Identity();
  spec.regions = {r};
  const auto out = synthesize(spec);
  pol::DecomposeOptions o;
  o.window = 9;
  const auto ha = pol::decompose_raster(out.raster, pol::Decomposition::halpha, o);
  double sum = 0, lo = 1;
  int n = 0;
  for (std::size_t y = 4; y < 104; ++y)
    for (std::size_t x = 4; x < 104; ++x) {
      const double h = ha.halpha[y * 108 + x].entropy;
      sum += h;
      lo = std::min(lo, h);
      ++n;
    }
  CHECK(n == 10000);
  const double mean = sum / n;
  MESSAGE("mean H " << mean << ", min H " << lo);
  CHECK(mean >= 0.95);
  CHECK(mean <= 1.0);
}

TEST_CASE("clutter sample covariance approaches T") {
  SynthSpec spec;
  spec.height = spec.width = 200;
  spec.dtype = Dtype::c128;
  Region r{.mechanism = Mechanism::clutter, .power = 3.0};
  r.t = pol::Coherency::Zero();
  r.t.diagonal() << 2.0, 1.0, 0.5;
  r.t(0, 2) = cd(0.4, -0.3);
  r.t(2, 0) = std::conj(r.t(0, 2));
  spec.regions = {r};
  const auto out = synthesize(spec);
  pol::Coherency acc = pol::Coherency::Zero();
  for (const auto& k : pol::pauli_field(out.raster)) {
    const Eigen::Vector3cd v(k.alpha, k.beta, k.gamma);
    acc += v * v.adjoint();
  }
  acc /= double(out.raster.pixels());
  const pol::Coherency expect = r.t * (3.0 / r.t.trace().real());
  CHECK((acc - expect).norm() / expect.norm() < 0.02);
}

TEST_CASE("synthesis rejects invalid specs") {
  SynthSpec spec;
  spec.height = spec.width = 8;
  Region r{.mechanism = Mechanism::clutter};
  r.t = pol::Coherency::Identity();
  r.t(2, 2) = -1;
  spec.regions = {r};
  CHECK_THROWS_AS(synthesize(spec), ConfigError);
  spec.regions.clear();
  CHECK_THROWS_AS(synthesize(spec), ConfigError);
}

TEST_CASE("desk scene is deterministic and covers every region") {
  const auto spec = desk_spec(64, 0.05, 5);
  const auto a = synthesize(spec);
  const auto b = synthesize(spec);
  CHECK(a.raster.data == b.raster.data);
  std::set<std::uint8_t> seen(a.region.data.begin(), a.region.data.end());
  CHECK(seen.size() == spec.regions.size());
}

TEST_CASE("normalization") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  ComplexRaster img(30, 20, 4, Dtype::c128);
  for (std::size_t i = 0; i < img.pixels(); ++i)
    for (std::size_t ch = 0; ch < 4; ++ch)
      img.data[i * 4 + ch] = cd(0.3 + n(rng), n(rng) - 1) * double(ch + 1) * 5.0;

  auto [g, gp] = normalize(img, NormMode::global_amp_max);
  double m = 0;
  for (const auto& v : g.data) m = std::max(m, std::abs(v));
  CHECK(m == doctest::Approx(1).epsilon(1e-15));
  auto back = denormalize(g, gp);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) < 1e-7 * std::abs(img.data[i]) + 1e-12);

  auto [s, sp] = normalize(img, NormMode::per_channel_std);
  for (std::size_t ch = 0; ch < 4; ++ch) {
    // moment oracle: pooled std of the real and imaginary parts
    double mr = 0, mi = 0;
    for (std::size_t i = 0; i < s.pixels(); ++i) {
      mr += s.data[i * 4 + ch].real();
      mi += s.data[i * 4 + ch].imag();
    }
    mr /= double(s.pixels());
    mi /= double(s.pixels());
    double vr = 0, vi = 0;
    for (std::size_t i = 0; i < s.pixels(); ++i) {
      vr += std::pow(s.data[i * 4 + ch].real() - mr, 2);
      vi += std::pow(s.data[i * 4 + ch].imag() - mi, 2);
    }
    const double sd = std::sqrt((vr + vi) / (2 * double(s.pixels())));
    CHECK(std::abs(sd - 1 / std::sqrt(2.0)) < 1e-6);
  }
  CHECK(params_from_meta(s.meta) == sp);
  back = denormalize(s, params_from_meta(s.meta));
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) < 1e-7 * std::abs(img.data[i]) + 1e-12);

  ComplexRaster zero(4, 4, 4, Dtype::c64);
  CHECK_THROWS_AS(normalize(zero, NormMode::global_amp_max), DataError);
  CHECK_THROWS_AS(normalize(zero, NormMode::per_channel_std), DataError);
  CHECK_THROWS_AS(parse_norm_mode("max"), ConfigError);
}
