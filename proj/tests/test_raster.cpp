#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "polsar/binary_io.hpp"
#include "polsar/dataio/raster.hpp"
#include "polsar/errors.hpp"

using namespace polsar;
using namespace polsar::data;
namespace fs = std::filesystem;

namespace {

ComplexRaster random_raster(std::size_t h, std::size_t w, std::size_t c, Dtype dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  ComplexRaster r(h, w, c, dt);
  for (auto& v : r.data) v = {n(rng), n(rng)};
  r.quantize();
  r.meta = {{"source", "unit-test"}, {"norm.mode", "none"}};
  return r;
}

fs::path tmp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "polsar_raster_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("CPLXR round trip is bit exact for both dtypes") {
  for (Dtype dt : {Dtype::c64, Dtype::c128}) {
    const auto r = random_raster(16, 16, 4, dt, 7 + int(dt));
    const auto p = tmp_path(dt == Dtype::c64 ? "rt64.cplxr" : "rt128.cplxr");
    write_raster(p, r);
    const auto bytes1 = io::read_file(p);
    const auto back = read_raster(p);
    CHECK(back.height == 16);
    CHECK(back.width == 16);
    CHECK(back.channels == 4);
    CHECK(back.dtype == dt);
    CHECK(back.meta == r.meta);
    CHECK(std::memcmp(back.data.data(), r.data.data(), r.data.size() * sizeof(cd)) == 0);
    write_raster(p, back);
    CHECK(io::read_file(p) == bytes1);
    // header 5 + 2 + 1 + 12 + 4 + meta, payload 16*16*4 samples
    const std::size_t meta_len = encode_meta(r.meta).size();
    CHECK(bytes1.size() == 24 + meta_len + 16 * 16 * 4 * (dt == Dtype::c64 ? 8 : 16));
  }
}

TEST_CASE("CPLXR errors carry byte offsets") {
  const auto r = random_raster(4, 4, 4, Dtype::c64, 3);
  auto bytes = encode_raster(r);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  try {
    decode_raster(truncated);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == truncated.size());
  }

  auto header_cut = bytes;
  header_cut.resize(10);
  CHECK_THROWS_AS(decode_raster(header_cut), FormatError);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  try {
    decode_raster(bad_magic);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }

  auto bad_version = bytes;
  bad_version[5] = 9;
  try {
    decode_raster(bad_version);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 5);
  }

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_raster(trailing), FormatError);
}

TEST_CASE("three-channel rasters expand to Sinclair order") {
  auto r = random_raster(3, 5, 3, Dtype::c128, 11);
  const auto bytes = encode_raster(r);
  const auto plain = decode_raster(bytes);
  CHECK(plain.channels == 3);
  const auto full = decode_raster(bytes, {.expand_to_sinclair = true});
  REQUIRE(full.channels == 4);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 5; ++x) {
      CHECK(full.at(y, x, 0) == r.at(y, x, 0));
      CHECK(full.at(y, x, 1) == r.at(y, x, 1));
      CHECK(full.at(y, x, 2) == r.at(y, x, 1));
      CHECK(full.at(y, x, 3) == r.at(y, x, 2));
    }
  auto two = ComplexRaster(2, 2, 2, Dtype::c64);
  CHECK_THROWS_AS(expand_to_sinclair(two), DataError);
}

TEST_CASE("label planes round trip and are distinguished from rasters") {
  LabelPlane l(7, 9);
  for (std::size_t i = 0; i < l.data.size(); ++i) l.data[i] = std::uint8_t(i % 11);
  l.meta = {{"decomposition", "cameron"}};
  const auto p = tmp_path("labels.cplxr");
  write_labels(p, l);
  const auto back = read_labels(p);
  CHECK(back.data == l.data);
  CHECK(back.meta == l.meta);
  CHECK_THROWS_AS(read_raster(p), FormatError);
  const auto rp = tmp_path("not_labels.cplxr");
  write_raster(rp, random_raster(2, 2, 4, Dtype::c64, 1));
  CHECK_THROWS_AS(read_labels(rp), FormatError);
}

TEST_CASE("raw interleaved import") {
  const auto p = tmp_path("raw.bin");
  std::vector<float> vals;
  for (int i = 0; i < 2 * 3 * 4 * 2; ++i) vals.push_back(float(i) * 0.5f);
  {
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(vals.data()), std::streamsize(vals.size() * sizeof(float)));
  }
  const auto r = import_raw(p, 2, 3, 4, Dtype::c64);
  CHECK(r.at(0, 0, 0) == cd(0, 0.5));
  CHECK(r.at(1, 2, 3) == cd(vals[46], vals[47]));
  CHECK_THROWS_AS(import_raw(p, 2, 3, 3, Dtype::c64), FormatError);
  CHECK_THROWS_AS(import_raw(tmp_path("missing.bin"), 1, 1, 4, Dtype::c64), DataError);
}

TEST_CASE("metadata must be encodable") {
  ComplexRaster r(1, 1, 4);
  r.meta = {{"bad=key", "v"}};
  CHECK_THROWS_AS(encode_raster(r), DataError);
}
