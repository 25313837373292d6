#include "polsar/dataio/raster.hpp"

#include <cstring>

#include "polsar/binary_io.hpp"

namespace polsar::data {

namespace {

constexpr char kMagic[5] = {'C', 'P', 'L', 'X', 'R'};
constexpr std::uint16_t kVersion = 1;

std::size_t element_size(Dtype d) {
  switch (d) {
    case Dtype::c64: return 8;
    case Dtype::c128: return 16;
    case Dtype::u8: return 1;
  }
  return 0;
}

struct Header {
  Dtype dtype;
  std::size_t h, w, c;
  Meta meta;
  std::size_t payload_offset;
};

Meta decode_meta(const std::string& text, std::size_t at) {
  Meta m;
  std::size_t pos = 0;
  std::string prev;
  bool first = true;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) throw FormatError("metadata line is not newline-terminated", at + pos);
    const std::string line = text.substr(pos, nl - pos);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError("metadata line without key=value", at + pos);
    std::string k = line.substr(0, eq);
    if (!first && k <= prev) throw FormatError("metadata keys not strictly sorted", at + pos);
    m[k] = line.substr(eq + 1);
    prev = std::move(k);
    first = false;
    pos = nl + 1;
  }
  return m;
}

Header parse_header(io::ByteReader& r) {
  if (std::memcmp(r.take(5), kMagic, 5) != 0) throw FormatError("bad magic, not a CPLXR file", 0);
  const std::size_t vat = r.offset();
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) throw FormatError("unsupported CPLXR version " + std::to_string(version), vat);
  Header h;
  const std::size_t dat = r.offset();
  const auto d = r.get<std::uint8_t>();
  if (d > 2) throw FormatError("unknown dtype tag " + std::to_string(d), dat);
  h.dtype = Dtype(d);
  h.h = r.get<std::uint32_t>();
  h.w = r.get<std::uint32_t>();
  h.c = r.get<std::uint32_t>();
  const std::size_t mat = r.offset();
  const auto mlen = r.get<std::uint32_t>();
  const char* mp = r.take(mlen);
  h.meta = decode_meta(std::string(mp, mlen), mat + 4);
  h.payload_offset = r.offset();
  return h;
}

void put_header(io::ByteWriter& w, Dtype d, std::size_t h, std::size_t wd, std::size_t c, const Meta& meta) {
  w.put_bytes(kMagic, 5);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint8_t>(std::uint8_t(d));
  w.put<std::uint32_t>(std::uint32_t(h));
  w.put<std::uint32_t>(std::uint32_t(wd));
  w.put<std::uint32_t>(std::uint32_t(c));
  w.put_string(encode_meta(meta));
}

}  // namespace

std::string encode_meta(const Meta& m) {
  std::string out;
  for (const auto& [k, v] : m) {
    if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw DataError("metadata entry '" + k + "' cannot be encoded");
    out += k + "=" + v + "\n";
  }
  return out;
}

ComplexRaster::ComplexRaster(std::size_t h, std::size_t w, std::size_t c, Dtype dt)
    : height(h), width(w), channels(c), dtype(dt), data(h * w * c) {
  if (dt == Dtype::u8) throw DataError("complex raster cannot have dtype u8");
}

void ComplexRaster::quantize() {
  if (dtype != Dtype::c64) return;
  for (auto& v : data) v = cd(double(float(v.real())), double(float(v.imag())));
}

std::vector<char> encode_raster(const ComplexRaster& r) {
  if (r.data.size() != r.height * r.width * r.channels) throw DataError("raster data length does not match its extents");
  io::ByteWriter w;
  put_header(w, r.dtype, r.height, r.width, r.channels, r.meta);
  if (r.dtype == Dtype::c64) {
    for (const auto& v : r.data) {
      w.put<float>(float(v.real()));
      w.put<float>(float(v.imag()));
    }
  } else if (r.dtype == Dtype::c128) {
    for (const auto& v : r.data) {
      w.put<double>(v.real());
      w.put<double>(v.imag());
    }
  } else {
    throw DataError("complex raster cannot have dtype u8");
  }
  return w.bytes();
}

ComplexRaster decode_raster(const std::vector<char>& bytes, const ReadOptions& opt) {
  io::ByteReader r(bytes);
  Header h = parse_header(r);
  if (h.dtype == Dtype::u8) throw FormatError("file holds a label plane, not a complex raster", 5 + 2);
  ComplexRaster out(h.h, h.w, h.c, h.dtype);
  out.meta = std::move(h.meta);
  const std::size_t need = out.data.size() * element_size(h.dtype);
  if (r.remaining() < need)
    throw FormatError("truncated payload: expected " + std::to_string(need) + " bytes, found " +
                          std::to_string(r.remaining()),
                      bytes.size());
  for (auto& v : out.data) {
    if (h.dtype == Dtype::c64) {
      const float re = r.get<float>(), im = r.get<float>();
      v = cd(re, im);
    } else {
      const double re = r.get<double>(), im = r.get<double>();
      v = cd(re, im);
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload", r.offset());
  if (opt.expand_to_sinclair) return expand_to_sinclair(out);
  return out;
}

void write_raster(const std::filesystem::path& path, const ComplexRaster& r) {
  io::write_file(path, encode_raster(r));
}

ComplexRaster read_raster(const std::filesystem::path& path, const ReadOptions& opt) {
  return decode_raster(io::read_file(path), opt);
}

void write_labels(const std::filesystem::path& path, const LabelPlane& l) {
  if (l.data.size() != l.height * l.width) throw DataError("label data length does not match its extents");
  io::ByteWriter w;
  put_header(w, Dtype::u8, l.height, l.width, 1, l.meta);
  w.put_bytes(l.data.data(), l.data.size());
  io::write_file(path, w.bytes());
}

LabelPlane read_labels(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes);
  Header h = parse_header(r);
  if (h.dtype != Dtype::u8) throw FormatError("file holds a complex raster, not a label plane", 5 + 2);
  if (h.c != 1) throw FormatError("label plane must have one channel", 5 + 2 + 1 + 8);
  LabelPlane l(h.h, h.w);
  l.meta = std::move(h.meta);
  if (r.remaining() < l.data.size())
    throw FormatError("truncated label payload: expected " + std::to_string(l.data.size()) + " bytes", bytes.size());
  std::memcpy(l.data.data(), r.take(l.data.size()), l.data.size());
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload", r.offset());
  return l;
}

ComplexRaster expand_to_sinclair(const ComplexRaster& r) {
  if (r.channels == 4) return r;
  if (r.channels != 3) throw DataError("expected a 3- or 4-channel raster, got " + std::to_string(r.channels));
  ComplexRaster out(r.height, r.width, 4, r.dtype);
  out.meta = r.meta;
  for (std::size_t p = 0; p < r.pixels(); ++p) {
    const cd* s = &r.data[p * 3];
    cd* d = &out.data[p * 4];
    d[0] = s[0];
    d[1] = s[1];
    d[2] = s[1];
    d[3] = s[2];
  }
  return out;
}

ComplexRaster import_raw(const std::filesystem::path& path, std::size_t height, std::size_t width,
                         std::size_t channels, Dtype dtype) {
  if (dtype == Dtype::u8) throw ConfigError("raw import needs a complex dtype");
  const auto bytes = io::read_file(path);
  ComplexRaster out(height, width, channels, dtype);
  const std::size_t need = out.data.size() * element_size(dtype);
  if (bytes.size() != need)
    throw FormatError("raw file has " + std::to_string(bytes.size()) + " bytes, dimensions need " +
                          std::to_string(need),
                      std::min(bytes.size(), need));
  io::ByteReader r(bytes);
  for (auto& v : out.data) {
    if (dtype == Dtype::c64) {
      const float re = r.get<float>(), im = r.get<float>();
      v = cd(re, im);
    } else {
      const double re = r.get<double>(), im = r.get<double>();
      v = cd(re, im);
    }
  }
  return out;
}

}  // namespace polsar::data
