#include "polsar/cxnn/checkpoint.hpp"

#include <cstring>

#include "polsar/binary_io.hpp"

namespace polsar::nn {

namespace {

constexpr char kMagic[4] = {'C', 'X', 'A', 'E'};
constexpr std::uint16_t kVersion = 1;

template <class T>
constexpr std::uint8_t complex_tag() {
  return std::is_same_v<T, float> ? 0 : 1;
}
template <class T>
constexpr std::uint8_t real_tag() {
  return std::is_same_v<T, float> ? 2 : 3;
}

template <class V>
void put_entry(io::ByteWriter& w, const std::string& name, std::uint8_t tag, const Shape& shape,
               std::span<const V> data) {
  w.put_string(name);
  w.put<std::uint8_t>(tag);
  w.put<std::uint32_t>(std::uint32_t(shape.size()));
  for (auto e : shape) w.put<std::uint64_t>(e);
  w.put_bytes(data.data(), data.size_bytes());
}

struct Entry {
  std::uint8_t tag;
  Shape shape;
  const char* payload;
  std::size_t bytes;
  std::size_t offset;
};

struct Parsed {
  MetaMap meta;
  std::map<std::string, Entry> entries;
};

std::size_t tag_size(std::uint8_t tag, std::size_t at) {
  switch (tag) {
    case 0: return 8;
    case 1: return 16;
    case 2: return 4;
    case 3: return 8;
  }
  throw FormatError("unknown dtype tag " + std::to_string(tag), at);
}

Parsed parse(std::span<const char> bytes, bool with_entries) {
  io::ByteReader r(bytes);
  if (std::memcmp(r.take(4), kMagic, 4) != 0) throw FormatError("bad magic, not a CXAE checkpoint", 0);
  const std::size_t vat = r.offset();
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), vat);
  Parsed out;
  const auto nmeta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    auto k = r.get_string();
    out.meta[k] = r.get_string();
  }
  if (!with_entries) return out;
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t at = r.offset();
    auto name = r.get_string();
    Entry e;
    e.offset = at;
    e.tag = r.get<std::uint8_t>();
    const std::size_t es = tag_size(e.tag, at);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError("implausible rank " + std::to_string(rank), at);
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      e.shape.push_back(std::size_t(r.get<std::uint64_t>()));
      count *= e.shape.back();
    }
    e.bytes = count * es;
    e.payload = r.take(e.bytes);
    out.entries.emplace(std::move(name), e);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last entry", r.offset());
  return out;
}

template <class V>
void restore(const Parsed& p, const std::string& name, std::uint8_t tag, const Shape& shape, std::span<V> dst) {
  auto it = p.entries.find(name);
  if (it == p.entries.end()) throw DataError("checkpoint has no entry '" + name + "'");
  const Entry& e = it->second;
  if (e.tag != tag || e.shape != shape || e.bytes != dst.size_bytes())
    throw FormatError("entry '" + name + "' has dtype/shape " + std::to_string(e.tag) + " " + cx::to_string(e.shape) +
                          ", model expects " + std::to_string(tag) + " " + cx::to_string(shape),
                      e.offset);
  std::memcpy(dst.data(), e.payload, e.bytes);
}

}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, AutoEncoder<T>& model, const MetaMap& meta) {
  io::ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint32_t>(std::uint32_t(meta.size()));
  for (const auto& [k, v] : meta) {
    w.put_string(k);
    w.put_string(v);
  }
  auto params = model.parameters();
  auto buffers = model.buffers();
  w.put<std::uint32_t>(std::uint32_t(3 * params.size() + buffers.size()));
  for (auto* p : params) {
    const Shape& s = p->value.shape();
    put_entry<cplx<T>>(w, "param/" + p->name, complex_tag<T>(), s, p->value.data());
    put_entry<cplx<T>>(w, "adam_m/" + p->name, complex_tag<T>(), s, std::span<const cplx<T>>(p->adam_m));
    put_entry<cplx<T>>(w, "adam_v/" + p->name, complex_tag<T>(), s, std::span<const cplx<T>>(p->adam_v));
  }
  for (auto& b : buffers) {
    std::visit(
        [&](auto* vec) {
          using V = typename std::remove_pointer_t<decltype(vec)>::value_type;
          const std::uint8_t tag = std::is_same_v<V, cplx<T>> ? complex_tag<T>() : real_tag<T>();
          put_entry<V>(w, "buffer/" + b.name, tag, {vec->size()}, std::span<const V>(*vec));
        },
        b.data);
  }
  io::write_file(path, w.bytes());
}

MetaMap read_checkpoint_meta(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  return parse(bytes, false).meta;
}

template <class T>
MetaMap load_checkpoint(const std::filesystem::path& path, AutoEncoder<T>& model) {
  auto bytes = io::read_file(path);
  auto parsed = parse(bytes, true);
  for (auto* p : model.parameters()) {
    const Shape& s = p->value.shape();
    restore<cplx<T>>(parsed, "param/" + p->name, complex_tag<T>(), s, p->value.mutable_data());
    p->reset_state();
    restore<cplx<T>>(parsed, "adam_m/" + p->name, complex_tag<T>(), s, std::span<cplx<T>>(p->adam_m));
    restore<cplx<T>>(parsed, "adam_v/" + p->name, complex_tag<T>(), s, std::span<cplx<T>>(p->adam_v));
  }
  for (auto& b : model.buffers()) {
    std::visit(
        [&](auto* vec) {
          using V = typename std::remove_pointer_t<decltype(vec)>::value_type;
          const std::uint8_t tag = std::is_same_v<V, cplx<T>> ? complex_tag<T>() : real_tag<T>();
          restore<V>(parsed, "buffer/" + b.name, tag, {vec->size()}, std::span<V>(*vec));
        },
        b.data);
  }
  return parsed.meta;
}

template void save_checkpoint(const std::filesystem::path&, AutoEncoder<float>&, const MetaMap&);
template void save_checkpoint(const std::filesystem::path&, AutoEncoder<double>&, const MetaMap&);
template MetaMap load_checkpoint(const std::filesystem::path&, AutoEncoder<float>&);
template MetaMap load_checkpoint(const std::filesystem::path&, AutoEncoder<double>&);

}  // namespace polsar::nn
