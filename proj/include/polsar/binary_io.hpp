#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "polsar/errors.hpp"

namespace polsar::io {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  template <class V>
  void put(V v) {
    static_assert(std::is_trivially_copyable_v<V>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(V));
  }
  void put_bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

/// Reads little-endian scalars; every failure reports the byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const char> data) : data_(data) {}

  template <class V>
  V get() {
    static_assert(std::is_trivially_copyable_v<V>);
    V v;
    std::memcpy(&v, take(sizeof(V)), sizeof(V));
    return v;
  }
  const char* take(std::size_t n) {
    if (n > data_.size() - pos_)
      throw FormatError("truncated input: needed " + std::to_string(n) + " bytes, " +
                            std::to_string(data_.size() - pos_) + " available",
                        pos_);
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string get_string(std::size_t max_len = 1u << 24) {
    const std::size_t at = pos_;
    const auto n = get<std::uint32_t>();
    if (n > max_len) throw FormatError("string length " + std::to_string(n) + " is implausible", at);
    const char* p = take(n);
    return std::string(p, n);
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Writes through a temporary sibling and renames, so readers never see a partial file.
inline void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace polsar::io
