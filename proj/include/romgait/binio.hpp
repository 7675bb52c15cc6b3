#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "romgait/errors.hpp"

namespace romgait {

// Little-endian binary writer with a running CRC32. All multi-byte values are
// written explicitly byte by byte so files are portable.
class BinaryWriter {
 public:
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_u8(std::uint8_t v) { put_bytes(&v, 1); }
  void put_u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(b, 4);
  }
  void put_u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(b, 8);
  }
  void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
  void put_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(bits);
  }
  void put_string(const std::string& s) {
    put_u64(s.size());
    put_bytes(s.data(), s.size());
  }
  void put_f64_array(const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) put_f64(data[i]);
  }

  std::uint32_t crc() const {
    uLong c = crc32(0L, Z_NULL, 0);
    if (!buf_.empty()) c = crc32(c, buf_.data(), static_cast<uInt>(buf_.size()));
    return static_cast<std::uint32_t>(c);
  }

  // Appends the CRC of everything written so far, then writes the file.
  void write_file_with_crc(const std::string& path) {
    const std::uint32_t c = crc();
    put_u32(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoFailure("short write to " + path);
  }

  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::vector<unsigned char> bytes) : buf_(std::move(bytes)) {}

  static BinaryReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return BinaryReader(std::move(bytes));
  }

  // Validates and strips the trailing CRC32.
  void check_crc(const std::string& what) {
    if (buf_.size() < 4) throw TruncatedFile(what);
    const std::size_t body = buf_.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(buf_[body + i]) << (8 * i);
    uLong c = crc32(0L, Z_NULL, 0);
    if (body > 0) c = crc32(c, buf_.data(), static_cast<uInt>(body));
    if (static_cast<std::uint32_t>(c) != stored) throw ChecksumMismatch(what);
    buf_.resize(body);
  }

  void get_bytes(void* out, std::size_t n) {
    if (pos_ + n > buf_.size()) throw TruncatedFile("unexpected end of data");
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t get_u8() {
    std::uint8_t v;
    get_bytes(&v, 1);
    return v;
  }
  std::uint32_t get_u32() {
    unsigned char b[4];
    get_bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t get_u64() {
    unsigned char b[8];
    get_bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
  double get_f64() {
    const std::uint64_t bits = get_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string get_string() {
    const std::uint64_t n = get_u64();
    if (pos_ + n > buf_.size()) throw TruncatedFile("string extends past end of data");
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void get_f64_array(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = get_f64();
  }

  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace romgait
