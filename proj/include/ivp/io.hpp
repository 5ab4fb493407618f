#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ivp/common.hpp"

namespace ivp {

// Little-endian byte IO with offset tracking; framing errors surface as
// FormatError carrying the offset of the offending field.

class ByteWriter {
 public:
  explicit ByteWriter(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
  }

  void bytes(const void* p, std::size_t len) {
    f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
    off_ += len;
  }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  std::uint64_t offset() const { return off_; }

  void close() {
    f_.close();
    if (!f_) fail(ErrorCode::io, "write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream f_;
  std::uint64_t off_ = 0;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& path) : path_(path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    f.seekg(0, std::ios::end);
    buf_.resize(static_cast<std::size_t>(f.tellg()));
    f.seekg(0);
    f.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!f) fail(ErrorCode::io, "read from '" + path + "' failed");
  }

  void bytes(void* p, std::size_t len) {
    if (off_ + len > buf_.size()) throw FormatError("truncated file in '" + path_ + "'", off_);
    std::memcpy(p, buf_.data() + off_, len);
    off_ += len;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (static_cast<std::uint64_t>(u32()) << 32);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t max_len = 1 << 20) {
    const std::uint64_t at = off_;
    const std::uint32_t len = u32();
    if (len > max_len) throw FormatError("unreasonable string length in '" + path_ + "'", at);
    std::string s(len, '\0');
    bytes(s.data(), len);
    return s;
  }

  void expect_magic(const char magic[4]) {
    char got[4];
    const std::uint64_t at = off_;
    bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0)
      throw FormatError("bad magic in '" + path_ + "', expected '" + std::string(magic, 4) + "'", at);
  }

  void expect_eof() const {
    if (off_ != buf_.size())
      throw FormatError("trailing bytes in '" + path_ + "'", off_);
  }

  std::uint64_t offset() const { return off_; }
  std::uint64_t remaining() const { return buf_.size() - off_; }

 private:
  std::string path_;
  std::vector<unsigned char> buf_;
  std::uint64_t off_ = 0;
};

}  // namespace ivp
