#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ivp {

enum class ErrorCode : int {
  argument = 1,
  shape = 2,
  format = 3,
  io = 4,
  contract = 5,
  numeric = 6,
  version = 7,
  config = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Parse/decode failure in a binary file; carries the byte offset of the
// offending field.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset)
      : Error(ErrorCode::format, msg + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t byte_offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

// Uniform draws from raw engine output. std::uniform_real_distribution is
// implementation-defined; this keeps seeded runs reproducible across stdlibs.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  return n == 0 ? 0 : rng() % n;
}

}  // namespace ivp
