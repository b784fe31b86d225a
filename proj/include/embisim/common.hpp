#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

namespace embisim {

// =============================================================================
// Errors
// =============================================================================

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Storage-level failure (open/read/write/temp-space).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file: bad magic, bad header, width/block mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition (ordering, coverage, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Internal consistency check failed; indicates a bug or corrupt state.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// =============================================================================
// Hashing
// =============================================================================

/// FNV-1a, 64 bit. Used for structural hashes of label/child-hash sequences.
class Fnv1a {
 public:
  static constexpr std::uint64_t offset_basis = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t prime = 0x00000100000001b3ull;

  void mix_byte(std::uint8_t b) {
    value_ ^= b;
    value_ *= prime;
  }

  void mix_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) mix_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void mix_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::uint64_t value() const { return value_; }

 private:
  std::uint64_t value_ = offset_basis;
};

// =============================================================================
// Seeded random stream (SplitMix64, constants from Steele et al.)
// =============================================================================

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound); bound must be positive.
  /// Multiply-shift reduction, identical on every platform.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin(double p) { return unit() < p; }

  /// Independent child stream, for per-entity reproducibility.
  SplitMix64 split() { return SplitMix64(next() ^ 0x3c79ac492ba7b653ull); }

 private:
  std::uint64_t state_;
};

}  // namespace embisim
