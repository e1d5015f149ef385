#pragma once

#include "plom/types.hpp"

#include <cmath>
#include <cstdint>
#include <string_view>

namespace plom {

/// Counter-based random stream. The state is a key hashed from
/// (seed, label, stream index); draw i is a fixed mix of key + i, so streams
/// never overlap, are reproducible bit-for-bit, and can be handed to
/// independent chains without coordination. All randomness in the library
/// flows through these streams from a single user seed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label,
            std::uint64_t stream_index = 0)
      : key_(derive_key(seed, label, stream_index)) {}

  std::uint64_t next_u64() {
    return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the paired value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Fills column-major, so the draw order is independent of how the caller
  /// later slices the matrix.
  Matrix normal_matrix(Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) out(i, j) = normal();
    return out;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  static std::uint64_t derive_key(std::uint64_t seed, std::string_view label,
                                  std::uint64_t stream_index) {
    std::uint64_t k = mix(seed ^ 0xA0761D6478BD642Full);
    for (unsigned char c : label) k = mix(k ^ c);
    return mix(k + stream_index * 0x9E3779B97F4A7C15ull);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace plom
