#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace convord {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: output depends
/// only on (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

inline constexpr std::string_view kGeneratorId = "philox4x32-10+box-muller";

/// Disjoint substreams carved out of a single user seed.
enum class Stream : std::uint32_t {
  Gaussian = 0,
  InitialX = 1,
  InitialY = 2,
  Checker = 3,
  GaussianAlt = 4,
};

/// Counter-based generator: every draw is addressed by (index, sub) so that a
/// value never depends on evaluation order or on the number of workers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream);

  /// Two 64-bit words for the address (index, sub).
  std::array<std::uint64_t, 2> bits(std::uint64_t index, std::uint32_t sub) const;

  /// Two uniforms in the open interval (0, 1).
  std::array<double, 2> uniforms(std::uint64_t index, std::uint32_t sub) const;

  /// Two independent standard normals (Box-Muller on uniforms(index, sub)).
  std::array<double, 2> normals(std::uint64_t index, std::uint32_t sub) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
};

/// Maps 64 random bits to (0, 1) with 52-bit resolution; both ends are excluded.
inline double bits_to_open_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace convord
