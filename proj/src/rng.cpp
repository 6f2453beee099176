#include "convord/rng.hpp"

#include <cmath>
#include <numbers>

namespace convord {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline void round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mulhilo(kMul0, c[0], lo0, hi0);
  mulhilo(kMul1, c[2], lo1, hi1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) {
  round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    round(counter, key);
  }
  return counter;
}

CounterRng::CounterRng(std::uint64_t seed, Stream stream)
    : seed_(seed), stream_(static_cast<std::uint32_t>(stream)) {}

std::array<std::uint64_t, 2> CounterRng::bits(std::uint64_t index, std::uint32_t sub) const {
  const auto out = philox4x32_10(
      {sub, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream_},
      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
          (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

std::array<double, 2> CounterRng::uniforms(std::uint64_t index, std::uint32_t sub) const {
  const auto b = bits(index, sub);
  return {bits_to_open_unit(b[0]), bits_to_open_unit(b[1])};
}

std::array<double, 2> CounterRng::normals(std::uint64_t index, std::uint32_t sub) const {
  const auto u = uniforms(index, sub);
  const double r = std::sqrt(-2.0 * std::log(u[0]));
  const double a = 2.0 * std::numbers::pi * u[1];
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace convord
