#include "convord/parallel.hpp"
#include "convord/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace convord {
namespace {

TEST(Philox, KnownAnswerVectors) {
  using Block = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, DrawsArePureFunctionsOfTheAddress) {
  const CounterRng a(42, Stream::Gaussian);
  const CounterRng b(42, Stream::Gaussian);
  EXPECT_EQ(a.normals(17, 3), b.normals(17, 3));
  EXPECT_NE(a.normals(17, 3), a.normals(17, 4));
  EXPECT_NE(a.normals(17, 3), CounterRng(42, Stream::InitialX).normals(17, 3));
  EXPECT_NE(a.normals(17, 3), CounterRng(43, Stream::Gaussian).normals(17, 3));
}

TEST(CounterRng, UniformsStayInsideTheOpenInterval) {
  EXPECT_GT(bits_to_open_unit(0), 0.0);
  EXPECT_LT(bits_to_open_unit(~std::uint64_t{0}), 1.0);
}

TEST(CounterRng, NormalMomentsLookStandard) {
  const CounterRng rng(7, Stream::Gaussian);
  const std::size_t n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double z : rng.normals(i, 0)) {
      s1 += z;
      s2 += z * z;
    }
  }
  const double mean = s1 / (2.0 * n);
  const double var = s2 / (2.0 * n) - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(2.0 * n));
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / (2.0 * n)));
}

TEST(Parallel, ResultsDoNotDependOnWorkerCount) {
  auto run = [](std::size_t threads) {
    set_thread_count(threads);
    std::vector<double> out(1000);
    const CounterRng rng(5, Stream::Gaussian);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = rng.normals(i, 0)[0]; });
    set_thread_count(0);
    return out;
  };
  EXPECT_EQ(run(1), run(8));
}

TEST(Parallel, PropagatesExceptions) {
  set_thread_count(4);
  EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                 if (i == 37) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  set_thread_count(0);
}

}  // namespace
}  // namespace convord
