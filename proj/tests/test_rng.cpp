#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "slmlab/parallel.hpp"
#include "slmlab/rng.hpp"

using namespace slm;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
  const Philox4x32 g(0);
  const auto b = g({0, 0, 0, 0});
  EXPECT_EQ(b[0], 0x6627e8d5u);
  EXPECT_EQ(b[1], 0xe169c58du);
  EXPECT_EQ(b[2], 0xbc57ac4cu);
  EXPECT_EQ(b[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const Philox4x32 g(0xffffffffffffffffull);
  const auto b = g({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_EQ(b[0], 0x408f276du);
  EXPECT_EQ(b[1], 0x41c83b0eu);
  EXPECT_EQ(b[2], 0xa20bc7c6u);
  EXPECT_EQ(b[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const Philox4x32 g(0xa4093822ull | (0x299f31d0ull << 32));
  const auto b = g({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  EXPECT_EQ(b[0], 0xd16cfe09u);
  EXPECT_EQ(b[1], 0x94fdccebu);
  EXPECT_EQ(b[2], 0x5001e420u);
  EXPECT_EQ(b[3], 0x24126ea1u);
}

TEST(Rng, OpenUnitNeverHitsEndpoints) {
  EXPECT_GT(to_open_unit(0, 0), 0.0);
  EXPECT_LT(to_open_unit(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(Rng, DrawSequenceIsAPureFunctionOfSeedAndPath) {
  const Philox4x32 g(42);
  DrawSequence a(g, 7), b(g, 7), c(g, 8);
  for (int i = 0; i < 101; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    if (i == 0) EXPECT_NE(x, c.normal());
  }
}

TEST(Rng, NormalsHaveUnitMomentsAndUniformsAreFlat) {
  const Philox4x32 g(3);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0, u = 0;
  DrawSequence d(g, 0);
  for (int i = 0; i < n; ++i) {
    const double z = d.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
    u += d.uniform();
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
  EXPECT_NEAR(u / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Parallel, ResultsDoNotDependOnWorkerCount) {
  const Philox4x32 g(9);
  auto fill = [&](int workers) {
    std::vector<double> out(1001);
    parallel_for(out.size(), workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t p = lo; p < hi; ++p) out[p] = DrawSequence(g, p).normal();
    });
    return out;
  };
  EXPECT_EQ(fill(1), fill(3));
  EXPECT_EQ(fill(1), fill(16));
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(10, 2,
                            [](std::size_t lo, std::size_t) {
                              if (lo == 0) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
