#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "imgchain/rng.hpp"

using namespace imgchain::rng;

TEST(Philox, KnownAnswerVectors) {
  // Published Random123 known-answer tests for philox4x32_10.
  const Philox4x32 zero({0u, 0u});
  EXPECT_EQ(zero({0u, 0u, 0u, 0u}), (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  const Philox4x32 ones({0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}),
            (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  const Philox4x32 pi({0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}),
            (Philox4x32::Counter{0xd16cfe09u, 0x94fdcceBu, 0x5001e420u, 0x24126ea1u}));
}

TEST(NoiseStream, AddressableAndKeyed) {
  const NoiseStream a(7, "img", 0), b(7, "img", 0), c(8, "img", 0), d(7, "img", 1), e(7, "other", 0);
  EXPECT_EQ(a.normals(123), b.normals(123));
  EXPECT_NE(a.normals(123), c.normals(123));
  EXPECT_NE(a.normals(123), d.normals(123));
  EXPECT_NE(a.normals(123), e.normals(123));
  EXPECT_NE(a.normals(123), a.normals(124));
}

TEST(NoiseStream, NormalMoments) {
  const NoiseStream s(1, "moments", 0);
  const std::size_t n = 200000;
  double sum = 0, sq = 0, cross = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = s.normals(i);
    sum += z[0] + z[1];
    sq += z[0] * z[0] + z[1] * z[1];
    cross += z[0] * z[1];
  }
  const double m = sum / (2.0 * n);
  EXPECT_NEAR(m, 0.0, 5.0 / std::sqrt(2.0 * n));
  EXPECT_NEAR(sq / (2.0 * n) - m * m, 1.0, 0.01);
  EXPECT_NEAR(cross / n, 0.0, 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST(NoiseStream, PoissonMomentsAcrossRegimes) {
  const NoiseStream s(2, "poisson", 0);
  for (double lambda : {0.3, 4.0, 9.9, 10.0, 55.0, 1000.0}) {
    const std::size_t n = 100000;
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double k = s.poisson(i, lambda);
      ASSERT_EQ(k, std::floor(k));
      ASSERT_GE(k, 0.0);
      sum += k;
      sq += k * k;
    }
    const double m = sum / n, v = sq / n - m * m;
    EXPECT_NEAR(m, lambda, 5.0 * std::sqrt(lambda / n)) << lambda;
    EXPECT_NEAR(v / lambda, 1.0, 0.03) << lambda;
  }
}

TEST(NoiseStream, PoissonSmallMeanProbabilities) {
  const NoiseStream s(3, "pmf", 0);
  const double lambda = 2.0;
  const std::size_t n = 200000;
  std::vector<double> counts(8, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(s.poisson(i, lambda));
    if (k < counts.size()) counts[k] += 1.0;
  }
  double pmf = std::exp(-lambda);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    EXPECT_NEAR(counts[k] / n, pmf, 4.0 * std::sqrt(pmf / n) + 1e-4) << k;
    pmf *= lambda / static_cast<double>(k + 1);
  }
}

TEST(SplitMix, DeterministicShuffleIsAPermutation) {
  std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, b = a;
  SplitMix g1(42), g2(42);
  shuffle(a, g1);
  shuffle(b, g2);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}
