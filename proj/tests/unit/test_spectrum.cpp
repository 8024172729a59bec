#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "imgchain/spectrum.hpp"
#include "support/synthetic.hpp"

using namespace imgchain;
using fourier::Complex;

namespace {

// Direct O(N^2) DFT with the zero frequency at index floor(n/2).
std::vector<Complex> naive_centred_dft(const Raster& x) {
  const std::size_t R = x.rows(), C = x.cols();
  std::vector<Complex> out(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const double ky = static_cast<double>(static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(R / 2));
      const double kx = static_cast<double>(static_cast<std::ptrdiff_t>(c) - static_cast<std::ptrdiff_t>(C / 2));
      Complex s{};
      for (std::size_t y = 0; y < R; ++y)
        for (std::size_t z = 0; z < C; ++z)
          s += x(y, z) * std::polar(1.0, -2.0 * std::numbers::pi * (ky * y / R + kx * z / C));
      out[r * C + c] = s;
    }
  return out;
}

Raster tone(std::size_t n, double cycles_y, double cycles_x) {
  Raster r(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      r(y, x) = std::cos(2.0 * std::numbers::pi * (cycles_y * y + cycles_x * x) / static_cast<double>(n));
  return r;
}

}  // namespace

TEST(Spectrum, MatchesNaiveDftOnOddAndEvenShapes) {
  rng::SplitMix g(5);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{6, 8}, {7, 5}, {9, 10}}) {
    const auto x = testkit::random_raster(g, rows, cols, -1.0, 1.0);
    const auto s = fourier::forward_spectrum(x, 2.0);
    const auto oracle = naive_centred_dft(x);
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_LT(std::abs(s.values[i] - oracle[i]), 1e-10);
    EXPECT_NEAR(s.dc().real(), x.sum(), 1e-10);
  }
}

TEST(Spectrum, AxesFollowGroundSampling) {
  const auto s = fourier::forward_spectrum(Raster(8, 5, 1.0), GroundSampling{2.0, 0.5});
  EXPECT_DOUBLE_EQ(s.axis_y.front(), -0.25);
  EXPECT_DOUBLE_EQ(s.axis_y[4], 0.0);
  EXPECT_NEAR(s.axis_y.back(), 0.25 - 0.5 / 8.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.axis_x[2], 0.0);
  EXPECT_NEAR(s.axis_x[0], -2.0 * 2.0 / 5.0, 1e-15);
  const auto axis = fourier::dg_frequency_axis(1.0, 4);
  EXPECT_EQ(axis, (std::vector<double>{-0.5, -0.25, 0.0, 0.25}));
}

TEST(Spectrum, RoundTripRecoversRaster) {
  rng::SplitMix g(6);
  const auto x = testkit::random_raster(g, 33, 20, 0.0, 100.0);
  const auto back = fourier::inverse_spectrum(fourier::forward_spectrum(x, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back.values()[i], x.values()[i], 1e-10);
}

TEST(Spectrum, ParsevalHolds) {
  rng::SplitMix g(9);
  const auto x = testkit::random_raster(g, 16, 12, -2.0, 2.0);
  double e = 0;
  for (double v : x.values()) e += v * v;
  EXPECT_NEAR(fourier::forward_spectrum(x, 1.0).energy() / x.size(), e, 1e-9);
}

TEST(Spectrum, NonHermitianInverseIsRejected) {
  auto s = fourier::forward_spectrum(Raster(4, 4, 1.0), 1.0);
  s(1, 3) += Complex(0.0, 5.0);
  EXPECT_THROW(fourier::inverse_spectrum(s), Error);
}

TEST(Spectrum, ApplyMtfChecksAxes) {
  const auto s = fourier::forward_spectrum(Raster(4, 4, 1.0), 1.0);
  const auto tf = optics::unit_transfer_function(fourier::dg_frequency_axis(2.0, 4), s.axis_x);
  EXPECT_THROW(fourier::apply_mtf(s, tf), Error);
  const auto ok = fourier::apply_mtf(s, optics::unit_transfer_function(s.axis_y, s.axis_x));
  EXPECT_EQ(ok.values, s.values);
}

TEST(Fold, MatchesSpatialDecimationOfBandLimitedSignal) {
  // Folding a spectrum equals sampling its trigonometric interpolant on the
  // coarser grid: for an integer factor that is plain decimation.
  rng::SplitMix g(11);
  const std::size_t n = 24, m = 8;
  const auto x = testkit::random_raster(g, n, n, -1.0, 1.0);
  const auto folded = fourier::fold_spectrum(fourier::forward_spectrum(x, 1.0), m, m, false);
  const auto y = fourier::inverse_spectrum(folded);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) EXPECT_NEAR(y(r, c), x(r * 3, c * 3), 1e-10);
}

TEST(Fold, ToneAliasesToMirrorFrequency) {
  // 1.5x the output Nyquist folds to 0.5x.
  const std::size_t n = 96, m = 32;
  const auto x = tone(n, 24.0, 0.0);
  const auto out = fourier::fold_spectrum(fourier::forward_spectrum(x, 1.0), m, m, false);
  const auto mag = [&](std::size_t r, std::size_t c) { return std::abs(out(r, c)); };
  std::size_t best_r = 0, best_c = 0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c)
      if (mag(r, c) > mag(best_r, best_c)) std::tie(best_r, best_c) = std::tie(r, c);
  EXPECT_EQ(static_cast<int>(best_c), 16);
  EXPECT_EQ(std::abs(static_cast<int>(best_r) - 16), 8);
  EXPECT_NEAR(mag(best_r, best_c), m * m / 2.0, 1e-9);
}

TEST(Fold, CropDropsOutOfBandContent) {
  const std::size_t n = 96, m = 32;
  const auto x = tone(n, 24.0, 0.0);
  const auto out = fourier::fold_spectrum(fourier::forward_spectrum(x, 1.0), m, m, true);
  EXPECT_LT(out.energy(), 1e-18);
  const auto low = fourier::fold_spectrum(fourier::forward_spectrum(tone(n, 5.0, 3.0), 1.0), m, m, true);
  EXPECT_NEAR(fourier::inverse_spectrum(low)(0, 0), 1.0, 1e-12);
}

TEST(Fold, EnergyScalesWithGridWhenNothingAliases) {
  rng::SplitMix g(3);
  const auto x = testkit::random_raster(g, 12, 12, 0.0, 1.0);
  const auto s = fourier::forward_spectrum(x, 1.0);
  const auto same = fourier::fold_spectrum(s, 12, 12, false);
  for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_NEAR(std::abs(same.values[i] - s.values[i]), 0.0, 1e-12);
  const auto flat = fourier::fold_spectrum(fourier::forward_spectrum(Raster(12, 12, 0.3), 1.0), 5, 7, false);
  EXPECT_NEAR(flat.dc().real(), 0.3 * 35.0, 1e-10);
  EXPECT_NEAR(flat.energy(), flat.dc().real() * flat.dc().real(), 1e-9);
}

TEST(Resample, RefusesSuperResolutionAndSizesGrid) {
  const auto s = fourier::forward_spectrum(Raster(20, 20, 1.0), 2.0);
  optics::FrequencyBudget b;
  EXPECT_THROW(fourier::resample_with_alias(s, b, 1.0), Error);
  const auto out = fourier::resample_with_alias(s, b, 5.0);
  EXPECT_EQ(out.rows, 8u);
  EXPECT_EQ(out.cols, 8u);
  EXPECT_EQ(fourier::resampled_size(40.0, 3.0), 13u);
}
