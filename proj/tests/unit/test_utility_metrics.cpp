#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "imgchain/utility_metrics.hpp"
#include "support/synthetic.hpp"

using namespace imgchain;
using namespace imgchain::quality;

namespace {

Giqe5Coefficients reference_coefficients() {
  return giqe5_coefficients_from_json({{"a", {9.57, -3.32, 3.32, -1.9, -2.0, -1.8}},
                                       {"gsd_unit", "inch"},
                                       {"rer_term", "(log10 rer)^4"},
                                       {"source", "unit test"}});
}

BandedImage one_band(const Raster& r) { return BandedImage({r}, Unit::ToaReflectance, 1.0); }

// Sine integral by Simpson's rule on a fine grid.
double si(double x) {
  const int n = 200000;
  const double h = x / n;
  double s = 1.0 + std::sin(x) / x;
  for (int i = 1; i < n; ++i) {
    const double t = h * i;
    s += (i % 2 ? 4.0 : 2.0) * std::sin(t) / t;
  }
  return s * h / 3.0;
}

}  // namespace

TEST(Giqe5, MatchesIndependentEvaluation) {
  const auto c = reference_coefficients();
  struct Case {
    double gsd, rer, snr, niirs;
  };
  const Case cases[] = {{6.0, 0.8, 4.47, 1.1763165180226434},
                        {0.5, 0.35, 50.0, 5.094603167007308},
                        {1.2, 0.55, 12.0, 3.725851390820589},
                        {3.0, 0.95, 100.0, 2.6706129512331733},
                        {10.0, 0.25, 2.0, -1.4345361644449608}};
  for (const auto& k : cases) EXPECT_NEAR(giqe5_niirs(k.gsd, k.rer, k.snr, c), k.niirs, 1e-9) << k.gsd;
  EXPECT_THROW(giqe5_niirs(0.0, 0.5, 1.0, c), Error);
  EXPECT_THROW(giqe5_niirs(1.0, 0.5, -1.0, c), Error);
}

TEST(Giqe5, CoefficientFileSchema) {
  nlohmann::json j{{"a", {1, 2, 3, 4, 5, 6}}, {"gsd_unit", "m"}, {"rer_term", "log10(rer^4)"}, {"source", "x"}};
  const auto c = giqe5_coefficients_from_json(j);
  EXPECT_EQ(c.gsd_unit, GsdUnit::Metre);
  // 1 + 2*log10(10) + 3*(1-e^(4/2))*log10(0.1) + 5*4*log10(0.1) + 6/2
  EXPECT_NEAR(giqe5_niirs(10.0, 0.1, 2.0, c), 1 + 2 - 3 * (1 - std::exp(2.0)) - 20 + 3, 1e-12);
  for (const char* key : {"a", "gsd_unit", "source"}) {
    auto bad = j;
    bad.erase(key);
    EXPECT_THROW(giqe5_coefficients_from_json(bad), Error) << key;
  }
  j["a"] = {1, 2, 3};
  EXPECT_THROW(giqe5_coefficients_from_json(j), Error);
  EXPECT_NO_THROW(load_giqe5_coefficients(std::string(IMGCHAIN_TEST_DATA) + "/../../assets/giqe5_coefficients.json"));
}

TEST(Rer, FlatMtfGivesSineIntegral) {
  for (double cutoff : {0.5, 1.0, 3.0}) {
    const double expected = 2.0 / std::numbers::pi * si(std::numbers::pi * cutoff);
    EXPECT_NEAR(estimate_rer([](double) { return 1.0; }, 1.0, cutoff), expected, 1e-9) << cutoff;
  }
  EXPECT_THROW(estimate_rer([](double) { return 0.0; }, 1.0, 1.0), Error);
}

TEST(Rer, FallsWithFNumber) {
  double previous = 2.0;
  for (double f : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const double r = estimate_rer(baseline_sensor(f, 0.05));
    EXPECT_GT(r, 0.0);
    EXPECT_LT(r, previous);
    previous = r;
  }
}

TEST(Snr, ShotAndReadNoise) {
  const auto c = baseline_sensor(0.5, 0.05);
  const double ie = 3.3383989547254553 * 18.5;
  EXPECT_NEAR(estimate_snr(c, 18.5), ie / std::sqrt(ie + 12.5 * 12.5), 1e-9);
  EXPECT_NEAR(mid_well_radiance(c) * 3.3383989547254553, 20150.0, 1e-6);
  EXPECT_THROW(estimate_snr(c, 0.0), Error);
}

TEST(Giqe, SweepAndOptimalQ) {
  auto c = reference_coefficients();
  c.reference_radiance = 18.5;
  const auto grid = value_grid(0.1, 1.0, 0.05);
  ASSERT_EQ(grid.size(), 19u);
  EXPECT_NEAR(grid.back(), 1.0, 1e-12);
  const auto table = giqe_optimal_q(baseline_sensor(), grid, {0.05, 0.06, 0.07}, c);
  ASSERT_EQ(table.optima.size(), 3u);
  EXPECT_LT(table.q.std, 0.05);
  for (const auto& p : table.optima) {
    EXPECT_NEAR(p.q, 4.5e-7 * p.focal_length_m / (p.aperture_diameter_m * 6e-6), 1e-12);
    EXPECT_NEAR(p.gsd_m, 3.0 / p.focal_length_m, 1e-9);
  }
  // larger apertures see more and reach optimum at longer focal length
  EXPECT_LT(table.optima[0].focal_length_m, table.optima[2].focal_length_m);
  EXPECT_LT(table.value_min, table.value_max);
}

TEST(Psnr, HandCases) {
  const Raster ref(8, 8, 0.5);
  const auto s = psnr(one_band(ref), one_band(Raster(8, 8, 0.6)));
  EXPECT_NEAR(s.value, 20.0, 1e-9);
  EXPECT_NEAR(psnr(one_band(ref), one_band(Raster(8, 8, 0.51))).value, 40.0, 1e-9);
  EXPECT_NEAR(psnr(one_band(ref), one_band(Raster(8, 8, 0.6)), 255.0).value, 20.0 * std::log10(2550.0), 1e-9);
  const auto same = psnr(one_band(ref), one_band(ref));
  EXPECT_TRUE(same.infinite);
  EXPECT_EQ(same.to_json().at("value"), "inf");
  EXPECT_THROW(psnr(one_band(ref), one_band(Raster(8, 7))), Error);
}

TEST(Ssim, MatchesGoldenVectors) {
  const auto golden = io::read_json(std::string(IMGCHAIN_TEST_DATA) + "/ssim_golden.json");
  for (const auto& k : golden.at("cases")) {
    auto [a, b] = testkit::golden_pair(k.at("rows"), k.at("cols"));
    const std::string pair = k.at("pair");
    Raster x = a, y = b;
    if (pair == "a,0.7a+0.1") y = a.map([](double v) { return 0.7 * v + 0.1; });
    else if (pair == "b,1-a") {
      x = b;
      y = a.map([](double v) { return 1.0 - v; });
    }
    EXPECT_NEAR(ssim_band(x, y), k.at("ssim").get<double>(), 1e-4) << pair << " " << k.at("rows");
  }
}

TEST(Ssim, IdentitySymmetryAndSizeCheck) {
  const auto [a, b] = testkit::golden_pair();
  EXPECT_NEAR(ssim_band(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim_band(a, b), ssim_band(b, a), 1e-12);
  EXPECT_THROW(ssim_band(Raster(10, 20), Raster(10, 20)), Error);
  const BandedImage two({a, b}, Unit::ToaReflectance, 1.0);
  const auto s = ssim(two, BandedImage({a, a}, Unit::ToaReflectance, 1.0));
  EXPECT_NEAR(s.value, (1.0 + ssim_band(b, a)) / 2.0, 1e-12);
}
