#include <gtest/gtest.h>

#include <cmath>

#include "imgchain/optics.hpp"

using namespace imgchain;

TEST(Optics, FNumberAndQ) {
  EXPECT_DOUBLE_EQ(optics::f_number(0.5, 0.05), 10.0);
  EXPECT_DOUBLE_EQ(optics::optical_q(4.5e-7, 10.0, 6e-6), 0.75);
  EXPECT_THROW(optics::f_number(0.5, 0.0), Error);
  EXPECT_THROW(optics::optical_q(0.0, 10.0, 6e-6), Error);
}

TEST(Optics, BaselineBudget) {
  const auto b = optics::frequency_budget(baseline_sensor(0.5, 0.05));
  EXPECT_DOUBLE_EQ(b.fn, 10.0);
  EXPECT_NEAR(b.q, 0.75, 1e-12);
  EXPECT_NEAR(b.gsd_m, 6.0, 1e-12);
  EXPECT_NEAR(b.gss_optics_m, 4.5e-7 * 5e5 / 0.05, 1e-12);
  EXPECT_NEAR(b.nu_optcut, 1.0 / (4.5e-7 * 10.0), 1e-6);
  EXPECT_NEAR(b.nu_nyquist, 1.0 / 12e-6, 1e-6);
  EXPECT_NEAR(b.nu_nyquist_gnd, 1.0 / 12.0, 1e-12);
  EXPECT_FALSE(b.oversampled);
  EXPECT_DOUBLE_EQ(b.nu_cutoff, b.nu_optcut);
  // Ground and focal-plane frequencies differ by H/f.
  EXPECT_NEAR(b.nu_nyquist_gnd * 5e5 / 0.5, b.nu_nyquist, 1e-6);
}

TEST(Optics, QTwoCountsAsOversampled) {
  auto c = baseline_sensor(0.8, 0.03);
  const auto b = optics::frequency_budget(c);
  EXPECT_NEAR(b.q, 2.0, 1e-12);
  EXPECT_TRUE(b.oversampled);
  EXPECT_DOUBLE_EQ(b.nu_cutoff, b.nu_nyquist);
  EXPECT_FALSE(optics::frequency_budget(baseline_sensor(0.79, 0.03)).oversampled);
  EXPECT_TRUE(optics::frequency_budget(baseline_sensor(0.81, 0.03)).oversampled);
}

TEST(Optics, AnalyticMtfValues) {
  EXPECT_DOUBLE_EQ(optics::analytic_circular_mtf(0.0), 1.0);
  EXPECT_DOUBLE_EQ(optics::analytic_circular_mtf(1.0), 0.0);
  EXPECT_DOUBLE_EQ(optics::analytic_circular_mtf(1.5), 0.0);
  const double x = 0.5;
  EXPECT_NEAR(optics::analytic_circular_mtf(x), 2.0 / M_PI * (std::acos(x) - x * std::sqrt(1 - x * x)), 1e-15);
  EXPECT_NEAR(optics::analytic_circular_mtf(0.5), 0.391002218955771, 1e-12);
}

TEST(Optics, NumericalMtfMatchesAnalytic) {
  const auto c = baseline_sensor(0.37, 0.062);
  const auto budget = optics::frequency_budget(c);
  std::vector<double> axis;
  for (int i = -60; i <= 60; ++i) axis.push_back(budget.nu_optcut * i / 60.0);
  const auto tf = optics::system_mtf(c, 0, axis);
  double sq = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < axis.size(); ++r)
    for (std::size_t k = 0; k < axis.size(); ++k) {
      const double rho = std::hypot(axis[r], axis[k]) / tf.cutoff;
      if (rho > 1.0) continue;
      const double d = tf.values(r, k) - optics::analytic_circular_mtf(rho);
      sq += d * d;
      ++n;
    }
  EXPECT_LT(std::sqrt(sq / n), 1e-3);
  EXPECT_NEAR(tf.values(60, 60), 1.0, 0.0);
}

TEST(Optics, MtfIsRadialAndZeroBeyondCutoff) {
  const auto c = baseline_sensor(0.5, 0.05);
  const auto model = optics::mtf_model(10.0, 4.5e-7);
  const double nu = 0.4 * model->cutoff();
  EXPECT_NEAR((*model)(nu, 0.0), (*model)(0.0, nu), 1e-3);
  EXPECT_NEAR((*model)(nu / std::sqrt(2.0), nu / std::sqrt(2.0)), (*model)(nu, 0.0), 2e-3);
  EXPECT_EQ((*model)(model->cutoff() * 1.01, 0.0), 0.0);
  EXPECT_EQ(optics::mtf_model(10.0, 4.5e-7).get(), model.get());
  (void)c;
}

TEST(Optics, GroundMtfScalesByAltitudeOverFocalLength) {
  const auto c = baseline_sensor(0.5, 0.05);
  const std::vector<double> gnd{0.0, 0.05, 0.1, 0.2};
  const auto tf = optics::ground_mtf(c, 0, gnd, gnd);
  EXPECT_NEAR(tf.cutoff, 0.05 / (4.5e-7 * 5e5), 1e-12);
  const auto model = optics::mtf_model(10.0, 4.5e-7);
  EXPECT_DOUBLE_EQ(tf.values(0, 2), (*model)(0.0, 0.1 * 1e6));
  EXPECT_EQ(tf.values(3, 3), 0.0);
}
