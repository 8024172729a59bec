#pragma once

#include <cmath>
#include <vector>

#include "imgchain/core/image.hpp"
#include "imgchain/fft.hpp"
#include "imgchain/optics.hpp"

namespace imgchain::fourier {

using fft::Complex;

/// DC-centred discrete spectrum of one band with ground-frequency axes.
///
/// Bin k along an axis of N samples sits at (k - floor(N/2)) / extent cycles/m.
/// Values are the unnormalized DFT of the raster, so the DC bin holds N * mean.
struct Spectrum {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> values;
  std::vector<double> axis_y;
  std::vector<double> axis_x;
  double extent_y_m = 0;
  double extent_x_m = 0;

  Complex& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  Complex operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  Complex dc() const { return (*this)(rows / 2, cols / 2); }

  double energy() const {
    double e = 0;
    for (const auto& v : values) e += std::norm(v);
    return e;
  }
};

/// Frequency samples -nu ... nu - 2nu/N with nu = 1/(2*gsd) (half-open, DC at floor(N/2)).
inline std::vector<double> dg_frequency_axis(double gsd_m, std::size_t n_samples) {
  require(gsd_m > 0.0, "frequency axis: gsd must be positive");
  require(n_samples >= 2, "frequency axis: at least two samples required");
  const double nu = 1.0 / (2.0 * gsd_m);
  const double step = 2.0 * nu / static_cast<double>(n_samples);
  const auto half = static_cast<std::ptrdiff_t>(n_samples / 2);
  std::vector<double> axis(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) axis[k] = static_cast<double>(static_cast<std::ptrdiff_t>(k) - half) * step;
  return axis;
}

namespace detail {

inline std::vector<double> axis_for(std::size_t n, double extent_m) {
  if (n < 2) return std::vector<double>(n, 0.0);
  return dg_frequency_axis(extent_m / static_cast<double>(n), n);
}

}  // namespace detail

inline Spectrum forward_spectrum(const Raster& band, GroundSampling gsd) {
  require(!band.empty(), "forward_spectrum: empty raster");
  if (!band.all_finite()) throw Error("forward_spectrum: raster contains NaN or Inf");
  Spectrum s;
  s.rows = band.rows();
  s.cols = band.cols();
  s.extent_y_m = gsd.row_m * static_cast<double>(s.rows);
  s.extent_x_m = gsd.col_m * static_cast<double>(s.cols);
  std::vector<Complex> data(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) data[i] = band.values()[i];
  fft::transform(data, s.rows, s.cols, fft::Direction::Forward);
  s.values = fft::shift(data, s.rows, s.cols);
  s.axis_y = detail::axis_for(s.rows, s.extent_y_m);
  s.axis_x = detail::axis_for(s.cols, s.extent_x_m);
  return s;
}

inline Spectrum forward_spectrum(const Raster& band, double gsd_m) {
  return forward_spectrum(band, GroundSampling::isotropic(gsd_m));
}

/// Relative imaginary energy above which an inverse transform is rejected.
inline constexpr double kHermitianTolerance = 1e-9;

inline Raster inverse_spectrum(const Spectrum& s) {
  require(s.values.size() == s.rows * s.cols && !s.values.empty(), "inverse_spectrum: malformed spectrum");
  auto data = fft::unshift(s.values, s.rows, s.cols);
  fft::transform(data, s.rows, s.cols, fft::Direction::Inverse);
  const double scale = 1.0 / static_cast<double>(s.rows * s.cols);
  double real_energy = 0, imag_energy = 0;
  Raster out(s.rows, s.cols);
  auto dst = out.values();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Complex v = data[i] * scale;
    real_energy += v.real() * v.real();
    imag_energy += v.imag() * v.imag();
    dst[i] = v.real();
  }
  const double total = real_energy + imag_energy;
  if (total > 0 && imag_energy > kHermitianTolerance * total)
    throw Error("inverse_spectrum: spectrum is not Hermitian (imaginary energy fraction " +
                std::to_string(imag_energy / total) + ")");
  return out;
}

namespace detail {

inline bool axes_match(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    if (std::abs(a[i] - b[i]) > 1e-9 * scale) return false;
  }
  return true;
}

}  // namespace detail

/// Elementwise product with a transfer function sampled on the same axes.
inline Spectrum apply_mtf(Spectrum s, const optics::TransferFunction& tf) {
  if (!detail::axes_match(s.axis_y, tf.axis_y) || !detail::axes_match(s.axis_x, tf.axis_x))
    throw Error("apply_mtf: transfer function axes do not match spectrum axes");
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 0; c < s.cols; ++c) s(r, c) *= tf.values(r, c);
  return s;
}

namespace detail {

struct FoldTarget {
  std::size_t dest;
  double weight;
};

/// Per-axis mapping from source bins to output bins. Even-length sources
/// split their unpaired -N/2 bin equally between -N/2 and +N/2.
inline std::vector<std::vector<FoldTarget>> fold_map(std::size_t n, std::size_t m, bool discard_out_of_band) {
  const auto half_n = static_cast<std::ptrdiff_t>(n / 2);
  const auto half_m = static_cast<std::ptrdiff_t>(m / 2);
  const auto mm = static_cast<std::ptrdiff_t>(m);
  // A crop to m bins keeps |freq| <= floor(m/2); for even m both +-m/2 land on one bin.
  const std::ptrdiff_t keep_hi = half_m;
  const std::ptrdiff_t keep_lo = -half_m;
  std::vector<std::vector<FoldTarget>> map(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::ptrdiff_t kappa = static_cast<std::ptrdiff_t>(k) - half_n;
    std::vector<std::pair<std::ptrdiff_t, double>> parts;
    if (n % 2 == 0 && kappa == -half_n && n > 1) parts = {{-half_n, 0.5}, {half_n, 0.5}};
    else parts = {{kappa, 1.0}};
    for (auto [freq, w] : parts) {
      if (discard_out_of_band && (freq < keep_lo || freq > keep_hi)) continue;
      std::ptrdiff_t dest = (freq + half_m) % mm;
      if (dest < 0) dest += mm;
      map[k].push_back({static_cast<std::size_t>(dest), w});
    }
  }
  return map;
}

}  // namespace detail

/// Resamples a spectrum onto an out_rows x out_cols grid spanning the same
/// extent. With discard_out_of_band=false content beyond the output Nyquist is
/// summed onto its aliases (tiled summation, identical to spatial decimation of
/// the band-limited interpolant); with true it is dropped (pure crop).
inline Spectrum fold_spectrum(const Spectrum& s, std::size_t out_rows, std::size_t out_cols, bool discard_out_of_band) {
  require(out_rows >= 1 && out_cols >= 1, "fold_spectrum: empty output grid");
  const auto map_y = detail::fold_map(s.rows, out_rows, discard_out_of_band);
  const auto map_x = detail::fold_map(s.cols, out_cols, discard_out_of_band);
  // Fold along y, then x.
  std::vector<Complex> tmp(out_rows * s.cols);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (const auto& t : map_y[r])
      for (std::size_t c = 0; c < s.cols; ++c) tmp[t.dest * s.cols + c] += t.weight * s(r, c);
  Spectrum out;
  out.rows = out_rows;
  out.cols = out_cols;
  out.extent_y_m = s.extent_y_m;
  out.extent_x_m = s.extent_x_m;
  out.values.assign(out_rows * out_cols, Complex{});
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < s.cols; ++c)
      for (const auto& t : map_x[c]) out.values[r * out_cols + t.dest] += t.weight * tmp[r * s.cols + c];
  const double scale = static_cast<double>(out_rows * out_cols) / static_cast<double>(s.rows * s.cols);
  if (scale != 1.0)
    for (auto& v : out.values) v *= scale;
  out.axis_y = detail::axis_for(out_rows, out.extent_y_m);
  out.axis_x = detail::axis_for(out_cols, out.extent_x_m);
  return out;
}

/// Output grid size for a footprint resampled to target_gsd.
inline std::size_t resampled_size(double extent_m, double target_gsd_m) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(extent_m / target_gsd_m)));
}

/// Resamples a (filtered) ground spectrum onto the detector grid of the
/// budget's sensor. Undersampled systems fold aliased content; oversampled
/// systems crop.
inline Spectrum resample_with_alias(const Spectrum& s, const optics::FrequencyBudget& budget, double target_gsd_m) {
  require(target_gsd_m > 0.0, "resample_with_alias: target gsd must be positive");
  const double src_gsd_y = s.extent_y_m / static_cast<double>(s.rows);
  const double src_gsd_x = s.extent_x_m / static_cast<double>(s.cols);
  const double tol = 1e-12;
  if (target_gsd_m < src_gsd_y * (1 - tol) || target_gsd_m < src_gsd_x * (1 - tol))
    throw Error("resample_with_alias: cannot super-resolve (target gsd " + std::to_string(target_gsd_m) +
                " m is finer than source gsd " + std::to_string(std::min(src_gsd_y, src_gsd_x)) + " m)");
  const std::size_t out_rows = std::min(s.rows, resampled_size(s.extent_y_m, target_gsd_m));
  const std::size_t out_cols = std::min(s.cols, resampled_size(s.extent_x_m, target_gsd_m));
  return fold_spectrum(s, out_rows, out_cols, /*discard_out_of_band=*/budget.oversampled);
}

}  // namespace imgchain::fourier
