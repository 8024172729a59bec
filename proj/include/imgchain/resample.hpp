#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "imgchain/core/image.hpp"
#include "imgchain/core/raster.hpp"

namespace imgchain::resample {

/// Bilinear resample of a source window onto an out_rows x out_cols grid.
/// Pixel centres are aligned (half-pixel convention); samples outside the
/// source clamp to the nearest edge pixel.
inline Raster bilinear(const Raster& src, std::size_t out_rows, std::size_t out_cols, double y0, double x0, double y1,
                       double x1) {
  require(!src.empty(), "bilinear: empty source");
  require(out_rows > 0 && out_cols > 0, "bilinear: empty target");
  require(y1 > y0 && x1 > x0, "bilinear: empty source window");
  Raster out(out_rows, out_cols);
  const double sy = (y1 - y0) / static_cast<double>(out_rows);
  const double sx = (x1 - x0) / static_cast<double>(out_cols);
  const auto max_r = static_cast<double>(src.rows() - 1);
  const auto max_c = static_cast<double>(src.cols() - 1);
  std::vector<std::size_t> c0(out_cols), c1(out_cols);
  std::vector<double> tx(out_cols);
  for (std::size_t c = 0; c < out_cols; ++c) {
    const double x = std::clamp(x0 + (static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_c);
    c0[c] = static_cast<std::size_t>(std::floor(x));
    c1[c] = std::min(c0[c] + 1, src.cols() - 1);
    tx[c] = x - static_cast<double>(c0[c]);
  }
  for (std::size_t r = 0; r < out_rows; ++r) {
    const double y = std::clamp(y0 + (static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_r);
    const auto r0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t r1 = std::min(r0 + 1, src.rows() - 1);
    const double ty = y - static_cast<double>(r0);
    for (std::size_t c = 0; c < out_cols; ++c) {
      const double top = (1 - tx[c]) * src(r0, c0[c]) + tx[c] * src(r0, c1[c]);
      const double bottom = (1 - tx[c]) * src(r1, c0[c]) + tx[c] * src(r1, c1[c]);
      out(r, c) = (1 - ty) * top + ty * bottom;
    }
  }
  return out;
}

inline Raster bilinear(const Raster& src, std::size_t out_rows, std::size_t out_cols) {
  if (src.rows() == out_rows && src.cols() == out_cols) return src;
  return bilinear(src, out_rows, out_cols, 0.0, 0.0, static_cast<double>(src.rows()), static_cast<double>(src.cols()));
}

/// out_rows x out_cols window whose top-left source pixel is (top, left);
/// positions outside the source are zero.
inline Raster window(const Raster& src, std::ptrdiff_t top, std::ptrdiff_t left, std::size_t out_rows,
                     std::size_t out_cols) {
  Raster out(out_rows, out_cols);
  const auto rows = static_cast<std::ptrdiff_t>(src.rows()), cols = static_cast<std::ptrdiff_t>(src.cols());
  for (std::size_t r = 0; r < out_rows; ++r) {
    const std::ptrdiff_t sr = top + static_cast<std::ptrdiff_t>(r);
    if (sr < 0 || sr >= rows) continue;
    for (std::size_t c = 0; c < out_cols; ++c) {
      const std::ptrdiff_t sc = left + static_cast<std::ptrdiff_t>(c);
      if (sc >= 0 && sc < cols) out(r, c) = src(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
    }
  }
  return out;
}

/// Index reflected about the edge samples (numpy "reflect": d c b | a b c d | c b a).
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

inline Raster reflect_pad(const Raster& src, std::size_t margin) {
  Raster out(src.rows() + 2 * margin, src.cols() + 2 * margin);
  const auto m = static_cast<std::ptrdiff_t>(margin);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const std::size_t sr = reflect_index(static_cast<std::ptrdiff_t>(r) - m, src.rows());
    for (std::size_t c = 0; c < out.cols(); ++c)
      out(r, c) = src(sr, reflect_index(static_cast<std::ptrdiff_t>(c) - m, src.cols()));
  }
  return out;
}

inline Raster clip_margin(const Raster& src, std::size_t margin) {
  require(src.rows() > 2 * margin && src.cols() > 2 * margin, "clip_margin: margin exceeds raster");
  return window(src, static_cast<std::ptrdiff_t>(margin), static_cast<std::ptrdiff_t>(margin), src.rows() - 2 * margin,
                src.cols() - 2 * margin);
}

template <typename F>
BandedImage map_bands(const BandedImage& image, F&& f, GroundSampling gsd) {
  std::vector<Raster> out;
  for (const auto& band : image.bands()) out.push_back(f(band));
  return image.with_bands(std::move(out), image.unit(), gsd);
}

}  // namespace imgchain::resample
