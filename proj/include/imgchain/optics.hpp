#pragma once

#include <cmath>
#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "imgchain/core/raster.hpp"
#include "imgchain/core/sensor_config.hpp"
#include "imgchain/fft.hpp"

namespace imgchain::optics {

inline double f_number(double focal_length_m, double aperture_diameter_m) {
  require(focal_length_m > 0.0 && aperture_diameter_m > 0.0, "f_number: focal length and diameter must be positive");
  return focal_length_m / aperture_diameter_m;
}

/// Optical Q = lambda_min * FN / p.
inline double optical_q(double shortest_wavelength_m, double fn, double pixel_pitch_m) {
  require(shortest_wavelength_m > 0.0 && fn > 0.0 && pixel_pitch_m > 0.0, "optical_q: inputs must be positive");
  return shortest_wavelength_m * fn / pixel_pitch_m;
}

/// Derived sampling and cutoff frequencies of a sensor configuration.
/// Image-plane frequencies in cycles/m at the focal plane; *_gnd in cycles/m on the ground.
struct FrequencyBudget {
  double fn = 0;
  double q = 0;
  double gsd_m = 0;
  double gss_optics_m = 0;
  double nu_optcut = 0;
  double nu_optcut_gnd = 0;
  double nu_nyquist = 0;
  double nu_nyquist_gnd = 0;
  double nu_cutoff = 0;
  double nu_cutoff_gnd = 0;
  bool oversampled = false;
};

/// Q within this relative distance of 2 is treated as the Nyquist-matched tie.
inline constexpr double kQTieTolerance = 1e-12;

inline FrequencyBudget frequency_budget(const SensorConfig& config) {
  config.validate();
  const double lambda = config.shortest_wavelength_m();
  FrequencyBudget b;
  b.fn = f_number(config.focal_length_m, config.aperture_diameter_m);
  b.q = optical_q(lambda, b.fn, config.pixel_pitch_m);
  b.gsd_m = config.pixel_pitch_m * config.altitude_m / config.focal_length_m;
  b.gss_optics_m = lambda * config.altitude_m / config.aperture_diameter_m;
  b.nu_optcut = 1.0 / (lambda * b.fn);
  b.nu_optcut_gnd = config.aperture_diameter_m / (2.0 * lambda * config.altitude_m);
  b.nu_nyquist = 1.0 / (2.0 * config.pixel_pitch_m);
  b.nu_nyquist_gnd = 1.0 / (2.0 * b.gsd_m);
  const bool tie = std::abs(b.q - 2.0) <= kQTieTolerance * 2.0;
  if (b.nu_optcut > b.nu_nyquist && !tie) {
    b.nu_cutoff = b.nu_optcut;
    b.nu_cutoff_gnd = b.nu_optcut_gnd;
    b.oversampled = false;
  } else {
    b.nu_cutoff = b.nu_nyquist;
    b.nu_cutoff_gnd = b.nu_nyquist_gnd;
    b.oversampled = true;
  }
  return b;
}

inline nlohmann::json to_json(const FrequencyBudget& b) {
  return {{"fn", b.fn},
          {"q", b.q},
          {"gsd_m", b.gsd_m},
          {"gss_optics_m", b.gss_optics_m},
          {"nu_optcut", b.nu_optcut},
          {"nu_optcut_gnd", b.nu_optcut_gnd},
          {"nu_nyquist", b.nu_nyquist},
          {"nu_nyquist_gnd", b.nu_nyquist_gnd},
          {"nu_cutoff", b.nu_cutoff},
          {"nu_cutoff_gnd", b.nu_cutoff_gnd},
          {"oversampled", b.oversampled}};
}

/// Diffraction-limited MTF of a circular aperture at x = nu / nu_optcut.
inline double analytic_circular_mtf(double x) {
  x = std::abs(x);
  if (x >= 1.0) return 0.0;
  return 2.0 / std::numbers::pi * (std::acos(x) - x * std::sqrt(1.0 - x * x));
}

/// Square complex grid, row-major, centre at index grid/2.
struct ComplexField {
  std::size_t size = 0;
  std::vector<fft::Complex> values;

  fft::Complex operator()(std::size_t r, std::size_t c) const { return values[r * size + c]; }
};

/// Scaled pupil sampled on a frequency grid with `sample_pitch` cycles/m per
/// sample: 1+0i inside radius 1/(2*lambda*FN), 0 outside. The grid must be at
/// least twice the pupil diameter so its autocorrelation does not wrap.
inline ComplexField pupil_function(std::size_t grid_size, double fn, double wavelength_m, double sample_pitch) {
  require(fn > 0.0 && wavelength_m > 0.0 && sample_pitch > 0.0, "pupil_function: inputs must be positive");
  const double radius = 1.0 / (2.0 * wavelength_m * fn * sample_pitch);  // in samples
  if (grid_size < 2 || static_cast<double>(grid_size) < 4.0 * radius + 1.0)
    throw Error("pupil_function: grid of " + std::to_string(grid_size) + " samples is too small for a pupil of diameter " +
                std::to_string(2.0 * radius) + " samples");
  ComplexField field{grid_size, std::vector<fft::Complex>(grid_size * grid_size)};
  const double centre = static_cast<double>(grid_size / 2);
  const double r2 = radius * radius;
  for (std::size_t r = 0; r < grid_size; ++r) {
    const double dy = static_cast<double>(r) - centre;
    for (std::size_t c = 0; c < grid_size; ++c) {
      const double dx = static_cast<double>(c) - centre;
      if (dx * dx + dy * dy <= r2) field.values[r * grid_size + c] = {1.0, 0.0};
    }
  }
  return field;
}

/// Sampled transfer function on centred frequency axes.
struct TransferFunction {
  Raster values;
  std::vector<double> axis_y;  // cycles/m
  std::vector<double> axis_x;
  double band_wavelength_m = 0;
  double cutoff = 0;  // same units as the axes
};

/// Native MTF grid for one (FN, wavelength): the normalized autocorrelation of
/// the sampled pupil, computed once and shared read-only.
class MtfModel {
 public:
  MtfModel(double fn, double wavelength_m, std::size_t grid_size)
      : fn_(fn), wavelength_(wavelength_m), grid_(grid_size) {
    require(grid_size >= 16, "MTF grid must have at least 16 samples");
    cutoff_ = 1.0 / (wavelength_m * fn);
    // Cutoff spans (grid - 4) / 2 samples: the autocorrelation support stays
    // strictly inside the grid.
    pitch_ = 2.0 * cutoff_ / static_cast<double>(grid_size - 4);
    auto field = pupil_function(grid_size, fn, wavelength_m, pitch_).values;
    // Autocorrelation via |IDFT(pupil)|^2 -> DFT.
    auto data = fft::unshift(field, grid_size, grid_size);
    fft::transform(data, grid_size, grid_size, fft::Direction::Inverse);
    for (auto& v : data) v = std::norm(v);
    fft::transform(data, grid_size, grid_size, fft::Direction::Forward);
    data = fft::shift(data, grid_size, grid_size);
    const std::size_t mid = grid_size / 2;
    const double dc = data[mid * grid_size + mid].real();
    require(dc > 0.0, "MTF: degenerate pupil");
    values_ = Raster(grid_size, grid_size);
    for (std::size_t r = 0; r < grid_size; ++r)
      for (std::size_t c = 0; c < grid_size; ++c) {
        const double fy = (static_cast<double>(r) - static_cast<double>(mid)) * pitch_;
        const double fx = (static_cast<double>(c) - static_cast<double>(mid)) * pitch_;
        double v = std::abs(data[r * grid_size + c]) / dc;
        if (std::hypot(fy, fx) >= cutoff_) v = 0.0;
        values_(r, c) = std::clamp(v, 0.0, 1.0);
      }
    values_(mid, mid) = 1.0;
  }

  double cutoff() const noexcept { return cutoff_; }
  double pitch() const noexcept { return pitch_; }
  double wavelength() const noexcept { return wavelength_; }
  double fn() const noexcept { return fn_; }
  const Raster& grid() const noexcept { return values_; }

  /// Bilinear lookup at image-plane frequency (fy, fx); zero at and beyond the cutoff.
  double operator()(double fy, double fx) const {
    if (std::hypot(fy, fx) >= cutoff_) return 0.0;
    const double mid = static_cast<double>(grid_ / 2);
    const double gy = fy / pitch_ + mid, gx = fx / pitch_ + mid;
    const auto y0 = static_cast<std::ptrdiff_t>(std::floor(gy)), x0 = static_cast<std::ptrdiff_t>(std::floor(gx));
    const double ty = gy - static_cast<double>(y0), tx = gx - static_cast<double>(x0);
    auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) -> double {
      if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(grid_) || c >= static_cast<std::ptrdiff_t>(grid_)) return 0.0;
      return values_(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    return (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x0 + 1)) + ty * ((1 - tx) * at(y0 + 1, x0) + tx * at(y0 + 1, x0 + 1));
  }

 private:
  double fn_, wavelength_;
  std::size_t grid_;
  double cutoff_ = 0, pitch_ = 0;
  Raster values_;
};

inline constexpr std::size_t kDefaultMtfGrid = 512;

/// Process-wide cache of MTF grids keyed by (FN, wavelength, grid size).
inline std::shared_ptr<const MtfModel> mtf_model(double fn, double wavelength_m, std::size_t grid = kDefaultMtfGrid) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, std::size_t>, std::shared_ptr<const MtfModel>> cache;
  const auto key = std::make_tuple(fn, wavelength_m, grid);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto model = std::make_shared<const MtfModel>(fn, wavelength_m, grid);
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(model)).first->second;
}

/// Optics-only system MTF of one band, sampled on centred image-plane axes.
inline TransferFunction system_mtf(const SensorConfig& config, std::size_t band_index, const std::vector<double>& axis_y,
                                   const std::vector<double>& axis_x, std::size_t grid = kDefaultMtfGrid) {
  require(band_index < config.band_count(), "system_mtf: band index out of range");
  const double lambda = config.bands[band_index].center_wavelength_m;
  auto model = mtf_model(f_number(config.focal_length_m, config.aperture_diameter_m), lambda, grid);
  TransferFunction tf{Raster(axis_y.size(), axis_x.size()), axis_y, axis_x, lambda, model->cutoff()};
  for (std::size_t r = 0; r < axis_y.size(); ++r)
    for (std::size_t c = 0; c < axis_x.size(); ++c) tf.values(r, c) = (*model)(axis_y[r], axis_x[c]);
  return tf;
}

inline TransferFunction system_mtf(const SensorConfig& config, std::size_t band_index, const std::vector<double>& axis,
                                   std::size_t grid = kDefaultMtfGrid) {
  return system_mtf(config, band_index, axis, axis, grid);
}

/// System MTF evaluated on ground-frequency axes. A ground frequency maps to
/// the focal plane by the scale H/f, so the ground cutoff is D/(lambda*H).
inline TransferFunction ground_mtf(const SensorConfig& config, std::size_t band_index, const std::vector<double>& axis_y_gnd,
                                   const std::vector<double>& axis_x_gnd, std::size_t grid = kDefaultMtfGrid) {
  const double scale = config.altitude_m / config.focal_length_m;
  std::vector<double> ay(axis_y_gnd), ax(axis_x_gnd);
  for (auto& v : ay) v *= scale;
  for (auto& v : ax) v *= scale;
  auto tf = system_mtf(config, band_index, ay, ax, grid);
  tf.axis_y = axis_y_gnd;
  tf.axis_x = axis_x_gnd;
  tf.cutoff /= scale;
  return tf;
}

/// Transfer function identically 1 on the given axes (used to disable blur).
inline TransferFunction unit_transfer_function(const std::vector<double>& axis_y, const std::vector<double>& axis_x) {
  return {Raster(axis_y.size(), axis_x.size(), 1.0), axis_y, axis_x, 0.0, std::numeric_limits<double>::infinity()};
}

}  // namespace imgchain::optics
