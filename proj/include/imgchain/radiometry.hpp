#pragma once

#include <cfenv>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "imgchain/core/image.hpp"
#include "imgchain/core/sensor_config.hpp"
#include "imgchain/optics.hpp"
#include "imgchain/rng.hpp"

namespace imgchain::radiometry {

/// Physical constants with the precision used throughout the radiometric chain.
inline constexpr double kPlanck = 6.6260e-34;       // J s
inline constexpr double kSpeedOfLight = 2.9979e8;   // m / s
inline constexpr double kMetresPerMicron = 1e-6;

/// Flux (alpha), electron (beta) and gain (G) scalars of a sensor.
///
/// Radiance is spectral radiance per micron, so alpha uses the band width in
/// microns; beta then converts W um^-1 m^-2 sr^-1 directly into electrons.
struct RadiometricScalars {
  std::vector<double> alpha;
  std::vector<double> beta;
  double gain = 0;  // electrons per DN
};

inline double flux_scalar(const SensorConfig& config, std::size_t band) {
  const auto& b = config.bands.at(band);
  const double fn = optics::f_number(config.focal_length_m, config.aperture_diameter_m);
  const double bandwidth_um = b.spectral_bandwidth_m / kMetresPerMicron;
  const double pixel_area = config.pixel_pitch_m * config.pixel_pitch_m;
  return bandwidth_um * b.optical_transmission * pixel_area * std::numbers::pi / (1.0 + 4.0 * fn * fn);
}

inline double electron_scalar(const SensorConfig& config, std::size_t band, double alpha) {
  const auto& b = config.bands.at(band);
  return b.quantum_efficiency * config.integration_time_s * alpha * b.center_wavelength_m / (kPlanck * kSpeedOfLight);
}

inline double gain(const SensorConfig& config) { return config.well_depth_e / std::ldexp(1.0, config.bit_depth); }

inline RadiometricScalars scalars(const SensorConfig& config) {
  config.validate();
  RadiometricScalars s;
  for (std::size_t b = 0; b < config.band_count(); ++b) {
    s.alpha.push_back(flux_scalar(config, b));
    s.beta.push_back(electron_scalar(config, b, s.alpha.back()));
  }
  s.gain = gain(config);
  return s;
}

/// DN -> at-aperture radiance: L = DN * abscal / effective bandwidth.
inline BandedImage dn_to_radiance(const BandedImage& image, const ImageMetadata& meta) {
  require_unit(image.unit(), Unit::DigitalNumber, "dn_to_radiance");
  if (meta.abscal_factor.size() != image.band_count() || meta.effective_bandwidth_um.size() != image.band_count())
    throw Error("dn_to_radiance: missing calibration values for some bands");
  std::vector<Raster> out;
  for (std::size_t b = 0; b < image.band_count(); ++b) {
    const double k = meta.abscal_factor[b] / meta.effective_bandwidth_um[b];
    out.push_back(image.band(b).map([k](double v) { return v * k; }));
  }
  return image.with_bands(std::move(out), Unit::AtApertureRadiance);
}

inline BandedImage radiance_to_electrons(const BandedImage& image, const std::vector<double>& beta) {
  require_unit(image.unit(), Unit::AtApertureRadiance, "radiance_to_electrons");
  require(beta.size() == image.band_count(), "radiance_to_electrons: one beta per band required");
  std::vector<Raster> out;
  for (std::size_t b = 0; b < image.band_count(); ++b)
    out.push_back(image.band(b).map([k = beta[b]](double v) { return v * k; }));
  return image.with_bands(std::move(out), Unit::Electrons);
}

enum class NoiseMode { Off, Gaussian, Poisson };

inline NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "off") return NoiseMode::Off;
  if (s == "gaussian") return NoiseMode::Gaussian;
  if (s == "poisson") return NoiseMode::Poisson;
  throw Error("unknown noise mode '" + s + "' (expected off|gaussian|poisson)");
}

inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::Off: return "off";
    case NoiseMode::Gaussian: return "gaussian";
    case NoiseMode::Poisson: return "poisson";
  }
  return "?";
}

/// Identifies the noise streams of one image: (global seed, instance id).
struct NoiseKey {
  std::uint64_t seed = 0;
  std::string instance_id;
};

/// Adds shot and read noise to an electron image. Negative electrons are
/// clamped to zero first. Gaussian mode: I + z1*sqrt(I) + z2*sigma_read.
/// Poisson mode draws the shot term exactly: Poisson(I) + z2*sigma_read.
inline BandedImage add_noise(const BandedImage& image, double read_noise_e, const NoiseKey& key,
                             NoiseMode mode = NoiseMode::Gaussian) {
  require_unit(image.unit(), Unit::Electrons, "add_noise");
  if (read_noise_e < 0.0) throw Error("add_noise: read noise must be non-negative");
  std::vector<Raster> out;
  for (std::size_t b = 0; b < image.band_count(); ++b) {
    const rng::NoiseStream stream(key.seed, key.instance_id, static_cast<std::uint32_t>(b));
    const auto src = image.band(b).values();
    Raster band(image.rows(), image.cols());
    auto dst = band.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double electrons = std::max(src[i], 0.0);
      if (mode == NoiseMode::Off) {
        dst[i] = electrons;
        continue;
      }
      const auto z = stream.normals(i);
      if (mode == NoiseMode::Gaussian) dst[i] = electrons + z[0] * std::sqrt(electrons) + z[1] * read_noise_e;
      else dst[i] = stream.poisson(i, electrons) + z[1] * read_noise_e;
    }
    out.push_back(std::move(band));
  }
  return image.with_bands(std::move(out), Unit::Electrons);
}

/// Electrons -> DN. With quantize=true: round half to even, clamp to [0, 2^n - 1]
/// (unit DigitalNumber). With quantize=false the scaled value is returned as-is
/// (unit Volts).
inline BandedImage apply_gain_quantize(const BandedImage& image, const SensorConfig& config, bool quantize = true) {
  require_unit(image.unit(), Unit::Electrons, "apply_gain_quantize");
  const double g = gain(config);
  const double max_dn = std::ldexp(1.0, config.bit_depth) - 1.0;
  std::vector<Raster> out;
  const int previous = std::fegetround();
  std::fesetround(FE_TONEAREST);
  for (const auto& band : image.bands()) {
    out.push_back(band.map([&](double e) {
      const double v = e / g;
      return quantize ? std::clamp(std::nearbyint(v), 0.0, max_dn) : v;
    }));
  }
  std::fesetround(previous);
  return image.with_bands(std::move(out), quantize ? Unit::DigitalNumber : Unit::Volts);
}

/// Simulated DN -> radiance: L = DN * G / beta (inverse of the forward chain).
inline BandedImage back_to_radiance(const BandedImage& image, const RadiometricScalars& s) {
  if (image.unit() != Unit::DigitalNumber && image.unit() != Unit::Volts)
    throw Error("back_to_radiance expects unit DigitalNumber or Volts but image is " + std::string(unit_name(image.unit())));
  require(s.beta.size() == image.band_count(), "back_to_radiance: one beta per band required");
  std::vector<Raster> out;
  for (std::size_t b = 0; b < image.band_count(); ++b)
    out.push_back(image.band(b).map([k = s.gain / s.beta[b]](double v) { return v * k; }));
  return image.with_bands(std::move(out), Unit::AtApertureRadiance);
}

/// Radiance -> TOA reflectance: rho = pi * L * d^2 / (Esun * cos(theta_s)).
inline BandedImage toa_reflectance(const BandedImage& image, const ImageMetadata& meta, bool clamp_unit_interval = false) {
  require_unit(image.unit(), Unit::AtApertureRadiance, "toa_reflectance");
  if (!(meta.solar_zenith_deg >= 0.0 && meta.solar_zenith_deg < 90.0))
    throw Error("toa_reflectance: solar zenith must be in [0, 90) degrees");
  require(meta.esun.size() == image.band_count(), "toa_reflectance: one Esun per band required");
  const double cos_theta = std::cos(meta.solar_zenith_deg * std::numbers::pi / 180.0);
  const double d2 = meta.earth_sun_distance_au * meta.earth_sun_distance_au;
  std::vector<Raster> out;
  for (std::size_t b = 0; b < image.band_count(); ++b) {
    const double k = std::numbers::pi * d2 / (meta.esun[b] * cos_theta);
    out.push_back(image.band(b).map([&](double v) {
      const double rho = v * k;
      return clamp_unit_interval ? std::clamp(rho, 0.0, 1.0) : rho;
    }));
  }
  return image.with_bands(std::move(out), Unit::ToaReflectance);
}

}  // namespace imgchain::radiometry
