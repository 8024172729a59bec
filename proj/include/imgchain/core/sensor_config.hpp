#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/error.hpp"
#include "imgchain/hash.hpp"

namespace imgchain {

/// Spectral properties of one sensor band.
struct BandSpec {
  std::string name;
  double center_wavelength_m = 0.0;
  double spectral_bandwidth_m = 0.0;
  double optical_transmission = 0.0;
  double quantum_efficiency = 0.0;

  friend bool operator==(const BandSpec&, const BandSpec&) = default;
};

/// Parameters of the modeled sensor. Bands are listed in the image's band order.
struct SensorConfig {
  double focal_length_m = 0.0;
  double aperture_diameter_m = 0.0;
  double pixel_pitch_m = 0.0;
  double altitude_m = 0.0;
  double integration_time_s = 0.0;
  double read_noise_e = 0.0;
  double well_depth_e = 0.0;
  int bit_depth = 0;
  std::vector<BandSpec> bands;

  std::size_t band_count() const noexcept { return bands.size(); }

  double shortest_wavelength_m() const {
    require(!bands.empty(), "sensor config has no bands");
    double m = bands.front().center_wavelength_m;
    for (const auto& b : bands) m = std::min(m, b.center_wavelength_m);
    return m;
  }

  std::size_t shortest_wavelength_band() const {
    require(!bands.empty(), "sensor config has no bands");
    std::size_t best = 0;
    for (std::size_t i = 1; i < bands.size(); ++i)
      if (bands[i].center_wavelength_m < bands[best].center_wavelength_m) best = i;
    return best;
  }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string("sensor config: ") + what + " must be positive");
    };
    positive(focal_length_m, "focal_length_m");
    positive(aperture_diameter_m, "aperture_diameter_m");
    positive(pixel_pitch_m, "pixel_pitch_m");
    positive(altitude_m, "altitude_m");
    positive(integration_time_s, "integration_time_s");
    positive(read_noise_e, "read_noise_e");
    positive(well_depth_e, "well_depth_e");
    require(bit_depth >= 1 && bit_depth <= 16, "sensor config: bit_depth must be in [1, 16]");
    require(!bands.empty(), "sensor config: at least one band required");
    for (const auto& b : bands) {
      positive(b.center_wavelength_m, "center_wavelength_m");
      positive(b.spectral_bandwidth_m, "spectral_bandwidth_m");
      require(b.optical_transmission > 0.0 && b.optical_transmission <= 1.0,
              "sensor config: optical_transmission must be in (0, 1]");
      require(b.quantum_efficiency > 0.0 && b.quantum_efficiency <= 1.0,
              "sensor config: quantum_efficiency must be in (0, 1]");
    }
  }

  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

inline nlohmann::json to_json(const SensorConfig& c) {
  nlohmann::json j;
  j["focal_length_m"] = c.focal_length_m;
  j["aperture_diameter_m"] = c.aperture_diameter_m;
  j["pixel_pitch_m"] = c.pixel_pitch_m;
  j["altitude_m"] = c.altitude_m;
  j["integration_time_s"] = c.integration_time_s;
  j["read_noise_e"] = c.read_noise_e;
  j["well_depth_e"] = c.well_depth_e;
  j["bit_depth"] = c.bit_depth;
  j["bands"] = nlohmann::json::array();
  for (const auto& b : c.bands) {
    j["bands"].push_back({{"name", b.name},
                          {"center_wavelength_m", b.center_wavelength_m},
                          {"spectral_bandwidth_m", b.spectral_bandwidth_m},
                          {"optical_transmission", b.optical_transmission},
                          {"quantum_efficiency", b.quantum_efficiency}});
  }
  return j;
}

inline SensorConfig sensor_config_from_json(const nlohmann::json& j) {
  SensorConfig c;
  try {
    c.focal_length_m = j.at("focal_length_m").get<double>();
    c.aperture_diameter_m = j.at("aperture_diameter_m").get<double>();
    c.pixel_pitch_m = j.at("pixel_pitch_m").get<double>();
    c.altitude_m = j.at("altitude_m").get<double>();
    c.integration_time_s = j.at("integration_time_s").get<double>();
    c.read_noise_e = j.at("read_noise_e").get<double>();
    c.well_depth_e = j.at("well_depth_e").get<double>();
    c.bit_depth = j.at("bit_depth").get<int>();
    for (const auto& b : j.at("bands")) {
      BandSpec s;
      s.name = b.value("name", std::string{});
      s.center_wavelength_m = b.at("center_wavelength_m").get<double>();
      s.spectral_bandwidth_m = b.at("spectral_bandwidth_m").get<double>();
      s.optical_transmission = b.at("optical_transmission").get<double>();
      s.quantum_efficiency = b.at("quantum_efficiency").get<double>();
      c.bands.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("sensor config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Stable content hash of a configuration (canonical JSON, sorted keys).
inline std::uint64_t config_hash(const SensorConfig& c) { return fnv1a64(to_json(c).dump()); }

/// Parameter names accepted by sweeps.
inline SensorConfig with_parameter(SensorConfig c, const std::string& name, double value) {
  if (name == "focal_length_m" || name == "focal_length") c.focal_length_m = value;
  else if (name == "aperture_diameter_m" || name == "aperture_diameter") c.aperture_diameter_m = value;
  else if (name == "pixel_pitch_m") c.pixel_pitch_m = value;
  else if (name == "altitude_m") c.altitude_m = value;
  else if (name == "integration_time_s") c.integration_time_s = value;
  else if (name == "read_noise_e") c.read_noise_e = value;
  else if (name == "well_depth_e") c.well_depth_e = value;
  else if (name == "bit_depth") c.bit_depth = static_cast<int>(std::lround(value));
  else throw Error("unknown sweep parameter '" + name + "'");
  c.validate();
  return c;
}

/// The constant sensor of the baseline experiments (B, G, R band order), with a
/// focal length and aperture diameter to be swept.
inline SensorConfig baseline_sensor(double focal_length_m = 0.5, double aperture_diameter_m = 0.05) {
  SensorConfig c;
  c.focal_length_m = focal_length_m;
  c.aperture_diameter_m = aperture_diameter_m;
  c.pixel_pitch_m = 6e-6;
  c.altitude_m = 500e3;
  c.integration_time_s = 2.5e-4;
  c.read_noise_e = 12.5;
  c.well_depth_e = 40300;
  c.bit_depth = 13;
  // Bandwidth 0.1 um for every band.
  c.bands = {{"B", 4.5e-7, 1e-7, 0.95, 0.22}, {"G", 5.5e-7, 1e-7, 0.95, 0.22}, {"R", 6.5e-7, 1e-7, 0.95, 0.16}};
  return c;
}

/// Same sensor with bands reordered to R, G, B (the image band order).
inline SensorConfig baseline_sensor_rgb(double focal_length_m = 0.5, double aperture_diameter_m = 0.05) {
  SensorConfig c = baseline_sensor(focal_length_m, aperture_diameter_m);
  std::reverse(c.bands.begin(), c.bands.end());
  return c;
}

}  // namespace imgchain
