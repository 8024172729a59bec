#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imgchain/core/raster.hpp"
#include "imgchain/error.hpp"

namespace imgchain {

/// Physical unit carried by every band of a BandedImage.
/// The numeric codes are the ones stored in BIMG files.
enum class Unit : std::uint8_t {
  DigitalNumber = 0,
  AtApertureRadiance = 1,  // W um^-1 m^-2 sr^-1
  Electrons = 2,
  Volts = 3,
  ToaReflectance = 4,
};

inline std::string_view unit_name(Unit u) {
  switch (u) {
    case Unit::DigitalNumber: return "DigitalNumber";
    case Unit::AtApertureRadiance: return "AtApertureRadiance";
    case Unit::Electrons: return "Electrons";
    case Unit::Volts: return "Volts";
    case Unit::ToaReflectance: return "ToaReflectance";
  }
  return "Unknown";
}

inline Unit unit_from_code(std::uint8_t code) {
  if (code > static_cast<std::uint8_t>(Unit::ToaReflectance))
    throw Error("unknown unit code " + std::to_string(code));
  return static_cast<Unit>(code);
}

inline void require_unit(Unit actual, Unit expected, std::string_view operation) {
  if (actual != expected)
    throw Error(std::string(operation) + " expects unit " + std::string(unit_name(expected)) +
                " but image is " + std::string(unit_name(actual)));
}

/// Ground sampling of one pixel along each axis, in metres.
struct GroundSampling {
  double row_m = 1.0;
  double col_m = 1.0;

  static GroundSampling isotropic(double gsd) { return {gsd, gsd}; }
  bool is_isotropic() const noexcept { return row_m == col_m; }
  friend bool operator==(const GroundSampling&, const GroundSampling&) = default;
};

/// Multi-band raster with a physical unit and ground sampling. Immutable once built.
class BandedImage {
 public:
  BandedImage() = default;

  BandedImage(std::vector<Raster> bands, Unit unit, GroundSampling gsd,
              std::vector<std::string> band_names = {})
      : bands_(std::move(bands)), unit_(unit), gsd_(gsd), band_names_(std::move(band_names)) {
    require(!bands_.empty(), "image has no bands");
    for (const auto& b : bands_) {
      require(b.same_shape(bands_.front()), "band dimension mismatch");
      require(!b.empty(), "image band is empty");
    }
    require(gsd_.row_m > 0.0 && gsd_.col_m > 0.0, "gsd_m_per_px must be positive");
    if (band_names_.empty()) {
      for (std::size_t i = 0; i < bands_.size(); ++i) band_names_.push_back("b" + std::to_string(i));
    }
    require(band_names_.size() == bands_.size(), "band name count does not match band count");
  }

  BandedImage(std::vector<Raster> bands, Unit unit, double gsd_m_per_px,
              std::vector<std::string> band_names = {})
      : BandedImage(std::move(bands), unit, GroundSampling::isotropic(gsd_m_per_px),
                    std::move(band_names)) {}

  std::size_t band_count() const noexcept { return bands_.size(); }
  std::size_t rows() const noexcept { return bands_.empty() ? 0 : bands_.front().rows(); }
  std::size_t cols() const noexcept { return bands_.empty() ? 0 : bands_.front().cols(); }
  Unit unit() const noexcept { return unit_; }
  const GroundSampling& sampling() const noexcept { return gsd_; }
  double gsd_m_per_px() const noexcept { return gsd_.row_m; }
  const std::vector<std::string>& band_names() const noexcept { return band_names_; }
  const Raster& band(std::size_t i) const { return bands_.at(i); }
  const std::vector<Raster>& bands() const noexcept { return bands_; }

  /// New image with the same geometry and names but different data and unit.
  BandedImage with_bands(std::vector<Raster> bands, Unit unit) const {
    return BandedImage(std::move(bands), unit, gsd_, band_names_);
  }
  BandedImage with_bands(std::vector<Raster> bands, Unit unit, GroundSampling gsd) const {
    return BandedImage(std::move(bands), unit, gsd, band_names_);
  }

  friend bool operator==(const BandedImage&, const BandedImage&) = default;

 private:
  std::vector<Raster> bands_;
  Unit unit_ = Unit::DigitalNumber;
  GroundSampling gsd_{};
  std::vector<std::string> band_names_;
};

/// Pixel-space rectangle [x0, x1) x [y0, y1); x is the column axis.
struct PixelBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Per-image calibration and labelling metadata.
///
/// JSON keys: abscal_factor[], effective_bandwidth_um[], earth_sun_distance_au,
/// solar_zenith_deg, esun[], gsd_m, class, id. Optional: band_names[],
/// centroid [x, y], bbox [x0, y0, x1, y1] (pixels).
struct ImageMetadata {
  std::vector<double> abscal_factor;
  std::vector<double> effective_bandwidth_um;
  double earth_sun_distance_au = 1.0;
  double solar_zenith_deg = 0.0;
  std::vector<double> esun;
  double source_gsd_m = 1.0;
  std::string class_label;
  std::string instance_id;
  std::vector<std::string> band_names;
  std::optional<std::array<double, 2>> centroid;
  std::optional<PixelBox> bbox;

  std::size_t band_count() const noexcept { return abscal_factor.size(); }

  void validate() const {
    require(!abscal_factor.empty(), "metadata: abscal_factor is empty");
    require(effective_bandwidth_um.size() == abscal_factor.size() && esun.size() == abscal_factor.size(),
            "metadata: per-band lists differ in length");
    for (double v : effective_bandwidth_um) require(v > 0.0, "metadata: effective_bandwidth_um must be positive");
    for (double v : esun) require(v > 0.0, "metadata: esun must be positive");
    require(earth_sun_distance_au > 0.0, "metadata: earth_sun_distance_au must be positive");
    require(solar_zenith_deg >= 0.0 && solar_zenith_deg < 90.0, "metadata: solar_zenith_deg must be in [0, 90)");
    require(source_gsd_m > 0.0, "metadata: gsd_m must be positive");
    require(band_names.empty() || band_names.size() == abscal_factor.size(),
            "metadata: band_names length differs from band count");
  }

  void check_against(const BandedImage& image) const {
    if (band_count() != image.band_count())
      throw Error("band count mismatch: metadata has " + std::to_string(band_count()) +
                  " calibration entries, image has " + std::to_string(image.band_count()) + " bands");
  }
};

namespace detail {

inline std::vector<double> positive_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw Error(std::string("metadata: missing array '") + key + "'");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw Error(std::string("metadata: non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

inline double number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw Error(std::string("metadata: missing number '") + key + "'");
  return j.at(key).get<double>();
}

inline std::string text(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw Error(std::string("metadata: missing string '") + key + "'");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline ImageMetadata metadata_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("metadata: document is not a JSON object");
  ImageMetadata m;
  m.abscal_factor = detail::positive_list(j, "abscal_factor");
  m.effective_bandwidth_um = detail::positive_list(j, "effective_bandwidth_um");
  m.esun = detail::positive_list(j, "esun");
  m.earth_sun_distance_au = detail::number(j, "earth_sun_distance_au");
  m.solar_zenith_deg = detail::number(j, "solar_zenith_deg");
  m.source_gsd_m = detail::number(j, "gsd_m");
  m.class_label = detail::text(j, "class");
  m.instance_id = detail::text(j, "id");
  if (j.contains("band_names")) m.band_names = j.at("band_names").get<std::vector<std::string>>();
  if (j.contains("centroid")) {
    auto c = j.at("centroid").get<std::vector<double>>();
    require(c.size() == 2, "metadata: centroid must be [x, y]");
    m.centroid = std::array<double, 2>{c[0], c[1]};
  }
  if (j.contains("bbox")) {
    auto b = j.at("bbox").get<std::vector<double>>();
    require(b.size() == 4 && b[2] > b[0] && b[3] > b[1], "metadata: bbox must be [x0, y0, x1, y1] with x1>x0, y1>y0");
    m.bbox = PixelBox{b[0], b[1], b[2], b[3]};
  }
  m.validate();
  return m;
}

inline nlohmann::json metadata_to_json(const ImageMetadata& m) {
  nlohmann::json j;
  j["abscal_factor"] = m.abscal_factor;
  j["effective_bandwidth_um"] = m.effective_bandwidth_um;
  j["earth_sun_distance_au"] = m.earth_sun_distance_au;
  j["solar_zenith_deg"] = m.solar_zenith_deg;
  j["esun"] = m.esun;
  j["gsd_m"] = m.source_gsd_m;
  j["class"] = m.class_label;
  j["id"] = m.instance_id;
  if (!m.band_names.empty()) j["band_names"] = m.band_names;
  if (m.centroid) j["centroid"] = std::vector<double>{(*m.centroid)[0], (*m.centroid)[1]};
  if (m.bbox) j["bbox"] = std::vector<double>{m.bbox->x0, m.bbox->y0, m.bbox->x1, m.bbox->y1};
  return j;
}

}  // namespace imgchain
