#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include "imgchain/core/image.hpp"
#include "imgchain/io/bimg.hpp"
#include "imgchain/io/tiff.hpp"

namespace imgchain::io {

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

inline ImageMetadata load_metadata(const std::filesystem::path& path) {
  try {
    return metadata_from_json(read_json(path));
  } catch (const Error& e) {
    throw Error("schema violation in " + path.string() + ": " + e.what());
  }
}

/// Loads a DN image (16-bit TIFF or BIMG, detected by magic) with its metadata.
/// The returned image carries the metadata's GSD and band names.
inline std::pair<BandedImage, ImageMetadata> load_image(const std::filesystem::path& path,
                                                        const std::filesystem::path& metadata_path) {
  ImageMetadata meta = load_metadata(metadata_path);
  auto bytes = read_file(path);
  const auto gsd = GroundSampling::isotropic(meta.source_gsd_m);
  BandedImage raw;
  try {
    if (bytes.size() >= 4 && std::string(bytes.data(), 4) == "BIMG") raw = decode_bimg(std::move(bytes), gsd);
    else raw = decode_tiff(std::move(bytes), gsd);
  } catch (const Error& e) {
    throw Error("load error in " + path.string() + ": " + e.what());
  }
  if (raw.unit() != Unit::DigitalNumber)
    throw Error("load error in " + path.string() + ": expected DigitalNumber data, found " +
                std::string(unit_name(raw.unit())));
  meta.check_against(raw);
  std::vector<std::string> names = meta.band_names;
  BandedImage image(std::vector<Raster>(raw.bands()), Unit::DigitalNumber, gsd, std::move(names));
  return {std::move(image), std::move(meta)};
}

}  // namespace imgchain::io
