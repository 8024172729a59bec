#pragma once

// BIMG raw raster format:
//   "BIMG" | u16 version=1 | u16 band count | u32 height | u32 width | u8 unit code
//   followed by little-endian f32 planes, band-major, row-major within a band.

#include <filesystem>

#include "imgchain/core/image.hpp"
#include "imgchain/io/binary.hpp"

namespace imgchain::io {

inline constexpr std::uint16_t kBimgVersion = 1;
inline constexpr std::size_t kBimgHeaderSize = 4 + 2 + 2 + 4 + 4 + 1;

inline std::vector<char> encode_bimg(const BandedImage& image) {
  ByteWriter w;
  w.bytes("BIMG");
  w.put<std::uint16_t>(kBimgVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(image.band_count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(image.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(image.cols()));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(image.unit()));
  for (const auto& band : image.bands())
    for (double v : band.values()) w.put<float>(static_cast<float>(v));
  return w.buffer();
}

/// Decodes a BIMG buffer. The format does not store ground sampling or band
/// names; callers supply them.
inline BandedImage decode_bimg(std::vector<char> bytes, GroundSampling gsd = {1.0, 1.0},
                               std::vector<std::string> band_names = {}) {
  ByteReader r(std::move(bytes));
  if (r.size() < kBimgHeaderSize || r.bytes(4) != "BIMG") throw Error("not a BIMG file (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != kBimgVersion) throw Error("unsupported BIMG version " + std::to_string(version));
  const auto bands = r.get<std::uint16_t>();
  const auto rows = r.get<std::uint32_t>();
  const auto cols = r.get<std::uint32_t>();
  const Unit unit = unit_from_code(r.get<std::uint8_t>());
  if (bands == 0 || rows == 0 || cols == 0) throw Error("BIMG: empty image");
  const std::size_t plane = std::size_t{rows} * cols;
  if (r.size() != kBimgHeaderSize + plane * bands * sizeof(float))
    throw Error("BIMG: payload size does not match header (missing band or dimension mismatch)");
  std::vector<Raster> planes;
  planes.reserve(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    std::vector<double> data(plane);
    for (auto& v : data) v = static_cast<double>(r.get<float>());
    planes.emplace_back(rows, cols, std::move(data));
  }
  if (!band_names.empty() && band_names.size() != bands) band_names.clear();
  return BandedImage(std::move(planes), unit, gsd, std::move(band_names));
}

inline void write_bimg(const std::filesystem::path& path, const BandedImage& image) {
  write_file_atomic(path, encode_bimg(image));
}

inline BandedImage read_bimg(const std::filesystem::path& path, GroundSampling gsd = {1.0, 1.0},
                             std::vector<std::string> band_names = {}) {
  try {
    return decode_bimg(read_file(path), gsd, std::move(band_names));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace imgchain::io
