#pragma once

// Minimal baseline TIFF support: uncompressed, stripped, unsigned 8/16-bit
// samples, chunky or planar configuration, either byte order. Enough for
// multi-band DN imagery; anything else is rejected with a descriptive error.

#include <filesystem>
#include <map>

#include "imgchain/core/image.hpp"
#include "imgchain/io/binary.hpp"

namespace imgchain::io {

namespace tiff_detail {

enum Tag : std::uint16_t {
  ImageWidth = 256,
  ImageLength = 257,
  BitsPerSample = 258,
  Compression = 259,
  Photometric = 262,
  StripOffsets = 273,
  SamplesPerPixel = 277,
  RowsPerStrip = 278,
  StripByteCounts = 279,
  PlanarConfiguration = 284,
  TileWidth = 322,
  SampleFormat = 339,
};

class Decoder {
 public:
  explicit Decoder(std::vector<char> bytes) : data_(std::move(bytes)) {
    if (data_.size() < 8) throw Error("TIFF: file too short");
    if (data_[0] == 'I' && data_[1] == 'I') big_ = false;
    else if (data_[0] == 'M' && data_[1] == 'M') big_ = true;
    else throw Error("TIFF: bad byte-order mark");
    if (u16(2) != 42) throw Error("TIFF: bad magic number");
  }

  std::uint16_t u16(std::size_t off) const {
    check(off, 2);
    auto b0 = static_cast<std::uint8_t>(data_[off]), b1 = static_cast<std::uint8_t>(data_[off + 1]);
    return big_ ? static_cast<std::uint16_t>(b0 << 8 | b1) : static_cast<std::uint16_t>(b1 << 8 | b0);
  }
  std::uint32_t u32(std::size_t off) const {
    check(off, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      auto b = static_cast<std::uint8_t>(data_[off + (big_ ? i : 3 - i)]);
      v = v << 8 | b;
    }
    return v;
  }

  /// Reads all values of an IFD entry as unsigned integers.
  std::vector<std::uint32_t> values(std::size_t entry) const {
    const auto type = u16(entry + 2);
    const auto count = u32(entry + 4);
    std::size_t width = 0;
    switch (type) {
      case 1: width = 1; break;  // BYTE
      case 3: width = 2; break;  // SHORT
      case 4: width = 4; break;  // LONG
      default: throw Error("TIFF: unsupported field type " + std::to_string(type));
    }
    std::size_t off = count * width <= 4 ? entry + 8 : u32(entry + 8);
    std::vector<std::uint32_t> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i, off += width) {
      if (width == 1) {
        check(off, 1);
        out.push_back(static_cast<std::uint8_t>(data_[off]));
      } else if (width == 2) {
        out.push_back(u16(off));
      } else {
        out.push_back(u32(off));
      }
    }
    return out;
  }

  bool big_endian() const noexcept { return big_; }
  const std::vector<char>& data() const noexcept { return data_; }

  void check(std::size_t off, std::size_t n) const {
    if (off + n > data_.size()) throw Error("TIFF: truncated file");
  }

 private:
  std::vector<char> data_;
  bool big_ = false;
};

}  // namespace tiff_detail

inline BandedImage decode_tiff(std::vector<char> bytes, GroundSampling gsd = {1.0, 1.0}) {
  using namespace tiff_detail;
  Decoder d(std::move(bytes));
  const std::size_t ifd = d.u32(4);
  const auto n_entries = d.u16(ifd);
  std::map<std::uint16_t, std::vector<std::uint32_t>> tags;
  for (std::size_t i = 0; i < n_entries; ++i) {
    const std::size_t entry = ifd + 2 + 12 * i;
    const auto tag = d.u16(entry);
    if (tag == TileWidth) throw Error("TIFF: tiled images are not supported");
    if (tag == ImageWidth || tag == ImageLength || tag == BitsPerSample || tag == Compression ||
        tag == StripOffsets || tag == SamplesPerPixel || tag == RowsPerStrip || tag == StripByteCounts ||
        tag == PlanarConfiguration || tag == SampleFormat)
      tags[tag] = d.values(entry);
  }
  auto scalar = [&](std::uint16_t tag, std::uint32_t fallback) -> std::uint32_t {
    auto it = tags.find(tag);
    return it == tags.end() || it->second.empty() ? fallback : it->second.front();
  };
  const std::size_t width = scalar(ImageWidth, 0), height = scalar(ImageLength, 0);
  const std::size_t spp = scalar(SamplesPerPixel, 1);
  if (width == 0 || height == 0) throw Error("TIFF: missing image dimensions");
  if (scalar(Compression, 1) != 1) throw Error("TIFF: compressed images are not supported");
  if (scalar(SampleFormat, 1) != 1) throw Error("TIFF: only unsigned integer samples are supported");
  const auto bits = tags.count(BitsPerSample) ? tags[BitsPerSample] : std::vector<std::uint32_t>{1};
  for (auto b : bits)
    if (b != bits.front()) throw Error("TIFF: mixed bits per sample");
  const std::size_t bps = bits.front();
  if (bps != 8 && bps != 16) throw Error("TIFF: only 8- and 16-bit samples are supported");
  if (bits.size() != 1 && bits.size() != spp) throw Error("TIFF: BitsPerSample count does not match band count");
  const bool planar = scalar(PlanarConfiguration, 1) == 2;
  const std::size_t rows_per_strip = std::min<std::size_t>(scalar(RowsPerStrip, static_cast<std::uint32_t>(height)), height);
  const auto& offsets = tags[StripOffsets];
  if (offsets.empty()) throw Error("TIFF: missing strip offsets");
  const std::size_t strips_per_plane = (height + rows_per_strip - 1) / rows_per_strip;
  if (offsets.size() != strips_per_plane * (planar ? spp : 1)) throw Error("TIFF: strip count does not match geometry");

  const std::size_t bytes_per_sample = bps / 8;
  std::vector<Raster> planes(spp, Raster(height, width));
  auto sample = [&](std::size_t off) -> double {
    if (bytes_per_sample == 1) {
      d.check(off, 1);
      return static_cast<std::uint8_t>(d.data()[off]);
    }
    return d.u16(off);
  };
  for (std::size_t p = 0; p < (planar ? spp : 1); ++p) {
    for (std::size_t s = 0; s < strips_per_plane; ++s) {
      std::size_t off = offsets[p * strips_per_plane + s];
      const std::size_t r0 = s * rows_per_strip, r1 = std::min(height, r0 + rows_per_strip);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          if (planar) {
            planes[p](r, c) = sample(off);
            off += bytes_per_sample;
          } else {
            for (std::size_t b = 0; b < spp; ++b, off += bytes_per_sample) planes[b](r, c) = sample(off);
          }
        }
      }
    }
  }
  return BandedImage(std::move(planes), Unit::DigitalNumber, gsd);
}

/// Writes an uncompressed little-endian 16-bit chunky TIFF. Values are rounded
/// and clamped to [0, 65535].
inline std::vector<char> encode_tiff16(const BandedImage& image) {
  const auto spp = static_cast<std::uint16_t>(image.band_count());
  const auto width = static_cast<std::uint32_t>(image.cols()), height = static_cast<std::uint32_t>(image.rows());
  const std::uint32_t n_entries = 10;
  const std::uint32_t ifd_offset = 8;
  const std::uint32_t ifd_size = 2 + 12 * n_entries + 4;
  const std::uint32_t bps_offset = ifd_offset + ifd_size;
  const std::uint32_t data_offset = bps_offset + 2 * spp;
  const std::uint32_t data_bytes = width * height * spp * 2;

  ByteWriter w;
  w.bytes("II");
  w.put<std::uint16_t>(42);
  w.put<std::uint32_t>(ifd_offset);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(n_entries));
  auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
    w.put<std::uint16_t>(tag);
    w.put<std::uint16_t>(type);
    w.put<std::uint32_t>(count);
    if (type == 3 && count == 1) {
      w.put<std::uint16_t>(static_cast<std::uint16_t>(value));
      w.put<std::uint16_t>(0);
    } else {
      w.put<std::uint32_t>(value);
    }
  };
  entry(256, 4, 1, width);
  entry(257, 4, 1, height);
  if (spp == 1) entry(258, 3, 1, 16);
  else if (spp == 2) entry(258, 3, 2, 16u | (16u << 16));
  else entry(258, 3, spp, bps_offset);
  entry(259, 3, 1, 1);
  entry(262, 3, 1, spp >= 3 ? 2 : 1);
  entry(273, 4, 1, data_offset);
  entry(277, 3, 1, spp);
  entry(278, 4, 1, height);
  entry(279, 4, 1, data_bytes);
  entry(284, 3, 1, 1);
  w.put<std::uint32_t>(0);
  for (std::uint16_t i = 0; i < spp; ++i) w.put<std::uint16_t>(16);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      for (std::size_t b = 0; b < spp; ++b) {
        double v = std::nearbyint(image.band(b)(r, c));
        v = std::clamp(v, 0.0, 65535.0);
        w.put<std::uint16_t>(static_cast<std::uint16_t>(v));
      }
  return w.buffer();
}

inline void write_tiff16(const std::filesystem::path& path, const BandedImage& image) {
  write_file_atomic(path, encode_tiff16(image));
}

inline BandedImage read_tiff(const std::filesystem::path& path, GroundSampling gsd = {1.0, 1.0}) {
  try {
    return decode_tiff(read_file(path), gsd);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace imgchain::io
