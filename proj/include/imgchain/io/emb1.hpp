#pragma once

// EMB1 embedding file:
//   "EMB1" | u32 count M | u32 dim d | u64 trailer offset
//   | M*d little-endian f32, row-major
//   | UTF-8 JSON trailer {"ids": [...], "labels": [...]} running to end of file.
// The trailer offset always equals 20 + 4*M*d.

#include <cmath>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/error.hpp"
#include "imgchain/io/binary.hpp"

namespace imgchain {

/// Labeled fixed-dimension feature vectors.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<double> vectors;  // count() x dim, row-major
  std::vector<std::string> labels;
  std::vector<std::string> ids;

  std::size_t count() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }

  void validate() const {
    require(labels.size() == ids.size(), "embeddings: label and id counts differ");
    require(vectors.size() == ids.size() * dim, "embeddings: vector payload does not match count x dim");
    for (double v : vectors) require(std::isfinite(v), "embeddings: non-finite value");
    std::set<std::string> seen;
    for (const auto& id : ids) require(seen.insert(id).second, "embeddings: duplicate id '" + id + "'");
  }

  /// Checks every vector has unit 2-norm to the given tolerance.
  void require_unit_norm(double tol = 1e-5) const {
    for (std::size_t i = 0; i < count(); ++i) {
      double s = 0;
      for (double v : row(i)) s += v * v;
      require(std::abs(std::sqrt(s) - 1.0) <= tol, "embeddings: vector '" + ids[i] + "' is not unit norm");
    }
  }
};

namespace io {

inline constexpr std::size_t kEmb1HeaderSize = 4 + 4 + 4 + 8;

inline std::vector<char> encode_emb1(const EmbeddingSet& set) {
  set.validate();
  ByteWriter w;
  w.bytes("EMB1");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.dim));
  w.put<std::uint64_t>(kEmb1HeaderSize + 4 * set.vectors.size());
  for (double v : set.vectors) w.put<float>(static_cast<float>(v));
  nlohmann::json trailer{{"ids", set.ids}, {"labels", set.labels}};
  w.bytes(trailer.dump());
  return w.buffer();
}

inline EmbeddingSet decode_emb1(std::vector<char> bytes) {
  ByteReader r(std::move(bytes));
  if (r.size() < kEmb1HeaderSize || r.bytes(4) != "EMB1") throw Error("not an EMB1 file (bad magic)");
  EmbeddingSet set;
  const auto count = r.get<std::uint32_t>();
  set.dim = r.get<std::uint32_t>();
  const auto trailer_offset = r.get<std::uint64_t>();
  if (trailer_offset != kEmb1HeaderSize + 4ull * count * set.dim || trailer_offset > r.size())
    throw Error("EMB1: trailer offset inconsistent with header");
  set.vectors.resize(std::size_t{count} * set.dim);
  for (auto& v : set.vectors) v = static_cast<double>(r.get<float>());
  try {
    auto trailer = nlohmann::json::parse(r.data().begin() + static_cast<std::ptrdiff_t>(trailer_offset), r.data().end());
    set.ids = trailer.at("ids").get<std::vector<std::string>>();
    set.labels = trailer.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("EMB1: bad trailer: ") + e.what());
  }
  if (set.ids.size() != count) throw Error("EMB1: trailer id count differs from header count");
  set.validate();
  return set;
}

inline void write_emb1(const std::filesystem::path& path, const EmbeddingSet& set) {
  write_file_atomic(path, encode_emb1(set));
}

inline EmbeddingSet read_emb1(const std::filesystem::path& path) {
  try {
    return decode_emb1(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace io
}  // namespace imgchain
