#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "imgchain/core/manifest.hpp"
#include "imgchain/hash.hpp"
#include "imgchain/io/bimg.hpp"
#include "imgchain/pipeline.hpp"

namespace imgchain::harness {

/// Content-addressed store of simulated images on disk. The key hashes the
/// sensor configuration, entry id, preprocessing mode, seed and chain options.
/// Images are always returned as decoded from their stored bytes, so cold and
/// warm lookups give identical data.
class SimulationCache {
 public:
  explicit SimulationCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  static std::string key(const SensorConfig& config, const std::string& id, const pipeline::SimulationOptions& opt) {
    const std::string material = hex64(config_hash(config)) + "|" + id + "|" + pipeline::to_string(opt.mode) + "|" +
                                 std::to_string(opt.seed) + "|" + radiometry::to_string(opt.noise) + "|" +
                                 (opt.quantize ? "q" : "nq") + (opt.apply_mtf ? "m" : "nm") +
                                 (opt.clamp_reflectance ? "c" : "nc");
    return hex64(fnv1a64(material));
  }

  std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".bimg"); }

  /// Returns the cached image for (config, entry), simulating it on a miss.
  BandedImage get(const SensorConfig& config, const ManifestEntry& entry, const pipeline::SimulationOptions& opt) {
    const auto k = key(config, entry.instance_id, opt);
    const auto path = path_for(k);
    std::error_code ec;
    if (std::filesystem::is_regular_file(path, ec)) {
      ++hits_;
      return io::read_bimg(path);
    }
    ++misses_;
    auto [raw, meta] = pipeline::detail::stage("load", [&] { return io::load_image(entry.image, entry.metadata); });
    if (meta.instance_id.empty()) meta.instance_id = entry.instance_id;
    const auto products = pipeline::simulate_raw(raw, meta, config, opt);
    auto bytes = io::encode_bimg(products.output);
    io::write_file_atomic(path, bytes);
    return io::decode_bimg(std::move(bytes));
  }

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace imgchain::harness
