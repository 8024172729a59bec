#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imgchain/core/image.hpp"
#include "imgchain/core/manifest.hpp"
#include "imgchain/core/sensor_config.hpp"
#include "imgchain/io/bimg.hpp"
#include "imgchain/io/load.hpp"
#include "imgchain/optics.hpp"
#include "imgchain/parallel.hpp"
#include "imgchain/radiometry.hpp"
#include "imgchain/resample.hpp"
#include "imgchain/spectrum.hpp"

namespace imgchain::pipeline {

inline constexpr std::size_t kChipSize = 224;
inline constexpr std::size_t kReflectMargin = 32;

enum class PreprocessMode { Crop, Resize };

inline PreprocessMode preprocess_mode_from_string(const std::string& s) {
  if (s == "crop") return PreprocessMode::Crop;
  if (s == "resize") return PreprocessMode::Resize;
  throw Error("unknown preprocessing mode '" + s + "' (expected crop|resize)");
}

inline std::string to_string(PreprocessMode m) { return m == PreprocessMode::Crop ? "crop" : "resize"; }

inline std::size_t margin_for(PreprocessMode m) { return m == PreprocessMode::Resize ? kReflectMargin : 0; }

/// Crop: chip x chip window centred on the object centroid (image centre when
/// absent), zero-padded where it leaves the image. Resize: the bounding box
/// (whole image when absent) warped bilinearly to chip x chip, then reflect
/// padded by kReflectMargin on every side.
inline BandedImage preprocess(const BandedImage& image, const ImageMetadata& meta, PreprocessMode mode,
                              std::size_t chip = kChipSize) {
  require(image.rows() > 0 && image.cols() > 0, "preprocess: empty image");
  const auto half = static_cast<double>(chip) / 2.0;
  if (mode == PreprocessMode::Crop) {
    const double cx = meta.centroid ? (*meta.centroid)[0] : static_cast<double>(image.cols()) / 2.0;
    const double cy = meta.centroid ? (*meta.centroid)[1] : static_cast<double>(image.rows()) / 2.0;
    const auto top = static_cast<std::ptrdiff_t>(std::floor(cy - half + 0.5));
    const auto left = static_cast<std::ptrdiff_t>(std::floor(cx - half + 0.5));
    return resample::map_bands(
        image, [&](const Raster& b) { return resample::window(b, top, left, chip, chip); }, image.sampling());
  }
  PixelBox box = meta.bbox.value_or(
      PixelBox{0.0, 0.0, static_cast<double>(image.cols()), static_cast<double>(image.rows())});
  const GroundSampling warped{image.sampling().row_m * (box.y1 - box.y0) / static_cast<double>(chip),
                              image.sampling().col_m * (box.x1 - box.x0) / static_cast<double>(chip)};
  return resample::map_bands(
      image,
      [&](const Raster& b) {
        return resample::reflect_pad(resample::bilinear(b, chip, chip, box.y0, box.x0, box.y1, box.x1), kReflectMargin);
      },
      warped);
}

/// Bilinear resample to target x target. A nonzero margin (resize mode) is
/// removed after resampling to target + 2*margin.
inline BandedImage postprocess_resample(const BandedImage& image, std::size_t target = kChipSize, std::size_t margin = 0) {
  const std::size_t full = target + 2 * margin;
  const GroundSampling gsd{image.sampling().row_m * static_cast<double>(image.rows()) / static_cast<double>(full),
                           image.sampling().col_m * static_cast<double>(image.cols()) / static_cast<double>(full)};
  return resample::map_bands(
      image,
      [&](const Raster& b) {
        auto r = resample::bilinear(b, full, full);
        return margin ? resample::clip_margin(r, margin) : r;
      },
      gsd);
}

/// Receives intermediate spectra: stage name ("input", "filtered", "resampled"), band index, spectrum.
using SpectrumSink = std::function<void(std::string_view, std::size_t, const fourier::Spectrum&)>;

struct SimulationOptions {
  std::uint64_t seed = 0;
  radiometry::NoiseMode noise = radiometry::NoiseMode::Gaussian;
  bool quantize = true;
  bool apply_mtf = true;
  bool clamp_reflectance = false;
  PreprocessMode mode = PreprocessMode::Crop;
  std::optional<double> target_gsd_m;  // defaults to the sensor GSD
  std::size_t mtf_grid = optics::kDefaultMtfGrid;
  SpectrumSink spectrum_sink;
};

struct SimulationProducts {
  BandedImage output;     // chip x chip, ToaReflectance
  BandedImage reference;  // preprocessed input in reflectance, same grid
  optics::FrequencyBudget budget;
  nlohmann::json provenance;
  double elapsed_ms = 0;  // not part of provenance
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace detail

/// Runs the physics chain on a preprocessed DN image.
inline SimulationProducts simulate(const BandedImage& pre, const ImageMetadata& meta, const SensorConfig& config,
                                   const SimulationOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto budget = detail::stage("frequency_budget", [&] { return optics::frequency_budget(config); });
  if (config.band_count() != pre.band_count())
    throw StageError("simulate", "sensor has " + std::to_string(config.band_count()) + " bands but image has " +
                                     std::to_string(pre.band_count()));
  const std::size_t margin = margin_for(opt.mode);
  const double target_gsd = opt.target_gsd_m.value_or(budget.gsd_m);

  const auto radiance = detail::stage("dn_to_radiance", [&] { return radiometry::dn_to_radiance(pre, meta); });
  const auto reference = detail::stage("reference", [&] {
    return postprocess_resample(radiometry::toa_reflectance(radiance, meta, opt.clamp_reflectance), kChipSize, margin);
  });

  std::vector<Raster> blurred;
  GroundSampling sim_gsd{};
  for (std::size_t b = 0; b < radiance.band_count(); ++b) {
    auto spec = detail::stage("forward_spectrum", [&] { return fourier::forward_spectrum(radiance.band(b), radiance.sampling()); });
    if (opt.spectrum_sink) opt.spectrum_sink("input", b, spec);
    spec = detail::stage("apply_mtf", [&] {
      const auto tf = opt.apply_mtf ? optics::ground_mtf(config, b, spec.axis_y, spec.axis_x, opt.mtf_grid)
                                    : optics::unit_transfer_function(spec.axis_y, spec.axis_x);
      return fourier::apply_mtf(std::move(spec), tf);
    });
    if (opt.spectrum_sink) opt.spectrum_sink("filtered", b, spec);
    spec = detail::stage("resample_with_alias", [&] { return fourier::resample_with_alias(spec, budget, target_gsd); });
    if (opt.spectrum_sink) opt.spectrum_sink("resampled", b, spec);
    sim_gsd = {spec.extent_y_m / static_cast<double>(spec.rows), spec.extent_x_m / static_cast<double>(spec.cols)};
    blurred.push_back(detail::stage("inverse_spectrum", [&] { return fourier::inverse_spectrum(spec); }));
  }
  const BandedImage degraded = radiance.with_bands(std::move(blurred), Unit::AtApertureRadiance, sim_gsd);

  const auto scalars = detail::stage("radiometric_scalars", [&] { return radiometry::scalars(config); });
  auto electrons = detail::stage("radiance_to_electrons", [&] { return radiometry::radiance_to_electrons(degraded, scalars.beta); });
  electrons = detail::stage("add_noise", [&] {
    return radiometry::add_noise(electrons, config.read_noise_e, {opt.seed, meta.instance_id}, opt.noise);
  });
  const auto dn = detail::stage("apply_gain_quantize", [&] { return radiometry::apply_gain_quantize(electrons, config, opt.quantize); });
  const auto back = detail::stage("back_to_radiance", [&] { return radiometry::back_to_radiance(dn, scalars); });
  const auto rho = detail::stage("toa_reflectance", [&] { return radiometry::toa_reflectance(back, meta, opt.clamp_reflectance); });
  auto output = detail::stage("postprocess_resample", [&] { return postprocess_resample(rho, kChipSize, margin); });

  SimulationProducts p{std::move(output), reference, budget, {}, 0.0};
  p.provenance = {{"id", meta.instance_id},
                  {"class", meta.class_label},
                  {"config_hash", hex64(config_hash(config))},
                  {"config", to_json(config)},
                  {"seed", opt.seed},
                  {"mode", to_string(opt.mode)},
                  {"noise", radiometry::to_string(opt.noise)},
                  {"quantize", opt.quantize},
                  {"mtf", opt.apply_mtf},
                  {"clamp_reflectance", opt.clamp_reflectance},
                  {"input_gsd_m", {pre.sampling().row_m, pre.sampling().col_m}},
                  {"simulated_grid", {degraded.rows(), degraded.cols()}},
                  {"simulated_gsd_m", {sim_gsd.row_m, sim_gsd.col_m}},
                  {"warp_factor", {pre.sampling().row_m / meta.source_gsd_m, pre.sampling().col_m / meta.source_gsd_m}},
                  {"frequency_budget", optics::to_json(budget)}};
  p.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return p;
}

/// Preprocess and simulate one raw DN image.
inline SimulationProducts simulate_raw(const BandedImage& raw, const ImageMetadata& meta, const SensorConfig& config,
                                       const SimulationOptions& opt) {
  const auto pre = detail::stage("preprocess", [&] { return preprocess(raw, meta, opt.mode); });
  return simulate(pre, meta, config, opt);
}

struct BatchOptions {
  SimulationOptions simulation;
  std::size_t workers = 1;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> dump_spectra_dir;
};

struct BatchFailure {
  std::string id;
  std::string stage;
  std::string message;
};

struct BatchReport {
  std::size_t total = 0;
  std::vector<std::string> succeeded;
  std::vector<BatchFailure> failures;

  bool ok() const noexcept { return failures.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& x : failures) f.push_back({{"id", x.id}, {"stage", x.stage}, {"message", x.message}});
    return {{"total", total}, {"succeeded", succeeded.size()}, {"failed", failures.size()}, {"failures", f}};
  }
};

/// Magnitude spectrum as a one-band raster (for debugging dumps).
inline Raster magnitude(const fourier::Spectrum& s) {
  Raster r(s.rows, s.cols);
  for (std::size_t i = 0; i < s.values.size(); ++i) r.values()[i] = std::abs(s.values[i]);
  return r;
}

/// Simulates every manifest entry. Per entry: <id>.bimg (output), <id>.ref.bimg
/// (reference), <id>.json (provenance). Failures are recorded and the batch
/// continues; batch_report.json summarizes. Outputs do not depend on `workers`.
inline BatchReport simulate_batch(const DatasetManifest& manifest, const SensorConfig& config, const BatchOptions& opt) {
  BatchReport report;
  report.total = manifest.entries.size();
  std::filesystem::create_directories(opt.out_dir);
  std::vector<std::optional<BatchFailure>> outcome(manifest.entries.size());
  parallel_for(manifest.entries.size(), opt.workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    try {
      auto [raw, meta] = detail::stage("load", [&] { return io::load_image(entry.image, entry.metadata); });
      if (meta.instance_id.empty()) meta.instance_id = entry.instance_id;
      SimulationOptions sim = opt.simulation;
      if (opt.dump_spectra_dir) {
        const auto dir = *opt.dump_spectra_dir;
        sim.spectrum_sink = [dir, id = entry.instance_id](std::string_view name, std::size_t band, const fourier::Spectrum& s) {
          const BandedImage img({magnitude(s)}, Unit::AtApertureRadiance,
                                GroundSampling{1.0 / s.extent_y_m, 1.0 / s.extent_x_m});
          io::write_bimg(dir / (id + "." + std::string(name) + ".b" + std::to_string(band) + ".bimg"), img);
        };
      }
      const auto products = simulate_raw(raw, meta, config, sim);
      io::write_bimg(opt.out_dir / (entry.instance_id + ".bimg"), products.output);
      io::write_bimg(opt.out_dir / (entry.instance_id + ".ref.bimg"), products.reference);
      io::write_json(opt.out_dir / (entry.instance_id + ".json"), products.provenance);
    } catch (const StageError& e) {
      outcome[i] = BatchFailure{entry.instance_id, e.stage(), e.what()};
    } catch (const std::exception& e) {
      outcome[i] = BatchFailure{entry.instance_id, "write", e.what()};
    }
  });
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    if (outcome[i]) report.failures.push_back(*outcome[i]);
    else report.succeeded.push_back(manifest.entries[i].instance_id);
  }
  io::write_json(opt.out_dir / "batch_report.json", report.to_json());
  return report;
}

}  // namespace imgchain::pipeline
