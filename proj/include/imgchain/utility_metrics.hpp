#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/core/image.hpp"
#include "imgchain/core/sensor_config.hpp"
#include "imgchain/io/load.hpp"
#include "imgchain/optics.hpp"
#include "imgchain/radiometry.hpp"

namespace imgchain::quality {

// ---------------------------------------------------------------- GIQE5

enum class GsdUnit { Metre, Inch };
enum class RerTerm { LogRerPow4, LogOfRer4 };

/// GIQE5 regression coefficients, always loaded from a file.
struct Giqe5Coefficients {
  std::array<double, 6> a{};
  GsdUnit gsd_unit = GsdUnit::Inch;
  RerTerm rer_term = RerTerm::LogRerPow4;
  std::string provenance;
  double reference_radiance = 0;  // 0: use the mid-well level

  double gsd_in_unit(double gsd_m) const { return gsd_unit == GsdUnit::Inch ? gsd_m / 0.0254 : gsd_m; }
};

/// Schema: {"a": [a0..a5], "gsd_unit": "inch"|"m", "rer_term": "(log10 rer)^4"|"log10(rer^4)",
///          "source": "...", "reference_radiance": L (optional)}.
inline Giqe5Coefficients giqe5_coefficients_from_json(const nlohmann::json& j) {
  Giqe5Coefficients c;
  try {
    const auto a = j.at("a").get<std::vector<double>>();
    require(a.size() == 6, "GIQE5 coefficients: expected 6 values in \"a\"");
    std::copy(a.begin(), a.end(), c.a.begin());
    const auto unit = j.at("gsd_unit").get<std::string>();
    if (unit == "inch") c.gsd_unit = GsdUnit::Inch;
    else if (unit == "m") c.gsd_unit = GsdUnit::Metre;
    else throw Error("GIQE5 coefficients: gsd_unit must be \"inch\" or \"m\"");
    const auto term = j.value("rer_term", std::string("(log10 rer)^4"));
    if (term == "(log10 rer)^4") c.rer_term = RerTerm::LogRerPow4;
    else if (term == "log10(rer^4)") c.rer_term = RerTerm::LogOfRer4;
    else throw Error("GIQE5 coefficients: unknown rer_term '" + term + "'");
    c.provenance = j.at("source").get<std::string>();
    c.reference_radiance = j.value("reference_radiance", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("GIQE5 coefficients: ") + e.what());
  }
  require(!c.provenance.empty(), "GIQE5 coefficients: source must not be empty");
  require(c.reference_radiance >= 0.0, "GIQE5 coefficients: reference_radiance must be non-negative");
  return c;
}

inline Giqe5Coefficients load_giqe5_coefficients(const std::filesystem::path& path) {
  return giqe5_coefficients_from_json(io::read_json(path));
}

/// NIIRS = a0 + a1 log GSD + a2 (1 - exp(a3/SNR)) log RER + a4 (log RER)^4 + a5/SNR.
inline double giqe5_niirs(double gsd_m, double rer, double snr, const Giqe5Coefficients& c) {
  if (!(gsd_m > 0.0 && rer > 0.0 && snr > 0.0)) throw Error("giqe5_niirs: gsd, rer and snr must be positive");
  const double log_rer = std::log10(rer);
  const double rer_term = c.rer_term == RerTerm::LogRerPow4 ? std::pow(log_rer, 4) : 4.0 * log_rer;
  return c.a[0] + c.a[1] * std::log10(c.gsd_in_unit(gsd_m)) + c.a[2] * (1.0 - std::exp(c.a[3] / snr)) * log_rer +
         c.a[4] * rer_term + c.a[5] / snr;
}

// ---------------------------------------------------------------- RER / SNR

inline constexpr std::size_t kRerSamples = 20000;

/// Edge-response difference ER(+p/2) - ER(-p/2) of a system with radial MTF
/// `mtf` (frequency in cycles per unit of `pitch`), integrated on [0, nu_max]:
/// RER = (2/pi) * integral MTF(nu) sin(pi nu p) / nu dnu.
inline double estimate_rer(const std::function<double(double)>& mtf, double pitch, double nu_max,
                           std::size_t samples = kRerSamples) {
  require(pitch > 0.0 && nu_max > 0.0 && samples >= 2, "estimate_rer: bad integration range");
  if (samples % 2) ++samples;
  const double h = nu_max / static_cast<double>(samples);
  auto integrand = [&](double nu) { return nu == 0.0 ? mtf(0.0) * std::numbers::pi * pitch : mtf(nu) * std::sin(std::numbers::pi * nu * pitch) / nu; };
  double sum = integrand(0.0) + integrand(nu_max);
  bool any_nonzero = mtf(0.0) != 0.0;
  for (std::size_t i = 1; i < samples; ++i) {
    const double nu = h * static_cast<double>(i);
    const double m = mtf(nu);
    if (m != 0.0) any_nonzero = true;
    sum += (i % 2 ? 4.0 : 2.0) * (m == 0.0 ? 0.0 : m * std::sin(std::numbers::pi * nu * pitch) / nu);
  }
  if (!any_nonzero) throw Error("estimate_rer: degenerate (all-zero) MTF");
  return 2.0 / std::numbers::pi * sum * h / 3.0;
}

/// RER of the sensor's optics-only MTF in its shortest-wavelength band,
/// along one detector axis.
inline double estimate_rer(const SensorConfig& config, std::size_t grid = optics::kDefaultMtfGrid) {
  const auto& band = config.bands.at(config.shortest_wavelength_band());
  const auto model = optics::mtf_model(optics::f_number(config.focal_length_m, config.aperture_diameter_m),
                                       band.center_wavelength_m, grid);
  return estimate_rer([&](double nu) { return (*model)(0.0, nu); }, config.pixel_pitch_m, model->cutoff());
}

/// Radiance that fills half the well in the shortest-wavelength band.
inline double mid_well_radiance(const SensorConfig& config) {
  const auto s = radiometry::scalars(config);
  return 0.5 * config.well_depth_e / s.beta.at(config.shortest_wavelength_band());
}

/// SNR = I_e / sqrt(I_e + sigma_read^2), I_e = beta * L in the shortest-wavelength band.
inline double estimate_snr(const SensorConfig& config, double reference_radiance) {
  if (!(reference_radiance > 0.0)) throw Error("estimate_snr: reference radiance must be positive");
  const auto s = radiometry::scalars(config);
  const double ie = s.beta.at(config.shortest_wavelength_band()) * reference_radiance;
  return ie / std::sqrt(ie + config.read_noise_e * config.read_noise_e);
}

struct GiqePoint {
  double focal_length_m = 0;
  double aperture_diameter_m = 0;
  double q = 0;
  double gsd_m = 0;
  double rer = 0;
  double snr = 0;
  double niirs = 0;
};

inline GiqePoint giqe_point(const SensorConfig& config, const Giqe5Coefficients& c) {
  const auto budget = optics::frequency_budget(config);
  GiqePoint p;
  p.focal_length_m = config.focal_length_m;
  p.aperture_diameter_m = config.aperture_diameter_m;
  p.q = budget.q;
  p.gsd_m = budget.gsd_m;
  p.rer = estimate_rer(config);
  p.snr = estimate_snr(config, c.reference_radiance > 0.0 ? c.reference_radiance : mid_well_radiance(config));
  p.niirs = giqe5_niirs(p.gsd_m, p.rer, p.snr, c);
  return p;
}

inline nlohmann::json to_json(const GiqePoint& p) {
  return {{"focal_length_m", p.focal_length_m}, {"aperture_diameter_m", p.aperture_diameter_m},
          {"q", p.q},
          {"gsd_m", p.gsd_m},
          {"rer", p.rer},
          {"snr", p.snr},
          {"niirs", p.niirs}};
}

/// Inclusive grid lo, lo+step, ..., hi (endpoint included within half a step).
inline std::vector<double> value_grid(double lo, double hi, double step) {
  require(step > 0.0 && hi >= lo, "value grid: need step > 0 and hi >= lo");
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

inline std::vector<GiqePoint> giqe_sweep(const SensorConfig& base, const std::string& parameter,
                                         const std::vector<double>& values, const Giqe5Coefficients& c) {
  std::vector<GiqePoint> out;
  for (double v : values) out.push_back(giqe_point(with_parameter(base, parameter, v), c));
  return out;
}

/// Index of the maximum (first on ties).
template <typename Range, typename Key>
std::size_t argmax(const Range& r, Key key) {
  require(!std::empty(r), "argmax of empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size(r); ++i)
    if (key(r[i]) > key(r[best])) best = i;
  return best;
}

struct MeanStd {
  double mean = 0;
  double std = 0;  // population
};

inline MeanStd mean_std(const std::vector<double>& v) {
  require(!v.empty(), "mean_std of empty list");
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

/// Optimal Q per aperture diameter over a focal-length sweep.
struct OptimalQTable {
  std::vector<double> diameters;
  std::vector<GiqePoint> optima;
  MeanStd q;
  double value_min = 0;
  double value_max = 0;
};

inline OptimalQTable giqe_optimal_q(const SensorConfig& base, const std::vector<double>& focal_lengths,
                                    const std::vector<double>& diameters, const Giqe5Coefficients& c) {
  OptimalQTable t;
  t.diameters = diameters;
  std::vector<double> qs, vals;
  for (double d : diameters) {
    const auto sweep = giqe_sweep(with_parameter(base, "aperture_diameter_m", d), "focal_length_m", focal_lengths, c);
    const auto best = sweep[argmax(sweep, [](const GiqePoint& p) { return p.niirs; })];
    t.optima.push_back(best);
    qs.push_back(best.q);
    vals.push_back(best.niirs);
  }
  t.q = mean_std(qs);
  t.value_min = *std::min_element(vals.begin(), vals.end());
  t.value_max = *std::max_element(vals.begin(), vals.end());
  return t;
}

// ---------------------------------------------------------------- PSNR / SSIM

/// Channel-averaged full-reference score.
struct QualityScore {
  std::string metric;
  double value = 0;
  std::vector<double> per_band;
  bool infinite = false;
  nlohmann::json parameters;

  nlohmann::json to_json() const {
    nlohmann::json j{{"metric", metric}, {"parameters", parameters}, {"infinite", infinite}};
    j["value"] = infinite ? nlohmann::json("inf") : nlohmann::json(value);
    nlohmann::json bands = nlohmann::json::array();
    for (double v : per_band) bands.push_back(std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v));
    j["per_band"] = bands;
    return j;
  }
};

namespace detail {

inline void require_same_shape(const BandedImage& a, const BandedImage& b, const char* what) {
  if (a.band_count() != b.band_count() || a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(what) + ": shape mismatch (" + std::to_string(a.band_count()) + "x" +
                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.band_count()) +
                "x" + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

}  // namespace detail

inline double psnr_band(const Raster& ref, const Raster& test, double data_range) {
  require(ref.same_shape(test), "psnr: shape mismatch");
  double mse = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.values()[i] - test.values()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

/// 10 log10(R^2 / MSE) per band, averaged. Identical inputs give +inf (flagged).
inline QualityScore psnr(const BandedImage& ref, const BandedImage& test, double data_range = 1.0) {
  require(data_range > 0.0, "psnr: data_range must be positive");
  detail::require_same_shape(ref, test, "psnr");
  QualityScore s{"psnr", 0.0, {}, false, {{"data_range", data_range}}};
  for (std::size_t b = 0; b < ref.band_count(); ++b) s.per_band.push_back(psnr_band(ref.band(b), test.band(b), data_range));
  for (double v : s.per_band) s.value += v;
  s.value /= static_cast<double>(s.per_band.size());
  s.infinite = std::isinf(s.value);
  return s;
}

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;

  nlohmann::json to_json() const {
    return {{"window", window}, {"sigma", sigma}, {"k1", k1}, {"k2", k2}, {"data_range", data_range}};
  }
};

namespace detail {

inline std::vector<double> gaussian_kernel(std::size_t n, double sigma) {
  std::vector<double> k(n);
  const double c = static_cast<double>(n - 1) / 2.0;
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) - c;
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable 'valid' filtering: output (rows-n+1) x (cols-n+1).
inline Raster filter_valid(const Raster& src, const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t out_r = src.rows() - n + 1, out_c = src.cols() - n + 1;
  Raster tmp(src.rows(), out_c);
  for (std::size_t r = 0; r < src.rows(); ++r)
    for (std::size_t c = 0; c < out_c; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * src(r, c + i);
      tmp(r, c) = s;
    }
  Raster out(out_r, out_c);
  for (std::size_t r = 0; r < out_r; ++r)
    for (std::size_t c = 0; c < out_c; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * tmp(r + i, c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace detail

/// Mean local SSIM of one band over every window fully inside the image
/// (Gaussian-weighted statistics, population covariance).
inline double ssim_band(const Raster& x, const Raster& y, const SsimParams& p = {}) {
  require(x.same_shape(y), "ssim: shape mismatch");
  require(p.window >= 1 && p.window % 2 == 1, "ssim: window size must be odd");
  if (x.rows() < p.window || x.cols() < p.window)
    throw Error("ssim: image " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " is smaller than the " +
                std::to_string(p.window) + "x" + std::to_string(p.window) + " window");
  const auto k = detail::gaussian_kernel(p.window, p.sigma);
  Raster xx(x.rows(), x.cols()), yy(x.rows(), x.cols()), xy(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x.values()[i], b = y.values()[i];
    xx.values()[i] = a * a;
    yy.values()[i] = b * b;
    xy.values()[i] = a * b;
  }
  const auto ux = detail::filter_valid(x, k), uy = detail::filter_valid(y, k);
  const auto uxx = detail::filter_valid(xx, k), uyy = detail::filter_valid(yy, k), uxy = detail::filter_valid(xy, k);
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  double total = 0;
  for (std::size_t i = 0; i < ux.size(); ++i) {
    const double mx = ux.values()[i], my = uy.values()[i];
    const double vx = uxx.values()[i] - mx * mx, vy = uyy.values()[i] - my * my, cxy = uxy.values()[i] - mx * my;
    total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(ux.size());
}

inline QualityScore ssim(const BandedImage& ref, const BandedImage& test, const SsimParams& p = {}) {
  require(p.data_range > 0.0, "ssim: data_range must be positive");
  detail::require_same_shape(ref, test, "ssim");
  QualityScore s{"ssim", 0.0, {}, false, p.to_json()};
  for (std::size_t b = 0; b < ref.band_count(); ++b) s.per_band.push_back(ssim_band(ref.band(b), test.band(b), p));
  for (double v : s.per_band) s.value += v;
  s.value /= static_cast<double>(s.per_band.size());
  return s;
}

}  // namespace imgchain::quality
