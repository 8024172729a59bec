// Acceptance checks: one PASS/FAIL line per criterion, tolerances and time
// budgets fixed below. Exit status is nonzero when any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "imgchain/imgchain.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace imgchain;

namespace {

// ---------------------------------------------------------------- tolerances

constexpr double kMtfRms = 1e-3;
constexpr std::size_t kMtfGrid = 512;
constexpr double kIdentityMaxAbs = 1e-6;
constexpr double kAliasAmplitude = 0.05;
constexpr double kNoiseVariance = 0.03;
constexpr double kNoiseMean = 0.01;
constexpr double kUnquantizedRel = 1e-12;
constexpr double kRapExact = 1e-12;
constexpr double kRapPrevalence = 0.01;
constexpr double kGiqeNiirs = 1e-3;
constexpr double kGiqeQTarget = 0.840, kGiqeQTol = 0.05;
constexpr double kSsimGolden = 1e-4;
constexpr double kSsimQTarget = 0.549, kSsimQTol = 0.15;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Runner {
  std::size_t failed = 0;
  std::map<std::string, bool> results;

  void check(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed <= budget_s;
    const bool pass = o.pass && in_time;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(2);
    line << (pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << elapsed << " s, budget " << budget_s << " s"
         << (in_time ? "" : ", over budget") << "]";
    std::cout << line.str() << std::endl;
    results[name] = pass;
    if (!pass) ++failed;
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- MTF

Outcome mtf_fidelity() {
  rng::SplitMix g(2024);
  double worst = 0, slowest = 0;
  for (int i = 0; i < 5; ++i) {
    const auto c = testkit::random_config(g);
    const std::size_t band = c.shortest_wavelength_band();
    const auto start = std::chrono::steady_clock::now();
    const auto model = optics::mtf_model(optics::f_number(c.focal_length_m, c.aperture_diameter_m),
                                         c.bands[band].center_wavelength_m, kMtfGrid);
    const auto budget = optics::frequency_budget(c);
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    const double mid = static_cast<double>(kMtfGrid / 2);
    double sq = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < kMtfGrid; ++r)
      for (std::size_t k = 0; k < kMtfGrid; ++k) {
        const double nu = std::hypot(static_cast<double>(r) - mid, static_cast<double>(k) - mid) * model->pitch();
        if (nu > budget.nu_optcut) continue;
        const double d = model->grid()(r, k) - optics::analytic_circular_mtf(nu / budget.nu_optcut);
        sq += d * d;
        ++n;
      }
    worst = std::max(worst, std::sqrt(sq / static_cast<double>(n)));
  }
  return {worst <= kMtfRms && slowest < 1.0,
          "worst RMS " + fmt(worst, 3) + " <= " + fmt(kMtfRms) + " over 5 configs, slowest " + fmt(slowest, 3) + " s < 1 s"};
}

// ---------------------------------------------------------------- identity chain

Outcome identity_chain() {
  rng::SplitMix g(77);
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    const double gsd = 0.5 + 2.0 * g.uniform();
    auto meta = testkit::synthetic_metadata("id" + std::to_string(i), "c", gsd);
    std::vector<Raster> rho;
    for (int b = 0; b < 3; ++b) rho.push_back(testkit::random_raster(g, 224, 224, 0.02, 0.6));
    const auto img = testkit::reflectance_to_dn_image(rho, meta);
    pipeline::SimulationOptions opt;
    opt.noise = radiometry::NoiseMode::Off;
    opt.apply_mtf = false;
    opt.quantize = false;
    opt.target_gsd_m = gsd;
    const auto p = pipeline::simulate_raw(img, meta, testkit::random_config(g), opt);
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t k = 0; k < p.output.band(b).size(); ++k)
        worst = std::max(worst, std::abs(p.output.band(b).values()[k] - p.reference.band(b).values()[k]));
  }
  return {worst < kIdentityMaxAbs, "max abs error " + fmt(worst, 3) + " < " + fmt(kIdentityMaxAbs) + " on 10 images"};
}

// ---------------------------------------------------------------- alias fold

Outcome alias_fold() {
  // 96 m footprint at 1 m resampled to 3 m: output Nyquist 1/6 cycles/m.
  const std::size_t n = 96, m = 32;
  const double nyquist = 1.0 / 6.0;
  const double nu = 1.5 * nyquist;
  Raster tone(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) tone(r, c) = std::cos(2.0 * std::numbers::pi * nu * static_cast<double>(r));
  optics::FrequencyBudget undersampled;
  undersampled.oversampled = false;
  const auto out = fourier::resample_with_alias(fourier::forward_spectrum(tone, 1.0), undersampled, 3.0);
  if (out.rows != m || out.cols != m) return {false, "unexpected output grid"};
  std::size_t br = 0, bc = 0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c)
      if (std::abs(out(r, c)) > std::abs(out(br, bc))) std::tie(br, bc) = std::tie(r, c);
  const double peak_nu = std::abs(out.axis_y[br]);
  const bool bin_ok = bc == m / 2 && std::abs(peak_nu - 0.5 * nyquist) < 1e-12;
  // A unit cosine puts m*m/2 into each of its two bins.
  const double amplitude = 2.0 * std::abs(out(br, bc)) / static_cast<double>(m * m);
  const auto spatial = fourier::inverse_spectrum(out);
  double peak = 0;
  for (double v : spatial.values()) peak = std::max(peak, std::abs(v));
  const bool amp_ok = std::abs(amplitude - 1.0) <= kAliasAmplitude && std::abs(peak - 1.0) <= kAliasAmplitude;
  return {bin_ok && amp_ok, "1.5x Nyquist tone peaks at " + fmt(peak_nu / nyquist) + "x Nyquist (bin " + std::to_string(br) +
                                "," + std::to_string(bc) + "), amplitude " + fmt(amplitude, 6) + ", spatial peak " + fmt(peak, 6)};
}

// ---------------------------------------------------------------- noise

Outcome noise_statistics() {
  bool ok = true;
  std::string detail;
  const double sigma = baseline_sensor().read_noise_e;
  for (double ie : {100.0, 1e3, 1e4}) {
    const BandedImage flat({Raster(1024, 1024, ie)}, Unit::Electrons, 1.0);
    const auto out = radiometry::add_noise(flat, sigma, {5, "flat"});
    double s = 0, q = 0;
    for (double v : out.band(0).values()) s += v;
    const double mean = s / static_cast<double>(out.band(0).size());
    for (double v : out.band(0).values()) q += (v - mean) * (v - mean);
    const double var = q / static_cast<double>(out.band(0).size());
    const double dv = var / (ie + sigma * sigma) - 1.0, dm = mean / ie - 1.0;
    ok = ok && std::abs(dv) <= kNoiseVariance && std::abs(dm) <= kNoiseMean;
    detail += (detail.empty() ? "" : "; ") + std::string("I=") + fmt(ie) + " var err " + fmt(100 * dv, 2) + "% mean err " +
              fmt(100 * dm, 2) + "%";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- round trip

Outcome round_trip() {
  const auto c = baseline_sensor_rgb();
  const auto s = radiometry::scalars(c);
  rng::SplitMix g(9);
  std::vector<Raster> bands;
  for (std::size_t b = 0; b < 3; ++b) {
    // up to 95% of full well
    const double hi = 0.95 * c.well_depth_e / s.beta[b];
    bands.push_back(testkit::random_raster(g, 256, 256, 0.0, hi));
  }
  const BandedImage radiance(bands, Unit::AtApertureRadiance, 1.0);
  const auto e = radiometry::radiance_to_electrons(radiance, s.beta);
  const auto q = radiometry::back_to_radiance(radiometry::apply_gain_quantize(e, c, true), s);
  const auto nq = radiometry::back_to_radiance(radiometry::apply_gain_quantize(e, c, false), s);
  double worst_lsb = 0, worst_rel = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const double lsb = s.gain / s.beta[b];
    for (std::size_t i = 0; i < radiance.band(b).size(); ++i) {
      const double l = radiance.band(b).values()[i];
      worst_lsb = std::max(worst_lsb, std::abs(q.band(b).values()[i] - l) / lsb);
      if (l > 0) worst_rel = std::max(worst_rel, std::abs(nq.band(b).values()[i] - l) / l);
    }
  }
  return {worst_lsb <= 0.5 * (1 + 1e-9) && worst_rel < kUnquantizedRel,
          "quantized max error " + fmt(worst_lsb, 6) + " LSB <= 0.5, unquantized max rel error " + fmt(worst_rel, 3)};
}

// ---------------------------------------------------------------- retrieval AP

double brute_force_ap(const EmbeddingSet& s, std::size_t probe) {
  auto dist = [&](std::size_t i) {
    double d = 0;
    for (std::size_t k = 0; k < s.dim; ++k) d += std::pow(s.vectors[probe * s.dim + k] - s.vectors[i * s.dim + k], 2);
    return std::sqrt(d);
  };
  std::vector<double> d(s.count());
  for (std::size_t i = 0; i < s.count(); ++i) d[i] = dist(i);
  auto before = [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && s.ids[a] < s.ids[b]); };
  double sum = 0, relevant = 0;
  for (std::size_t g = 0; g < s.count(); ++g) {
    if (g == probe || s.labels[g] != s.labels[probe]) continue;
    relevant += 1;
    double rank = 1, hits = 1;
    for (std::size_t h = 0; h < s.count(); ++h)
      if (h != probe && h != g && before(h, g)) {
        rank += 1;
        hits += s.labels[h] == s.labels[probe];
      }
    sum += hits / rank;
  }
  return sum / relevant;
}

EmbeddingSet random_embeddings(rng::SplitMix& g, std::size_t classes, std::size_t per_class, std::size_t dim, bool coarse) {
  EmbeddingSet s;
  s.dim = dim;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      s.ids.push_back("v" + std::to_string(g.next() % 100000) + "_" + std::to_string(c * per_class + i));
      s.labels.push_back("c" + std::to_string(c));
      for (std::size_t k = 0; k < dim; ++k) s.vectors.push_back(coarse ? std::round(g.normal() * 2.0) / 2.0 : g.normal());
    }
  return s;
}

Outcome retrieval_ap() {
  rng::SplitMix g(31);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    auto s = random_embeddings(g, 5, 10, 4, t % 2 == 0);  // even instances carry distance ties
    rng::shuffle(s.labels, g);
    const auto r = recognition::mean_rap(s);
    for (std::size_t i = 0; i < s.count(); ++i) worst = std::max(worst, std::abs(r.per_probe[i] - brute_force_ap(s, i)));
  }

  EmbeddingSet clustered;
  clustered.dim = 3;
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 10; ++i) {
      clustered.ids.push_back("p" + std::to_string(c * 10 + i));
      clustered.labels.push_back("c" + std::to_string(c));
      clustered.vectors.insert(clustered.vectors.end(), {1000.0 * c + g.uniform(), g.uniform(), g.uniform()});
    }
  const double perfect = recognition::mean_rap(clustered).value;

  // Labels independent of the vectors: rAP approaches the prevalence (R-1)/(M-1).
  const std::size_t classes = 35, per_class = 50;
  const double prevalence = static_cast<double>(per_class - 1) / static_cast<double>(classes * per_class - 1);
  double worst_gap = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    rng::SplitMix h(1000 + seed);
    auto s = random_embeddings(h, classes, per_class, 8, false);
    rng::shuffle(s.labels, h);
    worst_gap = std::max(worst_gap, std::abs(recognition::mean_rap(s).value - prevalence));
  }
  return {worst <= kRapExact && perfect == 1.0 && worst_gap <= kRapPrevalence,
          "brute-force max diff " + fmt(worst, 3) + " over 200 instances; clustered rAP " + fmt(perfect) +
              "; shuffled max |rAP - " + fmt(prevalence, 4) + "| = " + fmt(worst_gap, 3) + " over 10 seeds"};
}

// ---------------------------------------------------------------- GIQE5

Outcome giqe5() {
  const auto c = quality::load_giqe5_coefficients(std::string(IMGCHAIN_ASSETS) + "/giqe5_coefficients.json");
  // Computed beforehand with an independent script from the published equation.
  struct Triple {
    double gsd, rer, snr, niirs;
  };
  const Triple triples[] = {{6.0, 0.8, 4.47, 1.1763165180226434},
                            {0.5, 0.35, 50.0, 5.094603167007308},
                            {1.2, 0.55, 12.0, 3.725851390820589},
                            {3.0, 0.95, 100.0, 2.6706129512331733},
                            {10.0, 0.25, 2.0, -1.4345361644449608}};
  double worst = 0;
  for (const auto& t : triples) worst = std::max(worst, std::abs(quality::giqe5_niirs(t.gsd, t.rer, t.snr, c) - t.niirs));
  const auto table = quality::giqe_optimal_q(baseline_sensor(), quality::value_grid(0.1, 1.0, 0.02),
                                             quality::value_grid(0.05, 0.075, 0.005), c);
  const bool q_ok = std::abs(table.q.mean - kGiqeQTarget) <= kGiqeQTol;
  return {worst <= kGiqeNiirs && q_ok && table.diameters.size() == 6,
          "max triple diff " + fmt(worst, 3) + "; optimal Q mean " + fmt(table.q.mean) + " (std " + fmt(table.q.std, 3) +
              ", target " + fmt(kGiqeQTarget) + " +- " + fmt(kGiqeQTol) + "), NIIRS " + fmt(table.value_min) + ".." +
              fmt(table.value_max)};
}

// ---------------------------------------------------------------- SSIM / PSNR

Outcome ssim_psnr() {
  const auto golden = io::read_json(std::string(IMGCHAIN_TEST_DATA) + "/ssim_golden.json");
  double worst = 0;
  for (const auto& k : golden.at("cases")) {
    const auto [a, b] = testkit::golden_pair(k.at("rows"), k.at("cols"));
    const std::string pair = k.at("pair");
    Raster x = a, y = b;
    if (pair == "a,0.7a+0.1") y = a.map([](double v) { return 0.7 * v + 0.1; });
    else if (pair == "b,1-a") {
      x = b;
      y = a.map([](double v) { return 1.0 - v; });
    }
    worst = std::max(worst, std::abs(quality::ssim_band(x, y) - k.at("ssim").get<double>()));
  }

  // Dyadic values keep the MSE exact, so the dB values must match bit for bit.
  auto one = [](double v) { return BandedImage({Raster(16, 16, v)}, Unit::ToaReflectance, 1.0); };
  const bool psnr_ok = quality::psnr(one(0.5), one(0.75)).value == 10.0 * std::log10(16.0) &&
                       quality::psnr(one(0.25), one(0.75)).value == 10.0 * std::log10(4.0) &&
                       quality::psnr(one(0.0), one(1.0), 255.0).value == 10.0 * std::log10(65025.0) &&
                       quality::psnr(one(0.5), one(0.5)).infinite;

  const auto corpus = testkit::texture_corpus({}, 100);
  const auto focal = quality::value_grid(0.1, 1.0, 0.1);
  std::vector<double> optimum_q;
  bool interior = true;
  for (double d : {0.05, 0.0625, 0.075}) {
    std::vector<double> mean_ssim;
    for (double f : focal) {
      const auto config = baseline_sensor_rgb(f, d);
      pipeline::SimulationOptions opt;
      opt.seed = 3;
      double sum = 0;
      for (const auto& [img, meta] : corpus) {
        const auto p = pipeline::simulate_raw(img, meta, config, opt);
        sum += quality::ssim(p.reference, p.output).value;
      }
      mean_ssim.push_back(sum / static_cast<double>(corpus.size()));
    }
    const auto best = quality::argmax(mean_ssim, [](double v) { return v; });
    interior = interior && best > 0 && best + 1 < focal.size();
    optimum_q.push_back(optics::frequency_budget(baseline_sensor_rgb(focal[best], d)).q);
  }
  const auto q = quality::mean_std(optimum_q);
  const bool q_ok = std::abs(q.mean - kSsimQTarget) <= kSsimQTol;
  return {worst <= kSsimGolden && psnr_ok && interior && q_ok,
          "golden max diff " + fmt(worst, 3) + "; PSNR hand cases " + (psnr_ok ? "exact" : "wrong") + "; SSIM optimum " +
              (interior ? "interior" : "at an endpoint") + ", Q mean " + fmt(q.mean) + " (target " + fmt(kSsimQTarget) +
              " +- " + fmt(kSsimQTol) + ")"};
}

// ---------------------------------------------------------------- harness

Outcome harness_end_to_end() {
  testkit::TempDir dir;
  const testkit::TextureClassSpec spec;
  const auto ds = testkit::write_texture_dataset(dir / "data", spec, 7);
  // Texture at nu_d is resolved up to the detector Nyquist f / (2 p H).
  const double designed = 2.0 * 6e-6 * 5e5 * spec.nu_cpm;
  harness::SweepPlan plan;
  plan.trial_id = "focal";
  plan.values = quality::value_grid(0.1, 1.0, 0.1);
  plan.config = baseline_sensor_rgb();
  const auto folds = harness::make_folds(ds.data, 3, 1);

  harness::SweepOptions one;
  one.out_dir = dir / "w1";
  one.seed = 1;
  const auto a = harness::run_sweep(plan, folds, ds.data, one);
  harness::SweepOptions eight = one;
  eight.out_dir = dir / "w8";
  eight.workers = 8;
  const auto b = harness::run_sweep(plan, folds, ds.data, eight);

  const std::size_t metrics = 5;  // rap, top1, top3, cap, auc
  const bool complete = a.ok() && a.records.size() == 3 * plan.values.size() * metrics;
  bool same = a.records.size() == b.records.size();
  for (std::size_t i = 0; same && i < a.records.size(); ++i)
    same = a.records[i].metric == b.records[i].metric && a.records[i].value == b.records[i].value &&
           a.records[i].fold == b.records[i].fold && a.records[i].param_value == b.records[i].param_value;
  harness::emit_results(a.records, dir / "w1", true, harness::plan_q_function(plan));

  double best = std::nan("");
  for (const auto& c : harness::build_curves(a.records))
    if (c.metric == "baseline_rap") best = c.points[c.argmax()].param_value;
  const bool at_design = std::abs(best - designed) <= 0.1 + 1e-9;
  return {complete && same && at_design,
          std::to_string(a.records.size()) + " records (" + (complete ? "complete" : "incomplete") + "), 1 vs 8 workers " +
              (same ? "identical" : "differ") + ", rAP argmax f = " + fmt(best) + " m (designed " + fmt(designed) +
              " +- 0.1)"};
}

}  // namespace

int main() {
  Runner run;
  run.check("mtf-fidelity", 5.0, mtf_fidelity);
  run.check("identity-chain", 5.0, identity_chain);
  run.check("alias-fold", 1.0, alias_fold);
  run.check("noise-statistics", 5.0, noise_statistics);
  run.check("round-trip", 1.0, round_trip);
  run.check("retrieval-ap-oracle", 30.0, retrieval_ap);
  run.check("giqe5", 10.0, giqe5);
  run.check("ssim-psnr", 120.0, ssim_psnr);
  run.check("harness-end-to-end", 600.0, harness_end_to_end);
  run.check("negative-scope", 1.0, [&] {
    const bool covered = run.results["retrieval-ap-oracle"] && run.results["harness-end-to-end"];
    return Outcome{covered,
                   "learned-network accuracy figures need large-scale data and GPU training and are not reproduced; "
                   "the chain and metrics are covered by the property checks above"};
  });
  std::cout << (run.failed ? "FAILED " + std::to_string(run.failed) + " check(s)" : std::string("ALL PASSED")) << std::endl;
  return run.failed ? 1 : 0;
}
