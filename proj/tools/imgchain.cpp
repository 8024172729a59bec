// imgchain command-line front end.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imgchain/imgchain.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace imgchain;

namespace {

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") std::cout << j.dump(2) << "\n";
  else io::write_json(out, j);
}

void emit_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") std::cout << text;
  else io::write_file_atomic(out, text);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// name=lo:hi:step
struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& s) {
  const auto eq = s.find('=');
  require(eq != std::string::npos, "--sweep expects name=lo:hi:step");
  SweepSpec spec{s.substr(0, eq), {}};
  double lo = 0, hi = 0, step = 0;
  char tail = 0;
  require(std::sscanf(s.c_str() + eq + 1, "%lf:%lf:%lf%c", &lo, &hi, &step, &tail) == 3, "--sweep expects name=lo:hi:step");
  spec.values = quality::value_grid(lo, hi, step);
  return spec;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config, manifest, mode = "crop", out, dump_spectra, noise = "gaussian";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool clamp = false, no_quantize = false, explain = false;
};

int run_simulate(const SimulateArgs& a) {
  const auto config = sensor_config_from_json(io::read_json(a.config));
  if (a.explain) std::cout << optics::to_json(optics::frequency_budget(config)).dump(2) << "\n";
  const auto manifest = load_manifest(a.manifest);
  pipeline::BatchOptions opt;
  opt.simulation.seed = a.seed;
  opt.simulation.mode = pipeline::preprocess_mode_from_string(a.mode);
  opt.simulation.noise = radiometry::noise_mode_from_string(a.noise);
  opt.simulation.clamp_reflectance = a.clamp;
  opt.simulation.quantize = !a.no_quantize;
  opt.workers = a.workers;
  opt.out_dir = a.out;
  if (!a.dump_spectra.empty()) opt.dump_spectra_dir = fs::path(a.dump_spectra);
  const auto report = pipeline::simulate_batch(manifest, config, opt);
  for (const auto& f : report.failures) std::cerr << "error: " << f.id << " [" << f.stage << "] " << f.message << "\n";
  std::cerr << report.succeeded.size() << "/" << report.total << " simulated\n";
  return report.ok() ? 0 : 1;
}

// ---------------------------------------------------------------- giqe

struct GiqeArgs {
  std::string config, coeffs, sweep, out, format = "json";
  bool explain = false;
};

int run_giqe(const GiqeArgs& a) {
  const auto config = sensor_config_from_json(io::read_json(a.config));
  const auto coeffs = quality::load_giqe5_coefficients(a.coeffs);
  if (a.explain) std::cerr << optics::to_json(optics::frequency_budget(config)).dump(2) << "\n";
  std::vector<quality::GiqePoint> points;
  if (a.sweep.empty()) {
    points.push_back(quality::giqe_point(config, coeffs));
  } else {
    const auto spec = parse_sweep(a.sweep);
    points = quality::giqe_sweep(config, spec.parameter, spec.values, coeffs);
  }
  if (a.format == "csv") {
    std::string text = "focal_length_m,aperture_diameter_m,q,gsd_m,rer,snr,niirs\n";
    for (const auto& p : points)
      text += harness::format_number(p.focal_length_m) + "," + harness::format_number(p.aperture_diameter_m) + "," +
              harness::format_number(p.q) + "," + harness::format_number(p.gsd_m) + "," + harness::format_number(p.rer) +
              "," + harness::format_number(p.snr) + "," + harness::format_number(p.niirs) + "\n";
    emit_text(text, a.out);
    return 0;
  }
  json j = json::array();
  for (const auto& p : points) j.push_back(quality::to_json(p));
  json doc{{"coefficients", coeffs.provenance}, {"points", j}};
  if (points.size() > 1) doc["argmax"] = quality::argmax(points, [](const quality::GiqePoint& p) { return p.niirs; });
  emit(doc, a.out);
  return 0;
}

// ---------------------------------------------------------------- iqa

struct IqaArgs {
  std::string metric, ref, test, out;
  double range = 1.0;
};

bool is_raster(const fs::path& p) {
  const auto name = p.filename().string();
  if (ends_with(name, ".ref.bimg")) return false;
  return ends_with(name, ".bimg") || ends_with(name, ".tif") || ends_with(name, ".tiff");
}

BandedImage read_raster(const fs::path& p) {
  return ends_with(p.string(), ".bimg") ? io::read_bimg(p) : io::read_tiff(p);
}

fs::path reference_for(const fs::path& ref_dir, const fs::path& test) {
  const auto stem = test.stem().string();
  for (const auto& candidate : {stem + ".ref.bimg", test.filename().string()}) {
    const auto p = ref_dir / candidate;
    if (fs::is_regular_file(p) && !fs::equivalent(p, test)) return p;
  }
  throw Error("no reference image for '" + test.filename().string() + "' in " + ref_dir.string());
}

int run_iqa(const IqaArgs& a) {
  std::vector<fs::path> tests;
  for (const auto& e : fs::directory_iterator(a.test))
    if (e.is_regular_file() && is_raster(e.path())) tests.push_back(e.path());
  std::sort(tests.begin(), tests.end());
  require(!tests.empty(), "iqa: no images in " + a.test);
  std::string text = "id,metric,value,bands\n";
  int failures = 0;
  for (const auto& t : tests) {
    try {
      const auto ref = read_raster(reference_for(a.ref, t));
      const auto test = read_raster(t);
      const auto score = a.metric == "psnr" ? quality::psnr(ref, test, a.range) : quality::ssim(ref, test);
      std::string bands;
      for (double v : score.per_band) bands += (bands.empty() ? "" : ";") + harness::format_number(v);
      text += harness::csv_field(t.stem().string()) + "," + a.metric + "," +
              (score.infinite ? std::string("inf") : harness::format_number(score.value)) + "," + bands + "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << t.filename().string() << ": " << e.what() << "\n";
      ++failures;
    }
  }
  emit_text(text, a.out);
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string metric, embeddings, scores, out;
  std::size_t k = 1, workers = 1;
};

int run_metrics(const MetricsArgs& a) {
  if (a.metric == "rap") {
    require(!a.embeddings.empty(), "metrics rap requires --embeddings");
    emit(recognition::mean_rap(io::read_emb1(a.embeddings), a.workers).to_json(), a.out);
    return 0;
  }
  require(!a.scores.empty(), "metrics " + a.metric + " requires --scores");
  const auto s = recognition::read_scores_csv(io::read_text(a.scores));
  if (a.metric == "topk") {
    emit({{"metric", "top" + std::to_string(a.k)}, {"k", a.k}, {"value", recognition::topk_accuracy(s, a.k)}}, a.out);
  } else if (a.metric == "cap") {
    emit(recognition::classification_ap(s).to_json(s.class_names), a.out);
  } else {
    emit(recognition::roc_auc_macro(s).to_json(s.class_names), a.out);
  }
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string plan, manifest, evaluator, out;
  std::vector<std::string> zero_shot;
  std::size_t folds = 10, workers = 1;
  std::uint64_t seed = 0;
  bool plot_data = false, quiet = false;
};

int run_sweep_cmd(const SweepArgs& a) {
  auto plan = harness::sweep_plan_from_json(io::read_json(a.plan), fs::path(a.plan).parent_path());
  if (!a.evaluator.empty()) plan.evaluator = a.evaluator;
  const auto manifest = load_manifest(a.manifest);
  const auto folds = harness::make_folds(manifest, a.folds, a.seed);
  for (const auto& w : folds.warnings) std::cerr << "warning: " << w << "\n";
  harness::SweepOptions opt;
  opt.out_dir = a.out;
  opt.workers = a.workers;
  opt.seed = a.seed;
  if (!a.zero_shot.empty()) {
    opt.split = harness::split_classes(manifest, harness::read_class_list(io::read_text(a.zero_shot.at(0))),
                                       harness::read_class_list(io::read_text(a.zero_shot.at(1))), true);
  }
  if (!a.quiet) opt.progress = [](const std::string& cell) { std::cerr << "cell " << cell << "\n"; };
  fs::create_directories(a.out);
  io::write_json(fs::path(a.out) / "folds.json", harness::to_json(folds, manifest));
  const auto result = harness::run_sweep(plan, folds, manifest, opt);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& f : result.failures)
    std::cerr << "error: cell " << f.trial_id << " fold " << f.fold << " value " << f.param_value << ": " << f.message << "\n";
  if (!result.records.empty()) harness::emit_results(result.records, a.out, a.plot_data, harness::plan_q_function(plan));
  json failures = json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"trial_id", f.trial_id}, {"fold", f.fold}, {"param_value", f.param_value}, {"message", f.message}});
  io::write_json(fs::path(a.out) / "sweep_report.json",
                 {{"records", result.records.size()}, {"failures", failures}, {"cache_hits", result.cache_hits},
                  {"cache_misses", result.cache_misses}, {"warnings", result.warnings}});
  std::cerr << result.records.size() << " records, " << result.failures.size() << " failed cells, cache "
            << result.cache_hits << " hits / " << result.cache_misses << " misses\n";
  return result.ok() && !result.records.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::string config, manifest, metadata, plan, emb1, coeffs;
  std::size_t folds = 10;
};

int run_validate(const ValidateArgs& a) {
  int problems = 0;
  auto check = [&](const std::string& what, const std::string& path, auto&& fn) {
    if (path.empty()) return;
    try {
      fn();
      std::cout << "ok " << what << " " << path << "\n";
    } catch (const std::exception& e) {
      std::cout << "invalid " << what << " " << path << ": " << e.what() << "\n";
      ++problems;
    }
  };
  check("config", a.config, [&] {
    const auto c = sensor_config_from_json(io::read_json(a.config));
    std::cout << optics::to_json(optics::frequency_budget(c)).dump(2) << "\n";
  });
  check("metadata", a.metadata, [&] { io::load_metadata(a.metadata); });
  check("coefficients", a.coeffs, [&] { quality::load_giqe5_coefficients(a.coeffs); });
  check("plan", a.plan, [&] { harness::sweep_plan_from_json(io::read_json(a.plan), fs::path(a.plan).parent_path()); });
  check("embeddings", a.emb1, [&] { io::read_emb1(a.emb1).validate(); });
  check("manifest", a.manifest, [&] {
    const auto m = load_manifest(a.manifest);
    ManifestCheck opt;
    opt.fold_count = a.folds;
    const auto report = validate_manifest(m, opt);
    for (const auto& issue : report.issues)
      std::cout << "  " << (issue.warning ? "warning: " : "error: ") << issue.message << "\n";
    require(report.ok(), std::to_string(report.issues.size()) + " issue(s)");
  });
  return problems == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote-sensing image-chain simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a sensor over every manifest entry");
  s->add_option("--config", sim.config, "Sensor configuration JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--manifest", sim.manifest, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--mode", sim.mode, "Preprocessing mode")->check(CLI::IsMember({"crop", "resize"}));
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--seed", sim.seed, "Noise seed");
  s->add_option("--workers", sim.workers, "Worker threads")->check(CLI::PositiveNumber);
  s->add_option("--dump-spectra", sim.dump_spectra, "Write magnitude spectra here");
  s->add_option("--noise", sim.noise, "Noise model")->check(CLI::IsMember({"off", "gaussian", "poisson"}));
  s->add_flag("--clamp-reflectance", sim.clamp, "Clamp output reflectance to [0, 1]");
  s->add_flag("--no-quantize", sim.no_quantize, "Skip DN quantization");
  s->add_flag("--explain", sim.explain, "Print the frequency budget");

  GiqeArgs giqe;
  auto* g = app.add_subcommand("giqe", "Predict NIIRS with GIQE 5");
  g->add_option("--config", giqe.config, "Sensor configuration JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--coeffs", giqe.coeffs, "Coefficient JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--sweep", giqe.sweep, "name=lo:hi:step");
  g->add_option("--format", giqe.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  g->add_option("--out", giqe.out, "Output file (default stdout)");
  g->add_flag("--explain", giqe.explain, "Print the frequency budget to stderr");

  IqaArgs iqa;
  auto* q = app.add_subcommand("iqa", "Full-reference image quality");
  q->add_option("metric", iqa.metric, "psnr or ssim")->required()->check(CLI::IsMember({"psnr", "ssim"}));
  q->add_option("--ref", iqa.ref, "Reference directory")->required()->check(CLI::ExistingDirectory);
  q->add_option("--test", iqa.test, "Test directory")->required()->check(CLI::ExistingDirectory);
  q->add_option("--range", iqa.range, "PSNR data range");
  q->add_option("--out", iqa.out, "Output CSV (default stdout)");

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "Recognition metrics");
  m->add_option("metric", met.metric, "rap, cap, auc or topk")->required()->check(CLI::IsMember({"rap", "cap", "auc", "topk"}));
  m->add_option("--embeddings", met.embeddings, "EMB1 file")->check(CLI::ExistingFile);
  m->add_option("--scores", met.scores, "Score CSV")->check(CLI::ExistingFile);
  m->add_option("--k", met.k, "k for topk")->check(CLI::PositiveNumber);
  m->add_option("--workers", met.workers, "Worker threads")->check(CLI::PositiveNumber);
  m->add_option("--out", met.out, "Output JSON (default stdout)");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Run a k-fold parameter sweep");
  w->add_option("--plan", sw.plan, "Sweep plan JSON")->required()->check(CLI::ExistingFile);
  w->add_option("--manifest", sw.manifest, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  w->add_option("--folds", sw.folds, "Number of folds");
  w->add_option("--seed", sw.seed, "Fold and noise seed");
  w->add_option("--evaluator", sw.evaluator, "builtin or cmd:\"...\" (overrides the plan)");
  w->add_option("--out", sw.out, "Output directory")->required();
  w->add_option("--zero-shot", sw.zero_shot, "Train and eval class lists")->expected(2)->check(CLI::ExistingFile);
  w->add_option("--workers", sw.workers, "Worker threads")->check(CLI::PositiveNumber);
  w->add_flag("--plot-data", sw.plot_data, "Write curves and optimum tables");
  w->add_flag("--quiet", sw.quiet, "No per-cell progress");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Check input files");
  v->add_option("--config", val.config, "Sensor configuration JSON");
  v->add_option("--manifest", val.manifest, "Dataset manifest JSON");
  v->add_option("--metadata", val.metadata, "Image metadata JSON");
  v->add_option("--plan", val.plan, "Sweep plan JSON");
  v->add_option("--embeddings", val.emb1, "EMB1 file");
  v->add_option("--coeffs", val.coeffs, "GIQE coefficient JSON");
  v->add_option("--folds", val.folds, "Fold count for the class-size check");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*s) return run_simulate(sim);
    if (*g) return run_giqe(giqe);
    if (*q) return run_iqa(iqa);
    if (*m) return run_metrics(met);
    if (*w) return run_sweep_cmd(sw);
    if (*v) return run_validate(val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
