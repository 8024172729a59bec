#pragma once

#include <chrono>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "imgchain/io/bimg.hpp"
#include "imgchain/io/emb1.hpp"
#include "imgchain/io/load.hpp"
#include "imgchain/parallel.hpp"
#include "imgchain/recognition_metrics.hpp"

namespace imgchain::harness {

/// One simulated image handed to an evaluator.
struct EvalItem {
  std::string id;
  std::string label;
  std::filesystem::path path;  // BIMG
};

struct EvalInput {
  std::vector<EvalItem> train;
  std::vector<EvalItem> test;
  std::size_t epochs = 0;  // evaluate epochs 0..epochs
  std::filesystem::path cell_dir;
  std::vector<std::string> classes;  // label order for score matrices
  std::size_t workers = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::map<std::string, double> metrics;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::string name() const = 0;
  virtual std::vector<EpochMetrics> evaluate(const EvalInput& input) = 0;
};

// ---------------------------------------------------------------- builtin

inline constexpr std::size_t kFeaturesPerBand = 8;

namespace detail {

struct HaarLevel {
  Raster ll;
  double lh = 0, hl = 0, hh = 0;  // mean squared detail coefficients
};

/// One orthonormal 2-D Haar step on the even-sized top-left part of `x`.
inline HaarLevel haar_step(const Raster& x) {
  const std::size_t r2 = x.rows() / 2, c2 = x.cols() / 2;
  require(r2 > 0 && c2 > 0, "haar: raster too small");
  HaarLevel out{Raster(r2, c2)};
  for (std::size_t r = 0; r < r2; ++r)
    for (std::size_t c = 0; c < c2; ++c) {
      const double a = x(2 * r, 2 * c), b = x(2 * r, 2 * c + 1), d = x(2 * r + 1, 2 * c), e = x(2 * r + 1, 2 * c + 1);
      out.ll(r, c) = (a + b + d + e) / 2.0;
      const double lh = (a - b + d - e) / 2.0;  // horizontal detail
      const double hl = (a + b - d - e) / 2.0;  // vertical detail
      const double hh = (a - b - d + e) / 2.0;
      out.lh += lh * lh;
      out.hl += hl * hl;
      out.hh += hh * hh;
    }
  const auto n = static_cast<double>(r2 * c2);
  out.lh /= n;
  out.hl /= n;
  out.hh /= n;
  return out;
}

}  // namespace detail

/// Per band: mean, variance, then (LH, HL, HH) detail energies of Haar levels 1 and 2.
inline std::vector<double> baseline_features(const BandedImage& image) {
  std::vector<double> f;
  f.reserve(image.band_count() * kFeaturesPerBand);
  for (const auto& band : image.bands()) {
    const double mean = band.mean();
    double var = 0;
    for (double v : band.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(band.size());
    f.push_back(mean);
    f.push_back(var);
    const auto l1 = detail::haar_step(band);
    const auto l2 = detail::haar_step(l1.ll);
    for (const auto* l : {&l1, &l2}) {
      f.push_back(l->lh);
      f.push_back(l->hl);
      f.push_back(l->hh);
    }
  }
  return f;
}

/// Classical stand-in for a learned evaluator: fixed features standardized with
/// training statistics, retrieval AP on the test split and nearest-centroid
/// classification. Metric names carry a "baseline_" prefix.
class BuiltinEvaluator : public Evaluator {
 public:
  std::string name() const override { return "builtin"; }

  static EmbeddingSet embed(const std::vector<EvalItem>& items, std::size_t workers) {
    EmbeddingSet set;
    std::vector<std::vector<double>> rows(items.size());
    parallel_for(items.size(), workers, [&](std::size_t i) { rows[i] = baseline_features(io::read_bimg(items[i].path)); });
    set.dim = rows.empty() ? 0 : rows.front().size();
    for (std::size_t i = 0; i < items.size(); ++i) {
      require(rows[i].size() == set.dim, "builtin evaluator: images differ in band count");
      set.vectors.insert(set.vectors.end(), rows[i].begin(), rows[i].end());
      set.ids.push_back(items[i].id);
      set.labels.push_back(items[i].label);
    }
    return set;
  }

  /// Standardizes every column with the mean and std of `reference`
  /// (zero std leaves the column centred only).
  static void standardize(EmbeddingSet& set, const EmbeddingSet& reference) {
    const std::size_t d = set.dim;
    if (reference.count() == 0 || d == 0) return;
    for (std::size_t k = 0; k < d; ++k) {
      double m = 0, s = 0;
      for (std::size_t i = 0; i < reference.count(); ++i) m += reference.row(i)[k];
      m /= static_cast<double>(reference.count());
      for (std::size_t i = 0; i < reference.count(); ++i) s += (reference.row(i)[k] - m) * (reference.row(i)[k] - m);
      s = std::sqrt(s / static_cast<double>(reference.count()));
      const double scale = s > 0 ? 1.0 / s : 1.0;
      for (std::size_t i = 0; i < set.count(); ++i) set.vectors[i * d + k] = (set.vectors[i * d + k] - m) * scale;
    }
  }

  std::vector<EpochMetrics> evaluate(const EvalInput& in) override {
    auto train = embed(in.train, in.workers);
    auto test = embed(in.test, in.workers);
    const EmbeddingSet raw_train = train;
    standardize(train, train.count() ? raw_train : test);
    standardize(test, train.count() ? raw_train : test);
    if (!in.cell_dir.empty()) io::write_emb1(in.cell_dir / "baseline_test.emb1", test);

    std::map<std::string, double> m;
    m["baseline_rap"] = recognition::mean_rap(test, in.workers).value;

    // Nearest-centroid scores for test classes that also occur in training.
    std::vector<std::string> classes;
    for (const auto& c : in.classes) {
      const bool in_train = std::find(train.labels.begin(), train.labels.end(), c) != train.labels.end();
      if (in_train) classes.push_back(c);
    }
    const bool closed_set = !classes.empty() && std::all_of(test.labels.begin(), test.labels.end(), [&](const std::string& l) {
      return std::find(classes.begin(), classes.end(), l) != classes.end();
    });
    if (closed_set && classes.size() >= 2 && test.count() > 0) {
      const std::size_t d = train.dim;
      std::vector<double> centroid(classes.size() * d, 0.0);
      std::vector<double> count(classes.size(), 0.0);
      for (std::size_t i = 0; i < train.count(); ++i) {
        const auto c = static_cast<std::size_t>(std::find(classes.begin(), classes.end(), train.labels[i]) - classes.begin());
        for (std::size_t k = 0; k < d; ++k) centroid[c * d + k] += train.row(i)[k];
        count[c] += 1;
      }
      for (std::size_t c = 0; c < classes.size(); ++c)
        for (std::size_t k = 0; k < d; ++k) centroid[c * d + k] /= count[c];
      recognition::ScoreMatrix s;
      s.rows = test.count();
      s.classes = classes.size();
      s.class_names = classes;
      for (std::size_t i = 0; i < test.count(); ++i) {
        s.labels.push_back(static_cast<std::size_t>(std::find(classes.begin(), classes.end(), test.labels[i]) - classes.begin()));
        for (std::size_t c = 0; c < classes.size(); ++c) {
          double dist = 0;
          for (std::size_t k = 0; k < d; ++k) dist += (test.row(i)[k] - centroid[c * d + k]) * (test.row(i)[k] - centroid[c * d + k]);
          s.scores.push_back(-std::sqrt(dist));
        }
      }
      m["baseline_top1"] = recognition::topk_accuracy(s, 1);
      if (classes.size() >= 3) m["baseline_top3"] = recognition::topk_accuracy(s, 3);
      m["baseline_cap"] = recognition::classification_ap(s).value;
      m["baseline_auc"] = recognition::roc_auc_macro(s).value;
    }
    std::vector<EpochMetrics> out;
    for (std::size_t e = 0; e <= in.epochs; ++e) out.push_back({e, m});
    return out;
  }
};

// ---------------------------------------------------------------- external

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

struct ProcessResult {
  bool timed_out = false;
  int exit_code = -1;
};

/// Runs `command` with /bin/sh, output appended to `log`, killing the process
/// group after `timeout`.
inline ProcessResult run_shell(const std::string& command, const std::filesystem::path& log, std::chrono::seconds timeout) {
  const std::string full = "exec >>" + shell_quote(log.string()) + " 2>&1; " + command;
  const pid_t pid = fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    execl("/bin/sh", "sh", "-c", full.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  ProcessResult r;
  int status = 0;
  while (true) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0) throw Error("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      r.timed_out = true;
      return r;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  return r;
}

/// Parses {"epochs": [{"epoch": e, "metrics": {"name": number, ...}}, ...]}.
inline std::vector<EpochMetrics> parse_metrics_json(const nlohmann::json& j, std::size_t max_epoch) {
  std::vector<EpochMetrics> out;
  try {
    require(j.is_object() && j.contains("epochs") && j.at("epochs").is_array(), "missing \"epochs\" array");
    for (const auto& e : j.at("epochs")) {
      require(e.is_object() && e.contains("epoch") && e.at("epoch").is_number_integer(), "epoch entry needs integer \"epoch\"");
      const auto epoch = e.at("epoch").get<long long>();
      require(epoch >= 0 && static_cast<std::size_t>(epoch) <= max_epoch, "epoch " + std::to_string(epoch) + " out of range");
      require(e.contains("metrics") && e.at("metrics").is_object(), "epoch entry needs \"metrics\" object");
      EpochMetrics m{static_cast<std::size_t>(epoch), {}};
      for (const auto& [name, value] : e.at("metrics").items()) {
        require(value.is_number(), "metric '" + name + "' is not a number");
        m.metrics[name] = value.get<double>();
      }
      for (const auto& prev : out) require(prev.epoch != m.epoch, "duplicate epoch " + std::to_string(epoch));
      out.push_back(std::move(m));
    }
  } catch (const Error& e) {
    throw Error(std::string("metrics schema violation: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("metrics schema violation: ") + e.what());
  }
  return out;
}

/// Manifest written for the evaluator: {"classes": [...], "entries": [{"id", "label", "image"}]}.
inline nlohmann::json eval_manifest(const std::vector<EvalItem>& items, const std::vector<std::string>& classes) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& it : items) entries.push_back({{"id", it.id}, {"label", it.label}, {"image", it.path.filename().string()}});
  return {{"classes", classes}, {"entries", entries}};
}

/// Runs a user command per sweep cell. Placeholders {train_dir}, {test_dir},
/// {train_manifest}, {test_manifest}, {epochs}, {out}, {emb_dir}, {cell_dir}
/// are substituted (shell-quoted); a command with none of them gets
/// "--train-dir D --test-dir D --epochs E --out F" appended. The command must
/// write metrics JSON to {out}, or EMB1 files emb_dir/epoch_<e>.emb1 (or
/// epoch_<e>.test.emb1), from which retrieval AP is computed.
class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(std::string command, std::chrono::seconds timeout = std::chrono::seconds(3600))
      : command_(std::move(command)), timeout_(timeout) {
    require(!command_.empty(), "external evaluator: empty command");
  }

  std::string name() const override { return "cmd:" + command_; }

  std::string render(const EvalInput& in) const {
    const std::map<std::string, std::string> values = {
        {"{train_dir}", (in.cell_dir / "train").string()},
        {"{test_dir}", (in.cell_dir / "test").string()},
        {"{train_manifest}", (in.cell_dir / "train" / "manifest.json").string()},
        {"{test_manifest}", (in.cell_dir / "test" / "manifest.json").string()},
        {"{epochs}", std::to_string(in.epochs)},
        {"{out}", (in.cell_dir / "metrics.json").string()},
        {"{emb_dir}", (in.cell_dir / "emb").string()},
        {"{cell_dir}", in.cell_dir.string()}};
    std::string cmd = command_;
    bool any = false;
    for (const auto& [key, value] : values) {
      for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos)) {
        const auto quoted = key == "{epochs}" ? value : shell_quote(value);
        cmd.replace(pos, key.size(), quoted);
        pos += quoted.size();
        any = true;
      }
    }
    if (!any)
      cmd += " --train-dir " + shell_quote(values.at("{train_dir}")) + " --test-dir " + shell_quote(values.at("{test_dir}")) +
             " --epochs " + std::to_string(in.epochs) + " --out " + shell_quote(values.at("{out}"));
    return cmd;
  }

  static void stage_split(const std::vector<EvalItem>& items, const std::vector<std::string>& classes,
                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& it : items)
      std::filesystem::copy_file(it.path, dir / (it.id + ".bimg"), std::filesystem::copy_options::overwrite_existing);
    std::vector<EvalItem> staged = items;
    for (auto& it : staged) it.path = dir / (it.id + ".bimg");
    io::write_json(dir / "manifest.json", eval_manifest(staged, classes));
  }

  std::vector<EpochMetrics> evaluate(const EvalInput& in) override {
    require(!in.cell_dir.empty(), "external evaluator: cell directory required");
    std::filesystem::create_directories(in.cell_dir / "emb");
    stage_split(in.train, in.classes, in.cell_dir / "train");
    stage_split(in.test, in.classes, in.cell_dir / "test");
    const auto out = in.cell_dir / "metrics.json";
    std::filesystem::remove(out);
    const auto result = run_shell(render(in), in.cell_dir / "evaluator.log", timeout_);
    if (result.timed_out) throw Error("evaluator timed out after " + std::to_string(timeout_.count()) + " s");
    if (result.exit_code != 0)
      throw Error("evaluator exited with status " + std::to_string(result.exit_code) + " (see " +
                  (in.cell_dir / "evaluator.log").string() + ")");
    if (std::filesystem::exists(out)) {
      nlohmann::json j;
      try {
        j = io::read_json(out);
      } catch (const Error& e) {
        throw Error(std::string("metrics schema violation: ") + e.what());
      }
      return parse_metrics_json(j, in.epochs);
    }
    std::vector<EpochMetrics> epochs;
    for (std::size_t e = 0; e <= in.epochs; ++e) {
      auto path = in.cell_dir / "emb" / ("epoch_" + std::to_string(e) + ".test.emb1");
      if (!std::filesystem::exists(path)) path = in.cell_dir / "emb" / ("epoch_" + std::to_string(e) + ".emb1");
      if (!std::filesystem::exists(path)) continue;
      const auto set = io::read_emb1(path);
      epochs.push_back({e, {{"rap", recognition::mean_rap(set).value}}});
    }
    if (epochs.empty()) throw Error("evaluator produced neither " + out.string() + " nor EMB1 files");
    return epochs;
  }

 private:
  std::string command_;
  std::chrono::seconds timeout_;
};

/// "builtin" or "cmd:<command>".
inline std::unique_ptr<Evaluator> make_evaluator(const std::string& spec, std::chrono::seconds timeout = std::chrono::seconds(3600)) {
  if (spec == "builtin") return std::make_unique<BuiltinEvaluator>();
  if (spec.rfind("cmd:", 0) == 0) return std::make_unique<ExternalEvaluator>(spec.substr(4), timeout);
  throw Error("unknown evaluator '" + spec + "' (expected builtin or cmd:\"...\")");
}

}  // namespace imgchain::harness
