#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/core/manifest.hpp"
#include "imgchain/core/sensor_config.hpp"
#include "imgchain/harness/cache.hpp"
#include "imgchain/harness/evaluator.hpp"
#include "imgchain/harness/folds.hpp"
#include "imgchain/io/load.hpp"
#include "imgchain/optics.hpp"
#include "imgchain/pipeline.hpp"

namespace imgchain::harness {

/// Secondary parameter swept outside the main one (one trial per value).
struct GroupParameter {
  std::string name;
  std::vector<double> values;
};

struct SweepPlan {
  std::string trial_id = "trial";
  std::string parameter = "focal_length_m";
  std::vector<double> values;
  SensorConfig config;
  pipeline::PreprocessMode mode = pipeline::PreprocessMode::Crop;
  radiometry::NoiseMode noise = radiometry::NoiseMode::Gaussian;
  bool quantize = true;
  std::string evaluator = "builtin";
  std::size_t epochs = 0;
  std::vector<std::size_t> folds;  // empty: all
  std::optional<GroupParameter> group;
  std::size_t timeout_s = 3600;
};

namespace detail {

inline std::vector<double> values_from_json(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  const double lo = j.at("start").get<double>(), hi = j.at("stop").get<double>(), step = j.at("step").get<double>();
  require(step > 0.0 && hi >= lo, "plan: range needs step > 0 and stop >= start");
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

}  // namespace detail

/// Plan JSON: {"trial_id", "parameter", "values": [..] | {"start","stop","step"},
/// "config": {...} | "config_path": "...", "mode", "noise", "quantize", "evaluator",
/// "epochs", "folds": [..], "group": {"parameter", "values"}, "timeout_s"}.
inline SweepPlan sweep_plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  SweepPlan p;
  try {
    p.trial_id = j.value("trial_id", p.trial_id);
    p.parameter = j.value("parameter", p.parameter);
    p.values = detail::values_from_json(j.at("values"));
    if (j.contains("config")) p.config = sensor_config_from_json(j.at("config"));
    else {
      std::filesystem::path cp = j.at("config_path").get<std::string>();
      if (cp.is_relative()) cp = base_dir / cp;
      p.config = sensor_config_from_json(io::read_json(cp));
    }
    p.mode = pipeline::preprocess_mode_from_string(j.value("mode", std::string("crop")));
    p.noise = radiometry::noise_mode_from_string(j.value("noise", std::string("gaussian")));
    p.quantize = j.value("quantize", true);
    p.evaluator = j.value("evaluator", p.evaluator);
    p.epochs = j.value("epochs", std::size_t{0});
    if (j.contains("folds")) p.folds = j.at("folds").get<std::vector<std::size_t>>();
    if (j.contains("group"))
      p.group = GroupParameter{j.at("group").at("parameter").get<std::string>(), detail::values_from_json(j.at("group").at("values"))};
    p.timeout_s = j.value("timeout_s", p.timeout_s);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("sweep plan: ") + e.what());
  }
  require(!p.values.empty(), "sweep plan: no parameter values");
  for (double v : p.values) with_parameter(p.config, p.parameter, v);
  if (p.group)
    for (double g : p.group->values) with_parameter(p.config, p.group->name, g);
  return p;
}

/// One measurement of the sweep.
struct MetricRecord {
  std::string trial_id;
  std::size_t fold = 0;
  std::string param_name;
  double param_value = 0;
  std::size_t epoch = 0;
  std::string metric;
  double value = 0;
};

struct CellFailure {
  std::string trial_id;
  std::size_t fold = 0;
  double param_value = 0;
  std::string message;
};

struct SweepOptions {
  std::filesystem::path out_dir;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::optional<ClassSplit> split;  // zero-shot
  std::function<void(const std::string&)> progress;
};

struct SweepResult {
  std::vector<MetricRecord> records;
  std::vector<CellFailure> failures;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return failures.empty(); }
};

inline std::string trial_name(const SweepPlan& plan, std::optional<double> group_value) {
  if (!group_value) return plan.trial_id;
  std::ostringstream s;
  s << plan.trial_id << ":" << plan.group->name << "=" << *group_value;
  return s.str();
}

/// Throws if any train item belongs to an evaluation class or any staged
/// train file's manifest lists one.
inline void audit_zero_shot(const std::vector<EvalItem>& train, const ClassSplit& split) {
  for (const auto& it : train)
    if (split.is_eval(it.label)) throw Error("zero-shot audit: eval-class image '" + it.id + "' in training split");
}

/// Algorithm loop: folds outer, (group values,) parameter values inner,
/// epochs inside the evaluator. Simulations go through a content-addressed
/// cache shared by all cells, so a (config, entry) pair is simulated once.
inline SweepResult run_sweep(const SweepPlan& plan, const FoldAssignment& folds, const DatasetManifest& manifest,
                             const SweepOptions& opt) {
  require(folds.fold_of.size() == manifest.entries.size(), "run_sweep: fold assignment does not match manifest");
  SweepResult result;
  SimulationCache cache(opt.out_dir / "cache");
  auto evaluator = make_evaluator(plan.evaluator, std::chrono::seconds(plan.timeout_s));

  // Warn about values that would super-resolve some entry.
  for (const auto& e : manifest.entries) {
    double src = 0;
    try {
      src = io::load_metadata(e.metadata).source_gsd_m;
    } catch (const Error&) {
      continue;
    }
    for (double v : plan.values) {
      const auto b = optics::frequency_budget(with_parameter(plan.config, plan.parameter, v));
      if (b.gsd_m < src) {
        result.warnings.push_back("value " + std::to_string(v) + " gives GSD " + std::to_string(b.gsd_m) +
                                  " m below source GSD " + std::to_string(src) + " m of '" + e.instance_id + "'");
        break;
      }
    }
  }

  std::vector<std::size_t> fold_list = plan.folds;
  if (fold_list.empty())
    for (std::size_t i = 0; i < folds.k; ++i) fold_list.push_back(i);
  std::vector<std::optional<double>> groups;
  if (plan.group)
    for (double g : plan.group->values) groups.emplace_back(g);
  else groups.emplace_back(std::nullopt);

  pipeline::SimulationOptions sim;
  sim.seed = opt.seed;
  sim.mode = plan.mode;
  sim.noise = plan.noise;
  sim.quantize = plan.quantize;

  for (std::size_t fold : fold_list) {
    require(fold < folds.k, "run_sweep: fold " + std::to_string(fold) + " out of range");
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const auto& label = manifest.entries[i].class_label;
      const bool in_fold = folds.fold_of[i] == fold;
      if (opt.split) {
        if (!in_fold && opt.split->is_train(label)) train_idx.push_back(i);
        if (in_fold && opt.split->is_eval(label)) test_idx.push_back(i);
      } else {
        (in_fold ? test_idx : train_idx).push_back(i);
      }
    }
    for (const auto& group : groups) {
      const std::string trial = trial_name(plan, group);
      const SensorConfig base = group ? with_parameter(plan.config, plan.group->name, *group) : plan.config;
      for (double value : plan.values) {
        const SensorConfig config = with_parameter(base, plan.parameter, value);
        std::ostringstream cell_name;
        cell_name << "fold" << fold << "_" << plan.parameter << "=" << value;
        if (group) cell_name << "_" << plan.group->name << "=" << *group;
        const auto cell_dir = opt.out_dir / "cells" / cell_name.str();
        if (opt.progress) opt.progress(trial + " " + cell_name.str());
        try {
          std::vector<std::string> errors(manifest.entries.size());
          auto simulate_all = [&](const std::vector<std::size_t>& idx, std::vector<EvalItem>& items) {
            items.resize(idx.size());
            parallel_for(idx.size(), opt.workers, [&](std::size_t n) {
              const auto& entry = manifest.entries[idx[n]];
              try {
                cache.get(config, entry, sim);
              } catch (const std::exception& e) {
                errors[idx[n]] = entry.instance_id + ": " + e.what();
              }
              items[n] = {entry.instance_id, entry.class_label, cache.path_for(SimulationCache::key(config, entry.instance_id, sim))};
            });
          };
          EvalInput in;
          simulate_all(train_idx, in.train);
          simulate_all(test_idx, in.test);
          for (const auto& e : errors)
            if (!e.empty()) throw Error("simulation failed for " + e);
          if (opt.split) audit_zero_shot(in.train, *opt.split);
          in.epochs = plan.epochs;
          in.cell_dir = cell_dir;
          in.classes = manifest.classes;
          in.workers = opt.workers;
          std::filesystem::create_directories(cell_dir);
          for (const auto& em : evaluator->evaluate(in))
            for (const auto& [name, v] : em.metrics)
              result.records.push_back({trial, fold, plan.parameter, value, em.epoch, name, v});
        } catch (const std::exception& e) {
          result.failures.push_back({trial, fold, value, e.what()});
        }
      }
    }
  }
  result.cache_hits = cache.hits();
  result.cache_misses = cache.misses();
  return result;
}

}  // namespace imgchain::harness
