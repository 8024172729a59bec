#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/harness/sweep.hpp"
#include "imgchain/io/load.hpp"

namespace imgchain::harness {

/// Shortest round-trip decimal form ("." separator, locale independent).
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline constexpr const char* kRecordsHeader = "trial_id,fold,param_name,param_value,epoch,metric,value";

inline std::string records_csv(const std::vector<MetricRecord>& records) {
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto& r : records)
    out += csv_field(r.trial_id) + "," + std::to_string(r.fold) + "," + csv_field(r.param_name) + "," +
           format_number(r.param_value) + "," + std::to_string(r.epoch) + "," + csv_field(r.metric) + "," +
           format_number(r.value) + "\n";
  return out;
}

inline nlohmann::json records_json(const std::vector<MetricRecord>& records) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : records)
    a.push_back({{"trial_id", r.trial_id}, {"fold", r.fold}, {"param_name", r.param_name}, {"param_value", r.param_value},
                 {"epoch", r.epoch}, {"metric", r.metric}, {"value", r.value}});
  return a;
}

/// Fold statistics of one metric at one parameter value (final epoch).
struct CurvePoint {
  double param_value = 0;
  double mean = 0;
  double std = 0;  // population, over folds
  std::size_t folds = 0;
  double normalized = 0;  // min-max over the curve's means
};

struct Curve {
  std::string trial_id;
  std::string metric;
  std::vector<CurvePoint> points;  // in first-seen parameter order
  bool constant = false;           // min == max: normalized column is all zero

  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].mean > points[best].mean) best = i;
    return best;
  }
};

/// Builds per-(trial, metric) curves from the final epoch of each cell.
inline std::vector<Curve> build_curves(const std::vector<MetricRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::size_t> last_epoch;
  for (const auto& r : records) {
    auto& e = last_epoch[{r.trial_id, r.metric}];
    e = std::max(e, r.epoch);
  }
  std::vector<Curve> curves;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::map<std::pair<std::size_t, double>, std::vector<double>> samples;
  std::map<std::size_t, std::vector<double>> order;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.trial_id, r.metric);
    if (r.epoch != last_epoch[key]) continue;
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, curves.size()).first;
      curves.push_back({r.trial_id, r.metric, {}, false});
    }
    auto& vals = samples[{it->second, r.param_value}];
    if (vals.empty()) order[it->second].push_back(r.param_value);
    vals.push_back(r.value);
  }
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (double v : order[c]) {
      const auto& s = samples[{c, v}];
      double m = 0;
      for (double x : s) m += x;
      m /= static_cast<double>(s.size());
      double var = 0;
      for (double x : s) var += (x - m) * (x - m);
      curves[c].points.push_back({v, m, std::sqrt(var / static_cast<double>(s.size())), s.size(), 0.0});
    }
    double lo = curves[c].points.front().mean, hi = lo;
    for (const auto& p : curves[c].points) {
      lo = std::min(lo, p.mean);
      hi = std::max(hi, p.mean);
    }
    curves[c].constant = !(hi > lo);
    for (auto& p : curves[c].points) p.normalized = curves[c].constant ? 0.0 : (p.mean - lo) / (hi - lo);
  }
  return curves;
}

/// Optimal parameter per trial for one metric, with its optical Q.
struct OptimumRow {
  std::string trial_id;
  double param_value = 0;
  double value = 0;
  double q = std::numeric_limits<double>::quiet_NaN();
};

struct OptimalQSummary {
  std::string metric;
  std::vector<OptimumRow> rows;
  double mu_q = 0, sigma_q = 0;  // population std over trials
  double val_min = 0, val_max = 0;
};

using QFunction = std::function<double(const std::string& trial_id, double param_value)>;

inline std::vector<OptimalQSummary> optimal_q_table(const std::vector<Curve>& curves, const QFunction& q_of) {
  std::map<std::string, OptimalQSummary> by_metric;
  std::vector<std::string> metric_order;
  for (const auto& c : curves) {
    if (!by_metric.count(c.metric)) metric_order.push_back(c.metric);
    auto& s = by_metric[c.metric];
    s.metric = c.metric;
    const auto& best = c.points[c.argmax()];
    s.rows.push_back({c.trial_id, best.param_value, best.mean, q_of ? q_of(c.trial_id, best.param_value) : std::nan("")});
  }
  std::vector<OptimalQSummary> out;
  for (const auto& m : metric_order) {
    auto s = by_metric[m];
    double sum = 0;
    s.val_min = s.val_max = s.rows.front().value;
    for (const auto& r : s.rows) {
      sum += r.q;
      s.val_min = std::min(s.val_min, r.value);
      s.val_max = std::max(s.val_max, r.value);
    }
    s.mu_q = sum / static_cast<double>(s.rows.size());
    double var = 0;
    for (const auto& r : s.rows) var += (r.q - s.mu_q) * (r.q - s.mu_q);
    s.sigma_q = std::sqrt(var / static_cast<double>(s.rows.size()));
    out.push_back(std::move(s));
  }
  return out;
}

/// Q of the plan's configuration for a trial id and parameter value.
inline QFunction plan_q_function(const SweepPlan& plan) {
  return [plan](const std::string& trial, double value) {
    SensorConfig c = plan.config;
    if (plan.group) {
      for (double g : plan.group->values)
        if (trial_name(plan, g) == trial) c = with_parameter(c, plan.group->name, g);
    }
    return optics::frequency_budget(with_parameter(c, plan.parameter, value)).q;
  };
}

/// Writes records.csv and records.json; with plot_data also plot/<metric>.csv,
/// plot/argmax.json and plot/optimal_q.csv.
inline void emit_results(const std::vector<MetricRecord>& records, const std::filesystem::path& out_dir, bool plot_data,
                         const QFunction& q_of = {}) {
  require(!records.empty(), "emit_results: no records");
  io::write_file_atomic(out_dir / "records.csv", records_csv(records));
  io::write_file_atomic(out_dir / "records.json", records_json(records).dump(2) + "\n");
  if (!plot_data) return;
  const auto curves = build_curves(records);
  std::map<std::string, std::string> per_metric;
  nlohmann::json argmax = nlohmann::json::array();
  for (const auto& c : curves) {
    auto& text = per_metric[c.metric];
    if (text.empty()) text = "trial_id,param_value,mean,std,folds,mean_normalized,constant\n";
    for (const auto& p : c.points)
      text += csv_field(c.trial_id) + "," + format_number(p.param_value) + "," + format_number(p.mean) + "," +
              format_number(p.std) + "," + std::to_string(p.folds) + "," + format_number(p.normalized) + "," +
              (c.constant ? "1" : "0") + "\n";
    const auto& best = c.points[c.argmax()];
    nlohmann::json a{{"trial_id", c.trial_id}, {"metric", c.metric}, {"param_value", best.param_value},
                     {"mean", best.mean}, {"std", best.std}, {"constant", c.constant}};
    if (q_of) a["q"] = q_of(c.trial_id, best.param_value);
    argmax.push_back(a);
  }
  for (const auto& [metric, text] : per_metric) io::write_file_atomic(out_dir / "plot" / (metric + ".csv"), text);
  io::write_file_atomic(out_dir / "plot" / "argmax.json", argmax.dump(2) + "\n");
  if (q_of) {
    std::string text = "metric,mu_q,sigma_q,val_min,val_max,trials\n";
    for (const auto& s : optimal_q_table(curves, q_of))
      text += csv_field(s.metric) + "," + format_number(s.mu_q) + "," + format_number(s.sigma_q) + "," +
              format_number(s.val_min) + "," + format_number(s.val_max) + "," + std::to_string(s.rows.size()) + "\n";
    io::write_file_atomic(out_dir / "plot" / "optimal_q.csv", text);
  }
}

}  // namespace imgchain::harness
