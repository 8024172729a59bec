#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/io/emb1.hpp"
#include "imgchain/parallel.hpp"

namespace imgchain::recognition {

/// M x M Euclidean distances, row-major.
inline std::vector<double> pairwise_distances(const EmbeddingSet& set) {
  const std::size_t m = set.count();
  std::vector<double> d(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      double s = 0;
      const auto a = set.row(i), b = set.row(j);
      for (std::size_t k = 0; k < set.dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      d[i * m + j] = d[j * m + i] = std::sqrt(s);
    }
  return d;
}

/// AP of a 0/1 relevance list in rank order: (1/R) * sum_k x_k * p_k.
inline double average_precision(const std::vector<bool>& relevant) {
  double hits = 0, sum = 0;
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (!relevant[k]) continue;
    hits += 1;
    sum += hits / static_cast<double>(k + 1);
  }
  if (hits == 0) throw Error("average precision undefined: no relevant items");
  return sum / hits;
}

/// Gallery (all other vectors) ordered by ascending distance to the probe,
/// ties by instance id.
inline std::vector<std::size_t> ranked_gallery(std::size_t probe, const EmbeddingSet& set, const std::vector<double>& dist) {
  const std::size_t m = set.count();
  std::vector<std::size_t> order;
  order.reserve(m - 1);
  for (std::size_t j = 0; j < m; ++j)
    if (j != probe) order.push_back(j);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = dist[probe * m + a], db = dist[probe * m + b];
    if (da != db) return da < db;
    return set.ids[a] < set.ids[b];
  });
  return order;
}

inline double retrieval_ap(std::size_t probe, const EmbeddingSet& set, const std::vector<double>& dist) {
  require(probe < set.count(), "retrieval_ap: probe index out of range");
  require(dist.size() == set.count() * set.count(), "retrieval_ap: distance matrix size mismatch");
  const auto order = ranked_gallery(probe, set, dist);
  std::vector<bool> relevant(order.size());
  bool any = false;
  for (std::size_t k = 0; k < order.size(); ++k) any |= (relevant[k] = set.labels[order[k]] == set.labels[probe]);
  if (!any) throw Error("undefined AP for probe '" + set.ids[probe] + "': no gallery matches");
  return average_precision(relevant);
}

inline double retrieval_ap(std::size_t probe, const EmbeddingSet& set) {
  return retrieval_ap(probe, set, pairwise_distances(set));
}

struct RapResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t probes = 0;
  std::vector<std::string> excluded_classes;  // singleton classes
  std::vector<double> per_probe;              // NaN for excluded probes

  nlohmann::json to_json() const {
    return {{"metric", "rap"}, {"value", std::isnan(value) ? nlohmann::json() : nlohmann::json(value)},
            {"probes", probes}, {"excluded_classes", excluded_classes}};
  }
};

/// Retrieval AP averaged over every vector as probe. Probes of singleton
/// classes are excluded and their classes reported.
inline RapResult mean_rap(const EmbeddingSet& set, std::size_t workers = 1) {
  set.validate();
  RapResult r;
  std::map<std::string, std::size_t> counts;
  for (const auto& l : set.labels) ++counts[l];
  for (const auto& [label, n] : counts)
    if (n < 2) r.excluded_classes.push_back(label);
  const auto dist = pairwise_distances(set);
  r.per_probe.assign(set.count(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(set.count(), workers, [&](std::size_t i) {
    if (counts.at(set.labels[i]) >= 2) r.per_probe[i] = retrieval_ap(i, set, dist);
  });
  double sum = 0;
  for (double v : r.per_probe)
    if (!std::isnan(v)) {
      sum += v;
      ++r.probes;
    }
  if (r.probes) r.value = sum / static_cast<double>(r.probes);
  return r;
}

/// M x C class scores with ground-truth class indices.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t classes = 0;
  std::vector<double> scores;  // row-major
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;

  double operator()(std::size_t r, std::size_t c) const { return scores[r * classes + c]; }

  void validate() const {
    require(scores.size() == rows * classes, "score matrix: size does not match rows x classes");
    require(labels.size() == rows, "score matrix: one label per row required");
    for (double v : scores) require(std::isfinite(v), "score matrix: non-finite score");
    for (auto l : labels) require(l < classes, "score matrix: label out of range");
  }
};

/// Fraction of rows whose true class is among the k highest scores; equal
/// scores rank the lower class index first.
inline double topk_accuracy(const ScoreMatrix& s, std::size_t k) {
  s.validate();
  if (k < 1 || k > s.classes) throw Error("topk_accuracy: k=" + std::to_string(k) + " outside [1, " + std::to_string(s.classes) + "]");
  require(s.rows > 0, "topk_accuracy: no rows");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < s.rows; ++r) {
    const std::size_t t = s.labels[r];
    const double st = s(r, t);
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < s.classes; ++c)
      if (s(r, c) > st || (s(r, c) == st && c < t)) ++ahead;
    if (ahead < k) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(s.rows);
}

/// Macro average over classes; classes lacking positives or negatives are skipped.
struct MacroResult {
  std::string metric;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_class;  // NaN when skipped
  std::vector<std::size_t> skipped;

  nlohmann::json to_json(const std::vector<std::string>& names = {}) const {
    nlohmann::json skipped_names = nlohmann::json::array();
    for (auto c : skipped) skipped_names.push_back(c < names.size() ? nlohmann::json(names[c]) : nlohmann::json(c));
    nlohmann::json pc = nlohmann::json::array();
    for (double v : per_class) pc.push_back(std::isnan(v) ? nlohmann::json() : nlohmann::json(v));
    return {{"metric", metric}, {"value", std::isnan(value) ? nlohmann::json() : nlohmann::json(value)},
            {"per_class", pc}, {"skipped_classes", skipped_names}};
  }
};

namespace detail {

template <typename PerClass>
MacroResult macro(const ScoreMatrix& s, const char* name, PerClass per_class) {
  s.validate();
  MacroResult r{name, std::numeric_limits<double>::quiet_NaN(), {}, {}};
  double sum = 0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < s.classes; ++c) {
    std::size_t pos = 0;
    for (auto l : s.labels) pos += l == c;
    if (pos == 0 || pos == s.rows) {
      r.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      r.skipped.push_back(c);
      continue;
    }
    r.per_class.push_back(per_class(c));
    sum += r.per_class.back();
    ++used;
  }
  if (used) r.value = sum / static_cast<double>(used);
  return r;
}

}  // namespace detail

/// One-vs-rest ROC AUC per class via the rank statistic (ties count 1/2).
inline MacroResult roc_auc_macro(const ScoreMatrix& s) {
  return detail::macro(s, "auc", [&](std::size_t c) {
    std::vector<std::size_t> idx(s.rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s(a, c) < s(b, c); });
    double rank_sum = 0, pos = 0;
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && s(idx[j], c) == s(idx[i], c)) ++j;
      const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
      for (std::size_t t = i; t < j; ++t)
        if (s.labels[idx[t]] == c) {
          rank_sum += avg_rank;
          pos += 1;
        }
      i = j;
    }
    const double neg = static_cast<double>(s.rows) - pos;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
  });
}

/// Per-class AP over rows sorted by descending score (equal scores: lower row
/// index first), macro averaged.
inline MacroResult classification_ap(const ScoreMatrix& s) {
  return detail::macro(s, "cap", [&](std::size_t c) {
    std::vector<std::size_t> idx(s.rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s(a, c) > s(b, c); });
    std::vector<bool> relevant(s.rows);
    for (std::size_t k = 0; k < s.rows; ++k) relevant[k] = s.labels[idx[k]] == c;
    return average_precision(relevant);
  });
}

/// Scores CSV: header "id,label,<class1>,<class2>,...", one row per sample.
inline ScoreMatrix read_scores_csv(const std::string& text) {
  ScoreMatrix s;
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t a = 0;
    while (true) {
      const auto b = line.find(',', a);
      cells.push_back(line.substr(a, b == std::string::npos ? std::string::npos : b - a));
      if (b == std::string::npos) break;
      a = b + 1;
    }
    rows.push_back(std::move(cells));
  }
  require(!rows.empty() && rows[0].size() >= 3, "scores CSV: header must be id,label,<classes...>");
  s.class_names.assign(rows[0].begin() + 2, rows[0].end());
  s.classes = s.class_names.size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == s.classes + 2, "scores CSV: row " + std::to_string(r) + " has wrong column count");
    const auto it = std::find(s.class_names.begin(), s.class_names.end(), rows[r][1]);
    require(it != s.class_names.end(), "scores CSV: unknown label '" + rows[r][1] + "'");
    s.labels.push_back(static_cast<std::size_t>(it - s.class_names.begin()));
    for (std::size_t c = 0; c < s.classes; ++c) {
      try {
        s.scores.push_back(std::stod(rows[r][c + 2]));
      } catch (const std::exception&) {
        throw Error("scores CSV: bad number '" + rows[r][c + 2] + "' in row " + std::to_string(r));
      }
    }
  }
  s.rows = s.labels.size();
  s.validate();
  return s;
}

}  // namespace imgchain::recognition
