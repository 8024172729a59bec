#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/core/manifest.hpp"
#include "imgchain/hash.hpp"
#include "imgchain/rng.hpp"

namespace imgchain::harness {

/// Class-stratified fold index for every manifest entry.
struct FoldAssignment {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<std::size_t> fold_of;  // parallel to manifest entries
  std::vector<std::string> warnings;

  std::vector<std::size_t> members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }
};

/// Within each class the entries are shuffled and dealt round-robin, so per
/// class fold sizes differ by at most one. The dealing offset carries over
/// between classes to balance total fold sizes.
inline FoldAssignment make_folds(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("make_folds: need at least 2 folds (k=" + std::to_string(k) + ")");
  FoldAssignment a;
  a.k = k;
  a.seed = seed;
  a.fold_of.assign(manifest.entries.size(), 0);
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) by_class[manifest.entries[i].class_label].push_back(i);
  std::size_t offset = 0;
  for (const auto& label : manifest.classes) {
    auto it = by_class.find(label);
    if (it == by_class.end()) continue;
    auto& members = it->second;
    // Shuffle in instance-id order so the result does not depend on manifest order.
    std::sort(members.begin(), members.end(),
              [&](std::size_t x, std::size_t y) { return manifest.entries[x].instance_id < manifest.entries[y].instance_id; });
    rng::SplitMix gen(splitmix64(seed ^ fnv1a64(label)));
    rng::shuffle(members, gen);
    if (members.size() < k)
      a.warnings.push_back("class '" + label + "' has " + std::to_string(members.size()) + " entries: class too small for " +
                           std::to_string(k) + " folds");
    for (std::size_t j = 0; j < members.size(); ++j) a.fold_of[members[j]] = (offset + j) % k;
    offset = (offset + members.size()) % k;
  }
  return a;
}

inline nlohmann::json to_json(const FoldAssignment& a, const DatasetManifest& m) {
  nlohmann::json folds = nlohmann::json::object();
  for (std::size_t i = 0; i < a.fold_of.size(); ++i) folds[m.entries[i].instance_id] = a.fold_of[i];
  return {{"k", a.k}, {"seed", a.seed}, {"stratified", a.stratified}, {"folds", folds}, {"warnings", a.warnings}};
}

/// Train/eval class groups. In zero-shot mode the groups must be disjoint.
struct ClassSplit {
  std::vector<std::string> train_classes;
  std::vector<std::string> eval_classes;
  bool disjoint = true;

  bool is_train(const std::string& c) const {
    return std::find(train_classes.begin(), train_classes.end(), c) != train_classes.end();
  }
  bool is_eval(const std::string& c) const {
    return std::find(eval_classes.begin(), eval_classes.end(), c) != eval_classes.end();
  }
};

inline ClassSplit split_classes(const DatasetManifest& manifest, std::vector<std::string> train,
                                std::vector<std::string> eval, bool zero_shot = true) {
  require(!eval.empty(), "split_classes: evaluation class list is empty");
  for (const auto* list : {&train, &eval})
    for (const auto& c : *list) manifest.class_index(c);
  std::set<std::string> t(train.begin(), train.end());
  std::vector<std::string> overlap;
  for (const auto& c : eval)
    if (t.count(c)) overlap.push_back(c);
  if (zero_shot && !overlap.empty()) {
    std::string names;
    for (const auto& c : overlap) names += (names.empty() ? "" : ", ") + c;
    throw Error("split_classes: train and eval classes overlap in zero-shot mode (" + names + ")");
  }
  return {std::move(train), std::move(eval), overlap.empty()};
}

inline std::vector<std::string> read_class_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] != '#') out.push_back(line.substr(first));
    pos = end + 1;
  }
  return out;
}

}  // namespace imgchain::harness
