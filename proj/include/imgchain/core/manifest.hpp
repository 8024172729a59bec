#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgchain/error.hpp"

namespace imgchain {

struct ManifestEntry {
  std::filesystem::path image;
  std::filesystem::path metadata;
  std::string class_label;
  std::string instance_id;
};

/// List of dataset images with their labels. Paths are absolute once loaded.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> classes;

  std::size_t class_index(const std::string& label) const {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error("unknown class '" + label + "'");
    return static_cast<std::size_t>(it - classes.begin());
  }

  std::map<std::string, std::size_t> class_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& c : classes) counts[c] = 0;
    for (const auto& e : entries) ++counts[e.class_label];
    return counts;
  }

  /// Manifest restricted to the given entry indices (class list preserved).
  DatasetManifest subset(const std::vector<std::size_t>& indices) const {
    DatasetManifest out;
    out.classes = classes;
    for (auto i : indices) out.entries.push_back(entries.at(i));
    return out;
  }
};

/// Manifest JSON: {"classes": [...], "entries": [{"image", "metadata", "class", "id"}]}.
/// Relative paths resolve against `base_dir`. A missing class list is derived
/// from the entries in order of first appearance.
inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  DatasetManifest m;
  try {
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.image = e.at("image").get<std::string>();
      entry.metadata = e.at("metadata").get<std::string>();
      entry.class_label = e.at("class").get<std::string>();
      entry.instance_id = e.at("id").get<std::string>();
      if (entry.image.is_relative()) entry.image = base_dir / entry.image;
      if (entry.metadata.is_relative()) entry.metadata = base_dir / entry.metadata;
      m.entries.push_back(std::move(entry));
    }
    if (j.contains("classes")) {
      m.classes = j.at("classes").get<std::vector<std::string>>();
    } else {
      for (const auto& e : m.entries)
        if (std::find(m.classes.begin(), m.classes.end(), e.class_label) == m.classes.end())
          m.classes.push_back(e.class_label);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest: ") + e.what());
  }
  return m;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["classes"] = m.classes;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries)
    j["entries"].push_back(
        {{"image", e.image.string()}, {"metadata", e.metadata.string()}, {"class", e.class_label}, {"id", e.instance_id}});
  return j;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

enum class IssueKind { DuplicateId, MissingFile, UnknownClass, DuplicateClass, ClassTooSmall };

struct ManifestIssue {
  IssueKind kind;
  bool warning = false;  // warnings do not invalidate the manifest
  std::string message;
};

struct ValidationReport {
  std::vector<ManifestIssue> issues;

  bool ok() const {
    return std::none_of(issues.begin(), issues.end(), [](const ManifestIssue& i) { return !i.warning; });
  }
  std::size_t count(IssueKind k) const {
    return static_cast<std::size_t>(
        std::count_if(issues.begin(), issues.end(), [k](const ManifestIssue& i) { return i.kind == k; }));
  }
};

struct ManifestCheck {
  std::size_t fold_count = 10;
  bool check_files = true;
};

/// Report-only validation: never throws for content problems.
inline ValidationReport validate_manifest(const DatasetManifest& m, const ManifestCheck& check = {}) {
  ValidationReport report;
  std::set<std::string> seen_ids;
  for (const auto& e : m.entries) {
    if (!seen_ids.insert(e.instance_id).second)
      report.issues.push_back({IssueKind::DuplicateId, false, "duplicate id '" + e.instance_id + "'"});
    if (std::find(m.classes.begin(), m.classes.end(), e.class_label) == m.classes.end())
      report.issues.push_back(
          {IssueKind::UnknownClass, false, "entry '" + e.instance_id + "' has unlisted class '" + e.class_label + "'"});
    if (check.check_files) {
      std::error_code ec;
      if (!std::filesystem::is_regular_file(e.image, ec))
        report.issues.push_back({IssueKind::MissingFile, false, "missing image file " + e.image.string()});
      if (!std::filesystem::is_regular_file(e.metadata, ec))
        report.issues.push_back({IssueKind::MissingFile, false, "missing metadata file " + e.metadata.string()});
    }
  }
  std::set<std::string> seen_classes;
  for (const auto& c : m.classes)
    if (!seen_classes.insert(c).second)
      report.issues.push_back({IssueKind::DuplicateClass, false, "duplicate class '" + c + "'"});
  for (const auto& [label, n] : m.class_counts()) {
    if (n < check.fold_count)
      report.issues.push_back({IssueKind::ClassTooSmall, true,
                               "class '" + label + "' has " + std::to_string(n) + " entries: class too small for " +
                                   std::to_string(check.fold_count) + " folds"});
  }
  return report;
}

}  // namespace imgchain
