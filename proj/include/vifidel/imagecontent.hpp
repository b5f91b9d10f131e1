// Copyright 2026 the vifidel authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vifidel/errors.hpp"
#include "vifidel/textproc.hpp"

namespace vifidel {

/// One object label, with a detector confidence when it came from a detector.
/// Gold annotations carry no confidence and bypass thresholding.
struct Detection {
  std::string label;
  std::optional<double> confidence;
};

enum class SourceTag { gold, detector, combined };

/// The post-threshold object labels of one image.
struct ImageContent {
  std::string image_id;
  std::vector<Detection> detections;
  SourceTag source = SourceTag::gold;
};

enum class MergeMode { union_unique, concat };

/// Detector operating points: d80 keeps detections above 0.6, d500 above 0.4.
inline double detection_threshold_for_profile(std::string_view profile) {
  if (profile == "d80") return 0.6;
  if (profile == "d500") return 0.4;
  throw DomainError("unknown detector profile '" + std::string(profile) + "'");
}

/// Loads a detections file, one JSON object per line:
///   {"image_id": str, "objects": [{"label": str, "score": number?}, ...]}
/// Scored detections below `threshold` are removed; unscored detections
/// (gold annotations) are always kept.
inline std::map<std::string, ImageContent> load_detections(const std::filesystem::path& path,
                                                           double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw DomainError("detection threshold must be in [0, 1]");
  }
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open detections file: " + path.string());

  std::map<std::string, ImageContent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), lineno);
    }
    if (!rec.is_object() || !rec.contains("image_id") || !rec["image_id"].is_string() ||
        !rec.contains("objects") || !rec["objects"].is_array()) {
      throw ParseError("detections record needs string 'image_id' and array 'objects'", lineno);
    }
    ImageContent content;
    content.image_id = rec["image_id"].get<std::string>();
    bool any_scored = false;
    for (const auto& obj : rec["objects"]) {
      if (!obj.is_object() || !obj.contains("label") || !obj["label"].is_string()) {
        throw ParseError("object needs a string 'label'", lineno);
      }
      Detection det;
      det.label = obj["label"].get<std::string>();
      if (det.label.empty()) throw ParseError("object label must be nonempty", lineno);
      if (obj.contains("score") && !obj["score"].is_null()) {
        if (!obj["score"].is_number()) throw ParseError("object score must be a number", lineno);
        double score = obj["score"].get<double>();
        if (score < 0.0 || score > 1.0) throw ParseError("object score outside [0, 1]", lineno);
        det.confidence = score;
        any_scored = true;
        if (score < threshold) continue;
      }
      content.detections.push_back(std::move(det));
    }
    content.source = any_scored ? SourceTag::detector : SourceTag::gold;
    if (!out.emplace(content.image_id, std::move(content)).second) {
      throw ParseError("duplicate image_id '" + rec["image_id"].get<std::string>() + "'", lineno);
    }
  }
  return out;
}

/// Merges two sources for the same image. union_unique keeps one instance per
/// distinct label (first occurrence wins, scanning a then b); concat keeps
/// every instance.
inline ImageContent merge_sources(const ImageContent& a, const ImageContent& b, MergeMode mode) {
  if (a.image_id != b.image_id) {
    throw AlignmentError("merge_sources: image ids differ ('" + a.image_id + "' vs '" +
                         b.image_id + "')");
  }
  ImageContent merged;
  merged.image_id = a.image_id;
  merged.source = SourceTag::combined;
  if (mode == MergeMode::concat) {
    merged.detections = a.detections;
    merged.detections.insert(merged.detections.end(), b.detections.begin(), b.detections.end());
    return merged;
  }
  std::set<std::string> seen;
  for (const auto* side : {&a, &b}) {
    for (const Detection& det : side->detections) {
      if (seen.insert(det.label).second) merged.detections.push_back(det);
    }
  }
  return merged;
}

/// The image's normalized label distribution. With binarize off, a label's
/// weight is its instance count over the total; with binarize on, every
/// distinct label gets equal weight. Labels with no resolvable embedding are
/// dropped before normalization.
inline WordDistribution build_image_nbow(const ImageContent& content, bool binarize,
                                         const EmbeddingTable& table,
                                         const LookupPolicy& policy = {}) {
  std::map<std::string, double> counts;
  for (const Detection& det : content.detections) {
    if (binarize) {
      counts[det.label] = 1.0;
    } else {
      counts[det.label] += 1.0;
    }
  }
  return WordDistribution::from_counts(counts, table, policy);
}

}  // namespace vifidel
