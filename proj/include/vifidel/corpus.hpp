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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vifidel/errors.hpp"
#include "vifidel/evalharness.hpp"
#include "vifidel/metric.hpp"
#include "vifidel/util.hpp"

namespace vifidel {

/// One caption to score: {"image_id", "candidate_id", "caption"}.
struct CaptionItem {
  std::string image_id;
  std::string candidate_id;
  std::string caption;
};

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path.string());
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
    if (!rec.is_object()) throw ParseError("expected a JSON object", lineno);
    fn(rec, lineno);
  }
}

inline std::string require_string(const nlohmann::json& rec, const char* key, std::size_t lineno) {
  if (!rec.contains(key) || !rec[key].is_string()) {
    throw ParseError("missing or non-string field '" + std::string(key) + "'", lineno);
  }
  return rec[key].get<std::string>();
}

inline double require_number(const nlohmann::json& rec, const char* key, std::size_t lineno) {
  if (!rec.contains(key) || !rec[key].is_number()) {
    throw ParseError("missing or non-numeric field '" + std::string(key) + "'", lineno);
  }
  return rec[key].get<double>();
}

}  // namespace detail

inline std::vector<CaptionItem> load_captions(const std::filesystem::path& path) {
  std::vector<CaptionItem> items;
  detail::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t lineno) {
    CaptionItem item;
    item.image_id = detail::require_string(rec, "image_id", lineno);
    item.candidate_id = detail::require_string(rec, "candidate_id", lineno);
    item.caption = detail::require_string(rec, "caption", lineno);
    items.push_back(std::move(item));
  });
  return items;
}

/// {"image_id", "references": [str, ...]}, one image per line.
inline std::map<std::string, std::vector<std::string>> load_references(
    const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> refs;
  detail::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t lineno) {
    std::string image_id = detail::require_string(rec, "image_id", lineno);
    if (!rec.contains("references") || !rec["references"].is_array()) {
      throw ParseError("missing or non-array field 'references'", lineno);
    }
    std::vector<std::string> list;
    for (const auto& r : rec["references"]) {
      if (!r.is_string()) throw ParseError("references must be strings", lineno);
      list.push_back(r.get<std::string>());
    }
    if (!refs.emplace(std::move(image_id), std::move(list)).second) {
      throw ParseError("duplicate image_id '" + rec["image_id"].get<std::string>() + "'", lineno);
    }
  });
  return refs;
}

/// {"image_id", "b", "c", "label", "split"} with label in {B, C} and split in
/// {HC, HI, HM, MM}.
inline std::vector<ForcedChoiceItem> load_forced_choice(const std::filesystem::path& path) {
  std::vector<ForcedChoiceItem> items;
  detail::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t lineno) {
    ForcedChoiceItem item;
    item.image_id = detail::require_string(rec, "image_id", lineno);
    item.caption_b = detail::require_string(rec, "b", lineno);
    item.caption_c = detail::require_string(rec, "c", lineno);
    if (item.caption_b.empty() || item.caption_c.empty()) {
      throw ParseError("captions must be nonempty", lineno);
    }
    std::string label = util::to_lower(detail::require_string(rec, "label", lineno));
    if (label == "b") {
      item.human_label = Choice::B;
    } else if (label == "c") {
      item.human_label = Choice::C;
    } else {
      throw ParseError("label must be 'B' or 'C'", lineno);
    }
    auto split = split_from_string(detail::require_string(rec, "split", lineno));
    if (!split) throw ParseError("split must be one of HC, HI, HM, MM", lineno);
    item.split = *split;
    items.push_back(std::move(item));
  });
  return items;
}

/// {"image_id", "candidate", "relevance", "thoroughness"}, ratings on 1..5.
inline std::vector<JudgmentItem> load_judgments(const std::filesystem::path& path) {
  std::vector<JudgmentItem> items;
  detail::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t lineno) {
    JudgmentItem item;
    item.image_id = detail::require_string(rec, "image_id", lineno);
    item.candidate = detail::require_string(rec, "candidate", lineno);
    item.relevance = detail::require_number(rec, "relevance", lineno);
    item.thoroughness = detail::require_number(rec, "thoroughness", lineno);
    if (item.relevance < 1.0 || item.relevance > 5.0 || item.thoroughness < 1.0 ||
        item.thoroughness > 5.0) {
      throw ParseError("judgments must lie in [1, 5]", lineno);
    }
    items.push_back(std::move(item));
  });
  return items;
}

inline std::vector<ScoreRecord> load_scores(const std::filesystem::path& path) {
  std::vector<ScoreRecord> records;
  detail::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t lineno) {
    ScoreRecord record;
    record.image_id = detail::require_string(rec, "image_id", lineno);
    record.candidate_id = detail::require_string(rec, "candidate_id", lineno);
    record.score = detail::require_number(rec, "score", lineno);
    if (rec.contains("wmd")) {
      record.wmd_value = rec["wmd"].is_null() ? std::numeric_limits<double>::infinity()
                                              : detail::require_number(rec, "wmd", lineno);
    } else {
      record.wmd_value = std::numeric_limits<double>::quiet_NaN();
    }
    records.push_back(std::move(record));
  });
  return records;
}

inline nlohmann::json score_to_json(const ScoreRecord& record) {
  nlohmann::json rec;
  rec["image_id"] = record.image_id;
  rec["candidate_id"] = record.candidate_id;
  rec["score"] = record.score;
  if (std::isfinite(record.wmd_value)) {
    rec["wmd"] = record.wmd_value;
  } else if (std::isinf(record.wmd_value)) {
    rec["wmd"] = nullptr;  // empty-policy sentinel: exp(-inf) == 0
  }
  if (std::isfinite(record.wmd_value) || std::isinf(record.wmd_value)) {
    rec["warnings"] = {{"image_oov", record.warnings.image_dropped},
                       {"caption_oov", record.warnings.candidate_dropped},
                       {"references_excluded", record.warnings.references_excluded},
                       {"reference_fallback", record.warnings.reference_fallback}};
  }
  if (record.plan) {
    nlohmann::json flows = nlohmann::json::array();
    for (std::size_t i = 0; i < record.plan->flows.size(); ++i) {
      for (std::size_t j = 0; j < record.plan->flows[i].size(); ++j) {
        if (record.plan->flows[i][j] > 0.0) {
          flows.push_back({i, j, record.plan->flows[i][j]});
        }
      }
    }
    rec["plan"] = {{"vocab", record.plan_vocab},
                   {"flows", std::move(flows)},
                   {"objective", record.plan->objective}};
  }
  return rec;
}

/// Full-precision JSONL, one record per line.
inline void write_scores_jsonl(std::ostream& out, const std::vector<ScoreRecord>& records) {
  for (const ScoreRecord& record : records) {
    out << score_to_json(record).dump() << "\n";
  }
}

/// Human-readable TSV summary, scores with six decimal digits.
inline void write_scores_tsv(std::ostream& out, const std::vector<ScoreRecord>& records) {
  out << "image_id\tcandidate_id\tscore\twmd\n";
  char buf[64];
  for (const ScoreRecord& record : records) {
    std::snprintf(buf, sizeof buf, "%.6f", record.score);
    out << record.image_id << "\t" << record.candidate_id << "\t" << buf << "\t";
    if (std::isfinite(record.wmd_value)) {
      std::snprintf(buf, sizeof buf, "%.6f", record.wmd_value);
      out << buf;
    } else if (std::isinf(record.wmd_value)) {
      out << "inf";
    } else {
      out << "-";
    }
    out << "\n";
  }
}

/// Writes through a temp file in the same directory, then renames into place.
inline void atomic_write(const std::filesystem::path& path,
                         const std::function<void(std::ostream&)>& writer) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write file: " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw FormatError("failed writing file: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace vifidel
