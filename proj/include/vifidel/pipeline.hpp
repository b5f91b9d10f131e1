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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vifidel/corpus.hpp"
#include "vifidel/embedding.hpp"
#include "vifidel/errors.hpp"
#include "vifidel/imagecontent.hpp"
#include "vifidel/metric.hpp"
#include "vifidel/textproc.hpp"
#include "vifidel/transport.hpp"
#include "vifidel/util.hpp"

namespace vifidel {

enum class EmptyPolicy { error, zero };
enum class MetricKind { vifidel, wmd_best, wmd_worst };

struct ScoreOptions {
  CostParams cost;
  bool binarize = false;
  std::optional<std::size_t> n_refs;  // nullopt: all available; 0: none
  EmptyPolicy empty_policy = EmptyPolicy::error;
  MetricKind metric = MetricKind::vifidel;
  bool keep_plan = false;
};

/// Stable 64-bit string hash (FNV-1a), used to derive per-image sampling
/// streams that do not depend on the standard library's std::hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Deterministically samples n of [0, count) without replacement, keeping
/// ascending order (i.e. file order among the chosen).
inline std::vector<std::size_t> sample_reference_indices(std::size_t count, std::size_t n,
                                                         std::uint64_t seed) {
  std::vector<std::size_t> all(count);
  for (std::size_t i = 0; i < count; ++i) all[i] = i;
  if (n >= count) return all;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), n, rng);
  return chosen;  // std::sample preserves ascending order
}

/// Scores captions against per-image object content with a shared read-only
/// embedding table. Construction precomputes the image distributions and the
/// filtered reference token lists; scoring is pure and thread-safe.
class ScoringEngine {
 public:
  ScoringEngine(EmbeddingTable table, LookupPolicy policy, StopwordSet stopwords,
                std::map<std::string, ImageContent> content,
                std::map<std::string, std::vector<std::string>> references, ScoreOptions options)
      : table_(std::move(table)),
        policy_(std::move(policy)),
        stopwords_(std::move(stopwords)),
        content_(std::move(content)),
        references_(std::move(references)),
        options_(options) {
    for (const auto& [id, image] : content_) {
      image_dists_.emplace(id, build_image_nbow(image, options_.binarize, table_, policy_));
    }
    for (const auto& [id, raws] : references_) {
      // aligned with raw file order; entries may be empty after filtering
      std::vector<std::vector<std::string>> filtered;
      filtered.reserve(raws.size());
      for (const std::string& raw : raws) {
        std::vector<std::string> kept;
        for (const std::string& token : tokenize(raw)) {
          if (stopwords_.contains(token)) continue;
          if (lookup(table_, token, policy_)) kept.push_back(token);
        }
        filtered.push_back(std::move(kept));
      }
      filtered_refs_.emplace(id, std::move(filtered));
    }
  }

  const EmbeddingTable& table() const { return table_; }
  const ScoreOptions& options() const { return options_; }
  bool has_image(const std::string& image_id) const { return image_dists_.count(image_id) > 0; }
  std::size_t reference_count(const std::string& image_id) const {
    auto it = filtered_refs_.find(image_id);
    return it == filtered_refs_.end() ? 0 : it->second.size();
  }

  ScoreRecord score(const CaptionItem& item) const {
    return score_item(item.image_id, item.candidate_id, item.caption, options_.n_refs, nullptr);
  }

  ScoreRecord score(const std::string& image_id, const std::string& candidate_id,
                    const std::string& caption) const {
    return score_item(image_id, candidate_id, caption, options_.n_refs, nullptr);
  }

  /// Harness entry point: overrides the engine's reference budget, or scores
  /// against an explicit subset of reference indices (seeded sweeps).
  ScoreRecord score_with_refs(const std::string& image_id, const std::string& candidate_id,
                              const std::string& caption, std::optional<std::size_t> n_refs,
                              const std::vector<std::size_t>* ref_indices = nullptr) const {
    return score_item(image_id, candidate_id, caption, n_refs, ref_indices);
  }

  struct ItemOutcome {
    std::optional<ScoreRecord> record;
    std::string error;  // nonempty when the item was skipped
    bool hard = false;  // empty distribution under EmptyPolicy::error
  };

  /// Scores every item, `workers` at a time. Outcomes keep input order, so
  /// output content does not depend on the worker count.
  std::vector<ItemOutcome> score_batch(const std::vector<CaptionItem>& items,
                                       unsigned workers) const {
    std::vector<ItemOutcome> outcomes(items.size());
    util::parallel_for(items.size(), workers, [&](std::size_t i) {
      try {
        outcomes[i].record = score(items[i]);
      } catch (const EmptyDistributionError& e) {
        outcomes[i].error = items[i].image_id + "/" + items[i].candidate_id + ": " + e.what();
        outcomes[i].hard = true;
      } catch (const std::exception& e) {
        outcomes[i].error =
            items[i].image_id + "/" + items[i].candidate_id + ": " + e.what();
      }
    });
    return outcomes;
  }

 private:
  ScoreRecord score_item(const std::string& image_id, const std::string& candidate_id,
                         const std::string& caption, std::optional<std::size_t> n_refs,
                         const std::vector<std::size_t>* ref_indices) const {
    auto image_it = image_dists_.find(image_id);
    if (image_it == image_dists_.end()) {
      throw Error("no detections for image '" + image_id + "'");
    }
    const WordDistribution& image = image_it->second;
    WordDistribution candidate = build_nbow(tokenize(caption), stopwords_, table_, policy_);

    if (image.empty() || candidate.empty()) {
      if (options_.empty_policy == EmptyPolicy::error) {
        throw EmptyDistributionError(image.empty()
                                         ? "image '" + image_id + "' has no embeddable labels"
                                         : "caption for '" + image_id + "' has no content words");
      }
      ScoreRecord record;
      record.image_id = image_id;
      record.candidate_id = candidate_id;
      record.score = 0.0;
      record.wmd_value = std::numeric_limits<double>::infinity();
      record.warnings.image_dropped = image.dropped_tokens();
      record.warnings.candidate_dropped = candidate.dropped_tokens();
      return record;
    }

    ScoreRecord record;
    if (options_.metric == MetricKind::vifidel) {
      std::size_t selected = 0;
      std::optional<ReferenceSet> refs =
          selected_references(image_id, n_refs, ref_indices, selected);
      record = vifidel(image, candidate, refs, table_, options_.cost, options_.keep_plan, policy_);
      std::size_t used = refs ? refs->references.size() : 0;
      record.warnings.references_excluded = selected - used;
    } else {
      std::vector<WordDistribution> ref_dists =
          reference_distributions(image_id, n_refs, ref_indices);
      double wmd_value = std::numeric_limits<double>::infinity();
      bool any = false;
      for (const WordDistribution& ref : ref_dists) {
        if (ref.empty()) continue;
        double w = wmd(candidate, ref, options_.cost);
        if (!any) {
          wmd_value = w;
          any = true;
        } else if (options_.metric == MetricKind::wmd_best) {
          wmd_value = std::min(wmd_value, w);
        } else {
          wmd_value = std::max(wmd_value, w);
        }
      }
      if (!any) {
        throw NoReferencesError("no usable references for image '" + image_id + "'");
      }
      record.score = std::exp(-wmd_value);
      record.wmd_value = wmd_value;
      record.warnings.candidate_dropped = candidate.dropped_tokens();
    }
    record.image_id = image_id;
    record.candidate_id = candidate_id;
    return record;
  }

  /// First-n (or explicitly indexed) raw references, filtered; empty ones are
  /// excluded. `selected` reports how many raw references were considered.
  std::optional<ReferenceSet> selected_references(const std::string& image_id,
                                                  std::optional<std::size_t> n_refs,
                                                  const std::vector<std::size_t>* ref_indices,
                                                  std::size_t& selected) const {
    selected = 0;
    auto it = filtered_refs_.find(image_id);
    if (it == filtered_refs_.end()) return std::nullopt;
    if (n_refs && *n_refs == 0 && !ref_indices) return std::nullopt;

    const auto& filtered = it->second;
    ReferenceSet set;
    set.image_id = image_id;
    auto take = [&](std::size_t idx) {
      if (idx >= filtered.size()) return;
      ++selected;
      if (!filtered[idx].empty()) set.references.push_back(filtered[idx]);
    };
    if (ref_indices) {
      for (std::size_t idx : *ref_indices) take(idx);
    } else {
      std::size_t limit = n_refs ? std::min(*n_refs, filtered.size()) : filtered.size();
      for (std::size_t idx = 0; idx < limit; ++idx) take(idx);
    }
    if (set.references.empty()) return std::nullopt;
    return set;
  }

  std::vector<WordDistribution> reference_distributions(
      const std::string& image_id, std::optional<std::size_t> n_refs,
      const std::vector<std::size_t>* ref_indices) const {
    std::size_t selected = 0;
    std::optional<ReferenceSet> set = selected_references(image_id, n_refs, ref_indices, selected);
    std::vector<WordDistribution> dists;
    if (!set) return dists;
    for (const auto& tokens : set->references) {
      dists.push_back(build_nbow(tokens, StopwordSet{}, table_, policy_));
    }
    return dists;
  }

  EmbeddingTable table_;
  LookupPolicy policy_;
  StopwordSet stopwords_;
  std::map<std::string, ImageContent> content_;
  std::map<std::string, std::vector<std::string>> references_;
  ScoreOptions options_;
  std::map<std::string, WordDistribution> image_dists_;
  std::map<std::string, std::vector<std::vector<std::string>>> filtered_refs_;
};

}  // namespace vifidel
