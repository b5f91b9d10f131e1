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
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vifidel/embedding.hpp"
#include "vifidel/errors.hpp"
#include "vifidel/textproc.hpp"
#include "vifidel/transport.hpp"

namespace vifidel {

/// The human reference descriptions of one image, reduced to content-word
/// token lists. References that become empty after filtering are not kept.
struct ReferenceSet {
  std::string image_id;
  std::vector<std::vector<std::string>> references;
};

/// Tokenizes raw reference sentences, removes stopwords and unembeddable
/// tokens, and keeps the references that still have content.
inline ReferenceSet make_reference_set(std::string image_id,
                                       const std::vector<std::string>& raw_references,
                                       const StopwordSet& stopwords, const EmbeddingTable& table,
                                       const LookupPolicy& policy = {}) {
  ReferenceSet refs;
  refs.image_id = std::move(image_id);
  for (const std::string& raw : raw_references) {
    std::vector<std::string> kept;
    for (const std::string& token : tokenize(raw)) {
      if (stopwords.contains(token)) continue;
      if (lookup(table, token, policy)) kept.push_back(token);
    }
    if (!kept.empty()) refs.references.push_back(std::move(kept));
  }
  return refs;
}

/// Per-image importance penalties, one weight in [0, 1] per distinct word.
/// Small for words the references agree on, large for words rarely mentioned.
struct PenaltyWeights {
  std::map<std::string, double> weights;

  double at(const std::string& token) const {
    auto it = weights.find(token);
    if (it == weights.end()) throw DomainError("no penalty weight for token '" + token + "'");
    return it->second;
  }
};

/// Consensus penalty for every word in the union of image labels and
/// candidate content words: the word's cosine distance to its closest content
/// word in each reference, halved into [0, 1] and averaged over references.
/// References whose tokens no longer resolve are excluded; none left throws
/// NoReferencesError.
inline PenaltyWeights penalty_weights(const WordDistribution& image,
                                      const WordDistribution& candidate, const ReferenceSet& refs,
                                      const EmbeddingTable& table, const LookupPolicy& policy = {}) {
  std::vector<std::vector<Vector>> reference_vectors;
  for (const auto& tokens : refs.references) {
    std::vector<Vector> vecs;
    for (const std::string& token : tokens) {
      if (auto vec = lookup(table, token, policy)) vecs.push_back(std::move(*vec));
    }
    if (!vecs.empty()) reference_vectors.push_back(std::move(vecs));
  }
  if (reference_vectors.empty()) {
    throw NoReferencesError("no usable references for image '" + refs.image_id + "'");
  }
  const double ref_count = static_cast<double>(reference_vectors.size());

  PenaltyWeights out;
  auto add_weight = [&](const WordEntry& entry) {
    if (out.weights.count(entry.token)) return;
    double sum = 0.0;
    for (const auto& vecs : reference_vectors) {
      double best = -1.0;
      for (const Vector& ref_vec : vecs) {
        best = std::max(best, cosine(entry.embedding, ref_vec));
      }
      sum += (1.0 - best) / 2.0;
    }
    out.weights[entry.token] = std::clamp(sum / ref_count, 0.0, 1.0);
  };
  for (const WordEntry& entry : image.entries()) add_weight(entry);
  for (const WordEntry& entry : candidate.entries()) add_weight(entry);
  return out;
}

/// ||rho_u * u - rho_v * v||^p. With both weights 1 this is word_travel_cost.
inline double weighted_cost(std::span<const double> u, std::span<const double> v, double rho_u,
                            double rho_v, const CostParams& params = {}) {
  if (!(rho_u >= 0.0 && rho_u <= 1.0) || !(rho_v >= 0.0 && rho_v <= 1.0)) {
    throw DomainError("penalty weights must lie in [0, 1]");
  }
  if (u.size() != v.size()) throw DomainError("weighted_cost: dimension mismatch");
  if (!(params.p > 0.0)) throw DomainError("cost exponent must be positive");
  double sumsq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double d = rho_u * u[i] - rho_v * v[i];
    sumsq += d * d;
  }
  if (params.p == 2.0) return sumsq;
  double dist = std::sqrt(sumsq);
  if (params.p == 1.0) return dist;
  return std::pow(dist, params.p);
}

struct ScoreWarnings {
  std::size_t image_dropped = 0;      // image labels with no embedding
  std::size_t candidate_dropped = 0;  // caption content words with no embedding
  std::size_t references_excluded = 0;
  bool reference_fallback = false;  // references given but none usable
};

/// One scored (image, candidate) pair. score == exp(-wmd_value).
struct ScoreRecord {
  std::string image_id;
  std::string candidate_id;
  double score = 0.0;
  double wmd_value = 0.0;
  ScoreWarnings warnings;
  std::optional<TransportPlan> plan;  // per-word transport breakdown, on request
  std::vector<std::string> plan_vocab;
};

namespace detail {

inline std::vector<std::string> combined_vocab(const WordDistribution& a,
                                               const WordDistribution& b) {
  std::vector<std::string> vocab;
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, j = 0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].token < eb[j].token)) {
      vocab.push_back(ea[i++].token);
    } else if (i == ea.size() || eb[j].token < ea[i].token) {
      vocab.push_back(eb[j++].token);
    } else {
      vocab.push_back(ea[i].token);
      ++i;
      ++j;
    }
  }
  return vocab;
}

inline ScoreRecord finish_score(const WordDistribution& image, const WordDistribution& candidate,
                                TransportPlan&& plan, bool keep_plan) {
  ScoreRecord record;
  record.wmd_value = plan.objective;
  record.score = std::exp(-plan.objective);
  record.warnings.image_dropped = image.dropped_tokens();
  record.warnings.candidate_dropped = candidate.dropped_tokens();
  if (keep_plan) {
    record.plan_vocab = combined_vocab(image, candidate);
    record.plan = std::move(plan);
  }
  return record;
}

}  // namespace detail

/// Similarity score with an explicit penalty-weight assignment; the weight
/// map must cover every token of both distributions.
inline ScoreRecord vifidel_with_weights(const WordDistribution& image,
                                        const WordDistribution& candidate,
                                        const PenaltyWeights& weights,
                                        const CostParams& params = {}, bool keep_plan = false) {
  if (image.empty()) throw EmptyDistributionError("image label distribution is empty");
  if (candidate.empty()) throw EmptyDistributionError("candidate distribution is empty");
  TransportPlan plan = solve_pair(image, candidate, [&](const WordEntry& x, const WordEntry& y) {
    return weighted_cost(x.embedding, y.embedding, weights.at(x.token), weights.at(y.token), params);
  });
  return detail::finish_score(image, candidate, std::move(plan), keep_plan);
}

/// Visual-fidelity similarity between an image's label distribution and a
/// caption's content-word distribution: exp(-WMD). With references present,
/// the transport cost is computed between penalty-scaled embeddings so that
/// words the references agree on travel cheaply. Falls back to the
/// unweighted cost when no reference remains usable.
inline ScoreRecord vifidel(const WordDistribution& image, const WordDistribution& candidate,
                           const std::optional<ReferenceSet>& refs, const EmbeddingTable& table,
                           const CostParams& params = {}, bool keep_plan = false,
                           const LookupPolicy& policy = {}) {
  if (image.empty()) throw EmptyDistributionError("image label distribution is empty");
  if (candidate.empty()) throw EmptyDistributionError("candidate distribution is empty");
  if (refs && !refs->references.empty()) {
    try {
      PenaltyWeights weights = penalty_weights(image, candidate, *refs, table, policy);
      return vifidel_with_weights(image, candidate, weights, params, keep_plan);
    } catch (const NoReferencesError&) {
      TransportPlan plan = solve_pair(image, candidate, [&](const WordEntry& x, const WordEntry& y) {
        return word_travel_cost(x.embedding, y.embedding, params);
      });
      ScoreRecord record = detail::finish_score(image, candidate, std::move(plan), keep_plan);
      record.warnings.reference_fallback = true;
      return record;
    }
  }
  TransportPlan plan = solve_pair(image, candidate, [&](const WordEntry& x, const WordEntry& y) {
    return word_travel_cost(x.embedding, y.embedding, params);
  });
  return detail::finish_score(image, candidate, std::move(plan), keep_plan);
}

enum class BaselineMode { best, worst };

/// Single-reference baseline: exp(-WMD(candidate, r)) for each nonempty
/// reference r; best keeps the maximum, worst the minimum.
inline double wmd_reference_baseline(const WordDistribution& candidate,
                                     const std::vector<WordDistribution>& references,
                                     BaselineMode mode, const CostParams& params = {}) {
  bool any = false;
  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (const WordDistribution& ref : references) {
    if (ref.empty()) continue;
    double similarity = std::exp(-wmd(candidate, ref, params));
    best = std::max(best, similarity);
    worst = std::min(worst, similarity);
    any = true;
  }
  if (!any) throw NoReferencesError("all references are empty");
  return mode == BaselineMode::best ? best : worst;
}

/// Elementwise mean of two id-aligned score lists (for averaging this metric
/// with an externally computed one). The combined records carry no transport
/// value.
inline std::vector<ScoreRecord> combine_scores(const std::vector<ScoreRecord>& a,
                                               const std::vector<ScoreRecord>& b) {
  if (a.size() != b.size()) {
    throw AlignmentError("score lists have different lengths (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
  std::vector<ScoreRecord> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].image_id != b[i].image_id || a[i].candidate_id != b[i].candidate_id) {
      throw AlignmentError("score lists disagree at record " + std::to_string(i + 1) + ": (" +
                           a[i].image_id + ", " + a[i].candidate_id + ") vs (" + b[i].image_id +
                           ", " + b[i].candidate_id + ")");
    }
    ScoreRecord rec;
    rec.image_id = a[i].image_id;
    rec.candidate_id = a[i].candidate_id;
    rec.score = (a[i].score + b[i].score) / 2.0;
    rec.wmd_value = std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace vifidel
