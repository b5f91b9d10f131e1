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
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vifidel/errors.hpp"
#include "vifidel/metric.hpp"
#include "vifidel/util.hpp"

namespace vifidel {

enum class Choice { B, C, tie };
enum class Split { HC, HI, HM, MM };

inline constexpr std::string_view to_string(Choice c) {
  switch (c) {
    case Choice::B: return "B";
    case Choice::C: return "C";
    default: return "tie";
  }
}

inline constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::HC: return "HC";
    case Split::HI: return "HI";
    case Split::HM: return "HM";
    default: return "MM";
  }
}

inline std::optional<Split> split_from_string(std::string_view s) {
  std::string lower = util::to_lower(s);
  if (lower == "hc") return Split::HC;
  if (lower == "hi") return Split::HI;
  if (lower == "hm") return Split::HM;
  if (lower == "mm") return Split::MM;
  return std::nullopt;
}

inline constexpr Split kAllSplits[] = {Split::HC, Split::HI, Split::HM, Split::MM};

/// One binary forced-choice item: two candidate captions for an image and the
/// consensus human label saying which is the better description.
struct ForcedChoiceItem {
  std::string image_id;
  std::string caption_b;
  std::string caption_c;
  Choice human_label = Choice::B;
  Split split = Split::MM;
};

/// One human rating of a candidate description, each dimension on 1..5.
struct JudgmentItem {
  std::string image_id;
  std::string candidate;
  double relevance = 0.0;
  double thoroughness = 0.0;
};

/// Majority label over per-reference judgments; an exact tie stays a tie.
inline Choice majority_vote(const std::vector<Choice>& labels) {
  if (labels.empty()) throw DomainError("majority_vote needs at least one label");
  std::size_t b = 0, c = 0;
  for (Choice label : labels) {
    if (label == Choice::B) {
      ++b;
    } else if (label == Choice::C) {
      ++c;
    } else {
      throw DomainError("majority_vote labels must be B or C");
    }
  }
  if (b > c) return Choice::B;
  if (c > b) return Choice::C;
  return Choice::tie;
}

struct SplitAccuracy {
  std::size_t scored = 0;
  double correct = 0.0;  // metric ties credit 0.5
  std::size_t skipped = 0;

  double accuracy() const {
    return scored ? correct / static_cast<double>(scored)
                  : std::numeric_limits<double>::quiet_NaN();
  }
};

struct ForcedChoiceReport {
  std::map<Split, SplitAccuracy> per_split;
  SplitAccuracy overall;
  std::vector<std::string> skipped_items;  // "<image_id>: reason"
};

/// Scores a caption of a forced-choice item; n_refs says how many references
/// the scorer may use (0 means none).
using PairScorer =
    std::function<double(const ForcedChoiceItem& item, const std::string& caption,
                         std::size_t n_refs)>;

/// Scores both captions of every item and predicts the one with the larger
/// score; a metric tie counts half right. Items whose scoring fails (missing
/// assets) are skipped and reported, and the run continues. Scoring may run
/// on several workers; aggregation is a fold in input order.
inline ForcedChoiceReport forced_choice_accuracy(const std::vector<ForcedChoiceItem>& items,
                                                 const PairScorer& scorer, std::size_t n_refs,
                                                 unsigned workers = 1) {
  ForcedChoiceReport report;
  for (Split split : kAllSplits) report.per_split[split];

  struct Outcome {
    double score_b = 0.0, score_c = 0.0;
    std::string error;
  };
  std::vector<Outcome> outcomes(items.size());
  util::parallel_for(items.size(), workers, [&](std::size_t i) {
    try {
      outcomes[i].score_b = scorer(items[i], items[i].caption_b, n_refs);
      outcomes[i].score_c = scorer(items[i], items[i].caption_c, n_refs);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  for (std::size_t i = 0; i < items.size(); ++i) {
    SplitAccuracy& split_acc = report.per_split[items[i].split];
    if (!outcomes[i].error.empty()) {
      ++split_acc.skipped;
      ++report.overall.skipped;
      report.skipped_items.push_back(items[i].image_id + ": " + outcomes[i].error);
      continue;
    }
    double credit;
    if (outcomes[i].score_b == outcomes[i].score_c) {
      credit = 0.5;
    } else if ((outcomes[i].score_b > outcomes[i].score_c) ==
               (items[i].human_label == Choice::B)) {
      credit = 1.0;
    } else {
      credit = 0.0;
    }
    ++split_acc.scored;
    split_acc.correct += credit;
    ++report.overall.scored;
    report.overall.correct += credit;
  }
  return report;
}

/// 1-based average ranks; tied values share the mean of their positions.
inline std::vector<double> fractional_ranks(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw DomainError("ranks need finite values");
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: length mismatch");
  if (xs.size() < 2) throw DomainError("pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: an input is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Rank correlation as the Pearson correlation of fractional ranks (exact
/// under ties, unlike the d-squared shortcut).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("spearman: length mismatch");
  return pearson(fractional_ranks(xs), fractional_ranks(ys));
}

struct CorrelationReport {
  double relevance = 0.0;
  double thoroughness = 0.0;
};

/// Spearman correlation of metric scores against both judgment dimensions.
/// The two lists must be record-for-record aligned on (image_id, candidate).
inline CorrelationReport correlate(const std::vector<JudgmentItem>& judgments,
                                   const std::vector<ScoreRecord>& scores) {
  if (judgments.size() != scores.size()) {
    throw AlignmentError("judgments and scores have different lengths (" +
                         std::to_string(judgments.size()) + " vs " +
                         std::to_string(scores.size()) + ")");
  }
  std::vector<double> metric(judgments.size()), relevance(judgments.size()),
      thoroughness(judgments.size());
  for (std::size_t i = 0; i < judgments.size(); ++i) {
    if (judgments[i].image_id != scores[i].image_id ||
        judgments[i].candidate != scores[i].candidate_id) {
      throw AlignmentError("judgments and scores disagree at record " + std::to_string(i + 1) +
                           ": (" + judgments[i].image_id + ", " + judgments[i].candidate +
                           ") vs (" + scores[i].image_id + ", " + scores[i].candidate_id + ")");
    }
    metric[i] = scores[i].score;
    relevance[i] = judgments[i].relevance;
    thoroughness[i] = judgments[i].thoroughness;
  }
  CorrelationReport report;
  report.relevance = spearman(metric, relevance);
  report.thoroughness = spearman(metric, thoroughness);
  return report;
}

}  // namespace vifidel
