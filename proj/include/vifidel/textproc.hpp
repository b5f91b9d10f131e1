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
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vifidel/embedding.hpp"
#include "vifidel/errors.hpp"
#include "vifidel/util.hpp"

namespace vifidel {

/// Case-insensitive stopword membership (entries and queries are lowercased).
class StopwordSet {
 public:
  StopwordSet() = default;
  StopwordSet(std::initializer_list<std::string_view> words) {
    for (auto w : words) insert(w);
  }

  void insert(std::string_view token) { tokens_.insert(util::to_lower(token)); }
  bool contains(std::string_view token) const {
    return tokens_.count(util::to_lower(token)) > 0;
  }
  std::size_t size() const { return tokens_.size(); }

  /// One token per line, UTF-8, '#' starts a comment.
  static StopwordSet load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open stopword file: " + path.string());
    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string_view token = util::trim(line);
      if (!token.empty()) set.insert(token);
    }
    return set;
  }

  /// A standard English function-word list (~150 entries).
  static const StopwordSet& default_english();

 private:
  std::unordered_set<std::string> tokens_;
};

inline const StopwordSet& StopwordSet::default_english() {
  static const StopwordSet set = {
      "a",          "about",   "above",    "after",   "again",      "against",  "all",
      "am",         "an",      "and",      "any",     "are",        "aren't",   "as",
      "at",         "be",      "because",  "been",    "before",     "being",    "below",
      "between",    "both",    "but",      "by",      "can",        "cannot",   "could",
      "couldn't",   "did",     "didn't",   "do",      "does",       "doesn't",  "doing",
      "don't",      "down",    "during",   "each",    "few",        "for",      "from",
      "further",    "had",     "hadn't",   "has",     "hasn't",     "have",     "haven't",
      "having",     "he",      "he'd",     "he'll",   "he's",       "her",      "here",
      "here's",     "hers",    "herself",  "him",     "himself",    "his",      "how",
      "how's",      "i",       "i'd",      "i'll",    "i'm",        "i've",     "if",
      "in",         "into",    "is",       "isn't",   "it",         "it's",     "its",
      "itself",     "let's",   "me",       "more",    "most",       "mustn't",  "my",
      "myself",     "no",      "nor",      "not",     "of",         "off",      "on",
      "once",       "only",    "or",       "other",   "ought",      "our",      "ours",
      "ourselves",  "out",     "over",     "own",     "same",       "shan't",   "she",
      "she'd",      "she'll",  "she's",    "should",  "shouldn't",  "so",       "some",
      "such",       "than",    "that",     "that's",  "the",        "their",    "theirs",
      "them",       "themselves", "then",  "there",   "there's",    "these",    "they",
      "they'd",     "they'll", "they're",  "they've", "this",       "those",    "through",
      "to",         "too",     "under",    "until",   "up",         "very",     "was",
      "wasn't",     "we",      "we'd",     "we'll",   "we're",      "we've",    "were",
      "weren't",    "what",    "what's",   "when",    "when's",     "where",    "where's",
      "which",      "while",   "who",      "who's",   "whom",       "why",      "why's",
      "with",       "won't",   "would",    "wouldn't", "you",       "you'd",    "you'll",
      "you're",     "you've",  "your",     "yours",   "yourself",   "yourselves"};
  return set;
}

/// Lowercases, splits on whitespace, strips leading/trailing punctuation per
/// token, drops empty and pure-punctuation tokens. Internal punctuation
/// (hyphens, apostrophes) is preserved.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (std::string& token : util::split_ws(util::to_lower(text))) {
    std::string_view t = token;
    while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
    while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

/// One slot of a normalized bag of words: the token, its probability mass,
/// and the embedding vector it resolved to.
struct WordEntry {
  std::string token;
  double weight = 0.0;
  Vector embedding;
};

/// A normalized bag of words over embeddable tokens. Entries are sorted by
/// token, weights are strictly positive and sum to 1 unless the distribution
/// is empty. Tokens that failed embedding lookup are counted in
/// dropped_tokens().
class WordDistribution {
 public:
  WordDistribution() = default;

  /// Builds from raw token counts (or any nonnegative weights). Zero-weight
  /// tokens are skipped; unresolvable tokens are dropped and counted.
  static WordDistribution from_counts(const std::map<std::string, double>& counts,
                                      const EmbeddingTable& table,
                                      const LookupPolicy& policy = {}) {
    WordDistribution dist;
    double total = 0.0;
    for (const auto& [token, count] : counts) {
      if (count <= 0.0) continue;
      std::optional<Vector> vec = lookup(table, token, policy);
      if (!vec) {
        dist.dropped_ += static_cast<std::size_t>(std::max(1.0, std::round(count)));
        continue;
      }
      dist.entries_.push_back({token, count, std::move(*vec)});
      total += count;
    }
    for (WordEntry& e : dist.entries_) e.weight /= total;
    return dist;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<WordEntry>& entries() const { return entries_; }

  const WordEntry* find(std::string_view token) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), token,
                               [](const WordEntry& e, std::string_view t) { return e.token < t; });
    if (it == entries_.end() || it->token != token) return nullptr;
    return &*it;
  }

  /// Occurrences removed because no embedding resolved.
  std::size_t dropped_tokens() const { return dropped_; }

 private:
  std::vector<WordEntry> entries_;  // sorted by token (std::map iteration order)
  std::size_t dropped_ = 0;
};

/// Normalized bag of content words: stopwords removed, unresolvable tokens
/// dropped with a warning count, frequencies normalized to sum 1. An empty
/// result is legal and signals "nothing to compare".
inline WordDistribution build_nbow(const std::vector<std::string>& tokens,
                                   const StopwordSet& stopwords, const EmbeddingTable& table,
                                   const LookupPolicy& policy = {}) {
  std::map<std::string, double> counts;
  for (const std::string& token : tokens) {
    if (stopwords.contains(token)) continue;
    counts[token] += 1.0;
  }
  return WordDistribution::from_counts(counts, table, policy);
}

}  // namespace vifidel
