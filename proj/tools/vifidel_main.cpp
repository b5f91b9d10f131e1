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
//
// Command-line front end: score, eval-pairwise, correlate, combine.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vifidel/corpus.hpp"
#include "vifidel/evalharness.hpp"
#include "vifidel/imagecontent.hpp"
#include "vifidel/pipeline.hpp"
#include "vifidel/version.hpp"

namespace {

struct CommonOpts {
  std::string embeddings;
  std::string embedding_format = "auto";
  std::vector<std::string> detections;
  std::string references;
  std::string stopwords;
  std::string det_profile;
  double det_threshold = -1.0;  // unset: profile value or 0
  std::string merge = "union-unique";
  bool binarize = false;
  double p = 2.0;
  std::string empty_policy = "error";
  long long n_refs = -1;  // -1: all available
  std::string metric = "vifidel";
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

void add_scoring_flags(CLI::App* cmd, CommonOpts& o, bool need_detections) {
  cmd->add_option("--embeddings", o.embeddings, "Word embedding file (word2vec text or binary)")
      ->required()
      ->envname("VIFIDEL_EMBEDDINGS")
      ->check(CLI::ExistingFile);
  cmd->add_option("--embedding-format", o.embedding_format, "Embedding file format")
      ->check(CLI::IsMember({"text", "binary", "auto"}))
      ->envname("VIFIDEL_EMBEDDING_FORMAT")
      ->capture_default_str();
  auto* det = cmd->add_option("--detections", o.detections,
                              "Detections JSONL (repeatable; repeats are merged)")
                  ->check(CLI::ExistingFile);
  if (need_detections) det->required();
  cmd->add_option("--references", o.references, "References JSONL")->check(CLI::ExistingFile);
  cmd->add_option("--stopwords", o.stopwords, "Stopword list (one token per line)")
      ->envname("VIFIDEL_STOPWORDS")
      ->check(CLI::ExistingFile);
  cmd->add_option("--det-threshold", o.det_threshold,
                  "Confidence threshold for scored detections")
      ->check(CLI::Range(0.0, 1.0))
      ->envname("VIFIDEL_DET_THRESHOLD");
  cmd->add_option("--det-profile", o.det_profile,
                  "Detector operating point (d80: 0.6, d500: 0.4)")
      ->check(CLI::IsMember({"d80", "d500"}));
  cmd->add_option("--merge", o.merge, "How repeated --detections combine per image")
      ->check(CLI::IsMember({"union-unique", "concat"}))
      ->capture_default_str();
  cmd->add_flag("--binarize", o.binarize,
                "Presence/absence label weights instead of frequencies");
  cmd->add_option("--p", o.p, "Word travel cost exponent")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--empty-policy", o.empty_policy,
                  "Empty image/caption distributions: hard error or score 0")
      ->check(CLI::IsMember({"error", "zero"}))
      ->envname("VIFIDEL_EMPTY_POLICY")
      ->capture_default_str();
  cmd->add_option("--n-refs", o.n_refs, "References per image (-1: all, 0: none)")
      ->check(CLI::Range(-1LL, 1000000LL));
  cmd->add_option("--metric", o.metric, "Scoring metric")
      ->check(CLI::IsMember({"vifidel", "wmd-best", "wmd-worst"}))
      ->capture_default_str();
  cmd->add_option("--workers", o.workers, "Worker threads (affects throughput only)")
      ->check(CLI::PositiveNumber)
      ->envname("VIFIDEL_WORKERS");
}

vifidel::ScoringEngine make_engine(const CommonOpts& o, bool keep_plan) {
  vifidel::EmbeddingFormat format = vifidel::EmbeddingFormat::auto_detect;
  if (o.embedding_format == "text") format = vifidel::EmbeddingFormat::text;
  if (o.embedding_format == "binary") format = vifidel::EmbeddingFormat::binary;
  vifidel::EmbeddingTable table = vifidel::load_embeddings(o.embeddings, format);

  vifidel::StopwordSet stopwords = o.stopwords.empty()
                                       ? vifidel::StopwordSet::default_english()
                                       : vifidel::StopwordSet::load(o.stopwords);

  double threshold = 0.0;
  if (!o.det_profile.empty()) threshold = vifidel::detection_threshold_for_profile(o.det_profile);
  if (o.det_threshold >= 0.0) threshold = o.det_threshold;
  vifidel::MergeMode merge = o.merge == "concat" ? vifidel::MergeMode::concat
                                                 : vifidel::MergeMode::union_unique;
  std::map<std::string, vifidel::ImageContent> content;
  for (const std::string& path : o.detections) {
    for (auto& [id, image] : vifidel::load_detections(path, threshold)) {
      auto it = content.find(id);
      if (it == content.end()) {
        content.emplace(id, std::move(image));
      } else {
        it->second = vifidel::merge_sources(it->second, image, merge);
      }
    }
  }

  std::map<std::string, std::vector<std::string>> references;
  if (!o.references.empty()) references = vifidel::load_references(o.references);

  vifidel::ScoreOptions opts;
  opts.cost.p = o.p;
  opts.binarize = o.binarize;
  if (o.n_refs >= 0) opts.n_refs = static_cast<std::size_t>(o.n_refs);
  opts.empty_policy =
      o.empty_policy == "zero" ? vifidel::EmptyPolicy::zero : vifidel::EmptyPolicy::error;
  if (o.metric == "wmd-best") opts.metric = vifidel::MetricKind::wmd_best;
  if (o.metric == "wmd-worst") opts.metric = vifidel::MetricKind::wmd_worst;
  opts.keep_plan = keep_plan;

  return vifidel::ScoringEngine(std::move(table), vifidel::LookupPolicy{}, std::move(stopwords),
                                std::move(content), std::move(references), opts);
}

void emit(const std::string& output_path, const std::function<void(std::ostream&)>& writer) {
  if (output_path.empty()) {
    writer(std::cout);
  } else {
    vifidel::atomic_write(output_path, writer);
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format_fixed(double value) {
  if (std::isnan(value)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

int run_score(const CommonOpts& common, const std::string& captions_path,
              const std::string& output_path, const std::string& tsv_path, bool dump_plan) {
  Stopwatch watch;
  vifidel::ScoringEngine engine = make_engine(common, dump_plan);
  std::vector<vifidel::CaptionItem> items = vifidel::load_captions(captions_path);
  auto outcomes = engine.score_batch(items, common.workers);

  std::vector<vifidel::ScoreRecord> records;
  std::size_t skipped = 0;
  for (const auto& outcome : outcomes) {
    if (outcome.record) {
      records.push_back(*outcome.record);
    } else if (outcome.hard) {
      // the caller asked for hard errors on empty distributions
      std::cerr << "error: " << outcome.error << "\n";
      return 1;
    } else {
      ++skipped;
      std::cerr << "skipped: " << outcome.error << "\n";
    }
  }
  emit(output_path, [&](std::ostream& out) { vifidel::write_scores_jsonl(out, records); });
  if (!tsv_path.empty()) {
    vifidel::atomic_write(tsv_path,
                          [&](std::ostream& out) { vifidel::write_scores_tsv(out, records); });
  }
  std::fprintf(stderr, "scored %zu items, skipped %zu, %.2fs\n", records.size(), skipped,
               watch.seconds());
  return 0;
}

int run_eval_pairwise(const CommonOpts& common, const std::string& pairs_path,
                      const std::string& output_path,
                      const std::vector<unsigned long long>& seeds) {
  Stopwatch watch;
  vifidel::ScoringEngine engine = make_engine(common, false);
  std::vector<vifidel::ForcedChoiceItem> items = vifidel::load_forced_choice(pairs_path);

  const std::size_t n_refs = common.n_refs < 0 ? std::numeric_limits<std::size_t>::max()
                                               : static_cast<std::size_t>(common.n_refs);
  const bool sample = !seeds.empty() && common.n_refs > 0;

  std::vector<vifidel::ForcedChoiceReport> reports;
  std::size_t runs = sample ? seeds.size() : 1;
  for (std::size_t run = 0; run < runs; ++run) {
    // per-image reference subsets for this seed, fixed before scoring starts
    std::map<std::string, std::vector<std::size_t>> subsets;
    if (sample) {
      for (const auto& item : items) {
        if (subsets.count(item.image_id)) continue;
        std::size_t available = engine.reference_count(item.image_id);
        subsets[item.image_id] = vifidel::sample_reference_indices(
            available, n_refs, seeds[run] ^ vifidel::fnv1a(item.image_id));
      }
    }
    vifidel::PairScorer scorer = [&](const vifidel::ForcedChoiceItem& item,
                                     const std::string& caption, std::size_t n) {
      std::optional<std::size_t> budget;
      if (n != std::numeric_limits<std::size_t>::max()) budget = n;
      const std::vector<std::size_t>* indices = nullptr;
      if (sample) {
        auto it = subsets.find(item.image_id);
        if (it != subsets.end()) indices = &it->second;
      }
      return engine.score_with_refs(item.image_id, "", caption, budget, indices).score;
    };
    reports.push_back(
        vifidel::forced_choice_accuracy(items, scorer, n_refs, common.workers));
  }

  emit(output_path, [&](std::ostream& out) {
    out << "split\tscored\tskipped\taccuracy\n";
    auto mean_accuracy = [&](std::optional<vifidel::Split> split) {
      double sum = 0.0;
      for (const auto& report : reports) {
        sum += split ? report.per_split.at(*split).accuracy() : report.overall.accuracy();
      }
      return sum / static_cast<double>(reports.size());
    };
    for (vifidel::Split split : vifidel::kAllSplits) {
      const auto& acc = reports.front().per_split.at(split);
      out << vifidel::to_string(split) << "\t" << acc.scored << "\t" << acc.skipped << "\t"
          << format_fixed(mean_accuracy(split)) << "\n";
    }
    out << "all\t" << reports.front().overall.scored << "\t" << reports.front().overall.skipped
        << "\t" << format_fixed(mean_accuracy(std::nullopt)) << "\n";
  });
  for (const std::string& reason : reports.front().skipped_items) {
    std::cerr << "skipped: " << reason << "\n";
  }
  std::fprintf(stderr, "scored %zu pairs, skipped %zu, %.2fs\n",
               reports.front().overall.scored, reports.front().overall.skipped, watch.seconds());
  return 0;
}

int run_correlate(const std::string& judgments_path, const std::string& scores_path,
                  const std::string& output_path) {
  Stopwatch watch;
  std::vector<vifidel::JudgmentItem> judgments = vifidel::load_judgments(judgments_path);
  std::vector<vifidel::ScoreRecord> scores = vifidel::load_scores(scores_path);
  vifidel::CorrelationReport report = vifidel::correlate(judgments, scores);
  emit(output_path, [&](std::ostream& out) {
    out << "dimension\tspearman\n";
    out << "relevance\t" << format_fixed(report.relevance) << "\n";
    out << "thoroughness\t" << format_fixed(report.thoroughness) << "\n";
  });
  std::fprintf(stderr, "correlated %zu records, %.2fs\n", judgments.size(), watch.seconds());
  return 0;
}

int run_combine(const std::string& a_path, const std::string& b_path,
                const std::string& output_path, const std::string& tsv_path) {
  Stopwatch watch;
  std::vector<vifidel::ScoreRecord> combined =
      vifidel::combine_scores(vifidel::load_scores(a_path), vifidel::load_scores(b_path));
  emit(output_path, [&](std::ostream& out) { vifidel::write_scores_jsonl(out, combined); });
  if (!tsv_path.empty()) {
    vifidel::atomic_write(tsv_path,
                          [&](std::ostream& out) { vifidel::write_scores_tsv(out, combined); });
  }
  std::fprintf(stderr, "combined %zu records, %.2fs\n", combined.size(), watch.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-description evaluation via optimal transport in word-embedding space"};
  app.set_version_flag("--version", std::string(vifidel::kVersion));
  app.require_subcommand(1);

  CommonOpts score_opts;
  std::string captions_path, score_output, score_tsv;
  bool dump_plan = false;
  CLI::App* score_cmd = app.add_subcommand("score", "Score captions against image content");
  add_scoring_flags(score_cmd, score_opts, true);
  score_cmd->add_option("--captions", captions_path, "Captions JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--output", score_output, "Output JSONL (default: stdout)");
  score_cmd->add_option("--tsv", score_tsv, "Also write a TSV summary");
  score_cmd->add_flag("--dump-plan", dump_plan, "Attach the transport plan to each record");

  CommonOpts pairwise_opts;
  std::string pairs_path, pairwise_output;
  std::vector<unsigned long long> seeds;
  CLI::App* pairwise_cmd =
      app.add_subcommand("eval-pairwise", "Binary forced-choice accuracy per split");
  add_scoring_flags(pairwise_cmd, pairwise_opts, true);
  pairwise_cmd->add_option("--pairs", pairs_path, "Forced-choice JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  pairwise_cmd->add_option("--output", pairwise_output, "Output TSV (default: stdout)");
  pairwise_cmd->add_option("--ref-sample-seeds", seeds,
                           "Average accuracy over seeded random reference subsets");

  std::string judgments_path, scores_path, correlate_output;
  CLI::App* correlate_cmd =
      app.add_subcommand("correlate", "Rank correlation of scores against human judgments");
  correlate_cmd->add_option("--judgments", judgments_path, "Judgments JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  correlate_cmd->add_option("--scores", scores_path, "Score JSONL from a 'score' run")
      ->required()
      ->check(CLI::ExistingFile);
  correlate_cmd->add_option("--output", correlate_output, "Output TSV (default: stdout)");

  std::string combine_a, combine_b, combine_output, combine_tsv;
  CLI::App* combine_cmd = app.add_subcommand("combine", "Average two id-aligned score files");
  combine_cmd->add_option("a", combine_a, "First score JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  combine_cmd->add_option("b", combine_b, "Second score JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  combine_cmd->add_option("--output", combine_output, "Output JSONL (default: stdout)");
  combine_cmd->add_option("--tsv", combine_tsv, "Also write a TSV summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*score_cmd) {
      return run_score(score_opts, captions_path, score_output, score_tsv, dump_plan);
    }
    if (*pairwise_cmd) {
      return run_eval_pairwise(pairwise_opts, pairs_path, pairwise_output, seeds);
    }
    if (*correlate_cmd) {
      return run_correlate(judgments_path, scores_path, correlate_output);
    }
    if (*combine_cmd) {
      return run_combine(combine_a, combine_b, combine_output, combine_tsv);
    }
  } catch (const vifidel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
