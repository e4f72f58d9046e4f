#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vfloc/corpus.hpp"
#include "vfloc/eval.hpp"
#include "vfloc/expansion.hpp"
#include "vfloc/ranker.hpp"
#include "vfloc/scorer.hpp"
#include "vfloc/tracker.hpp"

namespace vfloc {

enum class ModeChoice { Auto, ForcePatchPresent, ForcePatchAbsent };

/// Full pipeline configuration. Defaults reproduce the published
/// settings: repetition 5, candidate cap 100, 8 rounds, top 20.
struct RunConfig {
  ModeChoice mode = ModeChoice::Auto;
  ExpansionConfig expansion;
  TrackerConfig tracker;
  ScorerConfig scorer;
  RankerConfig ranker;
  std::string cwe_corpus_path;
  std::string cache_path;

  static RunConfig from_json_file(const std::string& path);
  void apply_json(const std::string& json_text);
};

struct LocateOutcome {
  Mode mode_used;
  ExpandedQuery query;
  CandidateSet candidates;
  RankedResult ranked;
};

/// expand -> (track | select_candidates) -> rank.
LocateOutcome locate(const VulnRecord& record, const RepoIndex& index,
                     const std::vector<CweEntry>& cwe_corpus,
                     PairwiseComparator& comparator, ComparisonCache& cache,
                     const RunConfig& config);

/// Runs the pipeline for every record with ground truth and aggregates
/// the metrics; records without truth are skipped and counted.
EvalReport run_benchmark(const std::vector<VulnRecord>& records,
                         const std::vector<GroundTruth>& truths,
                         const std::vector<CweEntry>& cwe_corpus,
                         PairwiseComparator& comparator,
                         ComparisonCache& cache, const RunConfig& config);

}  // namespace vfloc
