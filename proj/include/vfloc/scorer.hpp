#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vfloc/expansion.hpp"
#include "vfloc/java_index.hpp"
#include "vfloc/tracker.hpp"

namespace vfloc {

enum class ScorerKind { Lexical, Remote };

struct ScorerBackend {
  ScorerKind kind = ScorerKind::Lexical;
  std::string endpoint;  // Remote only

  static ScorerBackend lexical() { return {ScorerKind::Lexical, ""}; }
  static ScorerBackend remote(std::string url);
};

struct ScoredFunction {
  const FunctionRecord* function;
  double score;  // in [0, 1]
};

/// Corpus-wide idf statistics shared by lexical scoring; built once
/// over all non-test function documents.
struct LexicalModel {
  CorpusStats stats;
  static LexicalModel build(const RepoIndex& index);
};

/// Cosine between the weighted query vector (original terms at weight
/// repetition x tf x idf, expansion terms at weight x idf) and the
/// TF-IDF vector of body + qualified name, mapped to [0,1] via
/// (1+cos)/2. Empty bodies score a neutral 0.5.
double lexical_score(const ExpandedQuery& query, const FunctionRecord& function,
                     const LexicalModel& model);

/// POST {description, methods:[{id, body}]} to endpoint/score and read
/// back {scores:[{id, score}]}. Scores are clamped to [0,1]; a missing
/// id is a protocol error. Bounded retries on transport failure.
std::vector<ScoredFunction> remote_score(
    const ExpandedQuery& query,
    const std::vector<const FunctionRecord*>& functions,
    const std::string& endpoint);

struct ScorerConfig {
  ScorerBackend backend;
  std::size_t cap = 100;
};

/// PATCH-ABSENT candidate selection: scores every non-test function,
/// ranks descending (ties by qualified name), keeps the top cap.
CandidateSet select_candidates(const VulnRecord& record, const RepoIndex& index,
                               const ExpandedQuery& query,
                               const ScorerConfig& config = {});

struct TrainingExportConfig {
  std::size_t negatives_per_positive = 100;
  std::uint64_t seed = 0;
  TrackerConfig tracker;
};

/// For each CVE with patches: Tracker candidates become positives and a
/// seeded uniform sample of the remaining non-test functions becomes
/// negatives at the configured ratio. Output is line-delimited JSON
/// {cve_id, description, method, label}.
std::string export_training_pairs(const std::vector<VulnRecord>& records,
                                  const TrainingExportConfig& config = {});

}  // namespace vfloc
