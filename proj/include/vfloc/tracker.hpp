#pragma once

#include <string>
#include <vector>

#include "vfloc/corpus.hpp"
#include "vfloc/diff.hpp"
#include "vfloc/java_index.hpp"

namespace vfloc {

enum class PatternTag {
  ReplacedMethod,
  ReplacedClass,
  AdditionalArguments,
  ConfigChange,
  ModifiedFallback,
  ScorerTopK,
};

const char* pattern_tag_name(PatternTag tag);

struct Candidate {
  std::string qualified_name;
  std::string file_path;
  Span span;
  std::vector<PatternTag> tags;
  std::string note;
  double score = 0.0;  // scorer-selected candidates only
};

struct CandidateSet {
  std::string cve_id;
  Mode mode = Mode::PatchPresent;
  std::vector<Candidate> candidates;
};

struct TrackerConfig {
  bool additive_fallback = true;  // include all modified functions always
  std::size_t cap = 100;
};

struct PatternHit {
  const FunctionRecord* function;
  PatternTag tag;
  std::string note;
};

std::vector<PatternHit> detect_replaced_method(const DiffHunk& hunk,
                                               const RepoIndex& index);
std::vector<PatternHit> detect_replaced_class(const DiffHunk& hunk,
                                              const RepoIndex& index);
std::vector<PatternHit> detect_additional_arguments(const DiffHunk& hunk,
                                                    const RepoIndex& index);
std::vector<PatternHit> detect_config_change(const DiffHunk& hunk,
                                             const RepoIndex& index);

/// Applies all four patterns over all hunks plus the modified-function
/// fallback, deduplicates with tag merge, and caps the result.
CandidateSet track(const std::string& cve_id,
                   const std::vector<DiffHunk>& hunks, const RepoIndex& index,
                   const TrackerConfig& config = {});

std::string candidate_set_to_json(const CandidateSet& set);
CandidateSet candidate_set_from_json(const std::string& text);

}  // namespace vfloc
