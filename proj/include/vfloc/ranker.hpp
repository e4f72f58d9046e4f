#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vfloc/expansion.hpp"
#include "vfloc/java_index.hpp"
#include "vfloc/tracker.hpp"

namespace vfloc {

enum class Outcome { FirstWins, SecondWins, Tie };

Outcome swap_outcome(Outcome o);
const char* outcome_name(Outcome o);
std::optional<Outcome> outcome_from_name(const std::string& name);

/// What a comparator sees for each operand.
struct RankItem {
  std::string id;    // qualified function name
  std::string body;  // function source (may be truncated for prompts)
};

struct CompareContext {
  std::string cve_id;
  std::string description;  // flattened expanded query
};

/// Pairwise judge: which of a, b better matches the vulnerability.
class PairwiseComparator {
 public:
  virtual ~PairwiseComparator() = default;
  virtual Outcome compare(const CompareContext& ctx, const RankItem& a,
                          const RankItem& b) = 0;
};

/// Persistent cache keyed by a digest of (description, id_a, id_b) in
/// canonical (lexicographic) operand order. New results are appended
/// to the backing file as line-delimited JSON {digest, outcome}.
class ComparisonCache {
 public:
  ComparisonCache() = default;  // in-memory only
  explicit ComparisonCache(std::string path);  // loads, then appends

  std::optional<Outcome> lookup(const std::string& digest) const;
  void store(const std::string& digest, Outcome outcome);
  std::size_t size() const { return entries_.size(); }

  static std::string digest_for(const std::string& description,
                                const std::string& id_a,
                                const std::string& id_b);

 private:
  std::unordered_map<std::string, Outcome> entries_;
  std::string path_;
};

/// Cache-aware single comparison. Operands are canonicalized by id, so
/// compare(x,a,b) and compare(x,b,a) cost one comparator call total.
/// `calls` counts actual comparator invocations.
Outcome compare(const CompareContext& ctx, const RankItem& a, const RankItem& b,
                PairwiseComparator& comparator, ComparisonCache& cache,
                std::size_t& calls);

struct TournamentState {
  std::vector<RankItem> candidates;
  int rounds_played = 0;
  std::vector<double> scores;           // S_i
  std::set<std::pair<int, int>> history;  // played pairs, i < j
  std::vector<bool> had_bye;
  std::size_t comparator_calls = 0;
};

struct RankedEntry {
  std::string id;
  double swiss_score = 0.0;
  double win_count = 0.0;  // exhaustive stage only
  bool in_top_k = false;
};

struct RankedResult {
  std::string cve_id;
  std::vector<RankedEntry> ordering;  // rank 1 first
  int top_k_used = 0;
  std::size_t comparator_calls = 0;
  std::size_t swiss_calls = 0;
};

struct RankerConfig {
  int rounds = 8;
  int top_k = 20;
  std::size_t prompt_budget = 4000;  // chars per body in LLM prompts
  std::uint64_t seed = 0;
};

/// Swiss-system tournament: round 1 is a seeded shuffle; later rounds
/// fold-pair within score groups, avoiding rematches by backtracking.
/// Odd fields give the lowest-scored bye-less candidate a 1-point bye.
/// Stops early when no rematch-free pairing remains.
TournamentState run_swiss(const std::vector<RankItem>& candidates,
                          const CompareContext& ctx, int rounds,
                          PairwiseComparator& comparator,
                          ComparisonCache& cache, std::uint64_t seed);

/// All K(K-1)/2 pairs compared; returns win counts aligned to `top`.
std::vector<double> exhaustive_rank(const std::vector<RankItem>& top,
                                    const CompareContext& ctx,
                                    PairwiseComparator& comparator,
                                    ComparisonCache& cache,
                                    std::size_t& calls);

/// Full ranking pipeline: Swiss to top-K, exhaustive within top-K.
/// Candidate sets no larger than K skip the Swiss stage.
RankedResult rank(const CandidateSet& candidate_set, const RepoIndex& index,
                  const ExpandedQuery& query, PairwiseComparator& comparator,
                  ComparisonCache& cache, const RankerConfig& config = {});

std::string ranked_result_to_json(const RankedResult& result);

// --- Comparator backends ---

/// Decision table loaded from line-delimited JSON {a, b, outcome};
/// pairs are canonicalized, unknown pairs are ties.
std::unique_ptr<PairwiseComparator> make_table_comparator(
    const std::string& path);

/// Prefers items whose id is in the truth set; truth-vs-truth is a tie,
/// other pairs fall back to id order. Transitive and deterministic.
std::unique_ptr<PairwiseComparator> make_truth_comparator(
    const std::set<std::string>& truth_ids);

/// Wraps an arbitrary decision function (tests, simulations).
std::unique_ptr<PairwiseComparator> make_function_comparator(
    std::function<Outcome(const CompareContext&, const RankItem&,
                          const RankItem&)> fn);

/// Chat-completion HTTP backend. Reads VF_LLM_ENDPOINT, VF_LLM_API_KEY
/// and VF_LLM_MODEL unless given explicitly.
struct LlmComparatorConfig {
  std::string endpoint;
  std::string api_key;
  std::string model;
  std::size_t prompt_budget = 4000;
};
std::unique_ptr<PairwiseComparator> make_llm_comparator(LlmComparatorConfig cfg);

}  // namespace vfloc
