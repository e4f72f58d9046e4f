#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vfloc/corpus.hpp"
#include "vfloc/ranker.hpp"

namespace vfloc {

struct QueryResult {
  std::string cve_id;
  std::vector<std::string> ranking;  // rank 1 first
  std::set<std::string> truth;       // relevant qualified names
};

/// Per-query fraction of relevant items found in the top K.
double recall_at_k(const QueryResult& query, int k);

/// Mean reciprocal first-relevant rank; a query whose relevant items
/// are absent from its ranking contributes 0.
double mrr(const std::vector<QueryResult>& queries);

/// Mean of min(first-relevant rank, K); an absent relevant item costs
/// the maximal effort K.
double me_at_k(const std::vector<QueryResult>& queries, int k);

struct EvalReport {
  std::size_t query_count = 0;
  std::size_t skipped = 0;  // records without usable ground truth
  std::string mode;
  double mrr_value = 0.0;
  std::map<int, double> recall;  // K in {1,3,5,10}
  std::map<int, double> manual_effort;  // K in {1,3,5,10,50,100}
  std::vector<QueryResult> per_query;

  static const std::vector<int> kRecallCutoffs;
  static const std::vector<int> kEffortCutoffs;
};

EvalReport aggregate(const std::vector<QueryResult>& queries,
                     const std::string& mode);

std::string report_to_json(const EvalReport& report);

/// Aligned-column text table with the MRR / Recall@K / ME@K rows.
std::string render_table(const EvalReport& report);

}  // namespace vfloc
