#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vfloc/corpus.hpp"
#include "vfloc/text.hpp"

namespace vfloc {

struct ExpansionConfig {
  double alpha = 1.0;       // scalar on expansion-term weights
  int prf_docs = 1;         // CWE descriptions taken in the PRF path
  int latent_k = 100;       // clamped to min(#terms, #docs)
  int repetition = 5;       // original query emphasis
  double weight_floor = 0.0;  // expansion terms below this are dropped
};

/// Rank-k latent basis over a TF-IDF matrix (terms x documents).
struct ProjectionModel {
  std::vector<std::string> vocabulary;            // index -> term
  std::unordered_map<std::string, int> term_index;
  std::vector<double> idf;
  Eigen::MatrixXd term_basis;   // |vocab| x k, left singular vectors
  Eigen::VectorXd singular_values;  // k
  int k = 0;

  Eigen::VectorXd tfidf_vector(const TokenStream& doc) const;
  /// Projects a document into the k-dim latent space (U_k^T v).
  Eigen::VectorXd project(const TokenStream& doc) const;
  /// Latent vector of a single vocabulary term (row of U_k); zero
  /// vector for out-of-vocabulary terms.
  Eigen::VectorXd term_vector(const std::string& term) const;
};

struct WeightedTerm {
  std::string term;
  double weight;
};

struct ExpandedQuery {
  TokenStream original_terms;
  int repetition = 5;
  std::vector<WeightedTerm> expansion_terms;
  std::vector<std::string> sources;  // CWE ids used

  /// Original tokens repeated `repetition` times, then expansion terms.
  std::string flattened() const;
};

/// CWE entries backing the expansion: direct id matches when the record
/// lists CWE ids, otherwise the top PRF documents by BM25 over the
/// sanitized description.
std::vector<CweEntry> select_expansion_sources(const VulnRecord& record,
                                               const std::vector<CweEntry>& corpus,
                                               const ExpansionConfig& config = {});

ProjectionModel build_projection(const std::vector<TokenStream>& documents,
                                 int k);

ExpandedQuery expand(const VulnRecord& record,
                     const std::vector<CweEntry>& sources,
                     const ProjectionModel& model,
                     const ExpansionConfig& config = {});

/// Convenience wrapper: select sources, build the projection over the
/// CWE corpus plus the query document, expand.
ExpandedQuery expand_record(const VulnRecord& record,
                            const std::vector<CweEntry>& corpus,
                            const ExpansionConfig& config = {});

std::string expanded_query_to_json(const ExpandedQuery& query);

}  // namespace vfloc
