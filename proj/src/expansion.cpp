#include "vfloc/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/SVD>

#include "json.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

Eigen::VectorXd ProjectionModel::tfidf_vector(const TokenStream& doc) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(vocabulary.size());
  for (const auto& term : doc) {
    auto it = term_index.find(term);
    if (it != term_index.end()) v[it->second] += 1.0;
  }
  for (int i = 0; i < v.size(); ++i) v[i] *= idf[i];
  return v;
}

Eigen::VectorXd ProjectionModel::project(const TokenStream& doc) const {
  return term_basis.transpose() * tfidf_vector(doc);
}

Eigen::VectorXd ProjectionModel::term_vector(const std::string& term) const {
  auto it = term_index.find(term);
  if (it == term_index.end()) return Eigen::VectorXd::Zero(k);
  return term_basis.row(it->second).transpose();
}

std::string ExpandedQuery::flattened() const {
  std::ostringstream out;
  for (int r = 0; r < repetition; ++r) {
    for (const auto& tok : original_terms) out << tok << ' ';
  }
  for (const auto& wt : expansion_terms) out << wt.term << ' ';
  std::string s = out.str();
  if (!s.empty()) s.pop_back();
  return s;
}

std::vector<CweEntry> select_expansion_sources(const VulnRecord& record,
                                               const std::vector<CweEntry>& corpus,
                                               const ExpansionConfig& config) {
  if (corpus.empty())
    throw ConfigError("CWE corpus is empty; expansion has no ingredients");

  std::vector<CweEntry> selected;
  if (!record.cwe_ids.empty()) {
    for (const auto& id : record.cwe_ids) {
      auto it = std::find_if(corpus.begin(), corpus.end(),
                             [&](const CweEntry& e) { return e.cwe_id == id; });
      if (it != corpus.end()) {
        selected.push_back(*it);
      } else {
        std::cerr << "warning: " << record.cve_id << " cites " << id
                  << " which is not in the CWE corpus\n";
      }
    }
    if (!selected.empty()) return selected;
    // All cited ids missing: fall through to the PRF path.
  }

  TokenStream query = sanitize(record.description);
  std::vector<TokenStream> docs;
  docs.reserve(corpus.size());
  for (const auto& entry : corpus) docs.push_back(sanitize(entry.description));
  CorpusStats stats = CorpusStats::build(docs);

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    scored.emplace_back(bm25(query, docs[i], stats), i);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  int take = std::max(1, config.prf_docs);
  for (int i = 0; i < take && i < static_cast<int>(scored.size()); ++i)
    selected.push_back(corpus[scored[i].second]);
  return selected;
}

ProjectionModel build_projection(const std::vector<TokenStream>& documents,
                                 int k) {
  if (documents.empty())
    throw ConfigError("cannot build a projection over zero documents");

  ProjectionModel model;
  std::map<std::string, int> vocab;  // ordered for determinism
  for (const auto& doc : documents)
    for (const auto& term : doc) vocab.emplace(term, 0);
  if (vocab.empty())
    throw ConfigError("cannot build a projection over all-empty documents");

  int idx = 0;
  for (auto& [term, index] : vocab) {
    index = idx++;
    model.vocabulary.push_back(term);
  }
  model.term_index.insert(vocab.begin(), vocab.end());

  std::size_t n_terms = model.vocabulary.size();
  std::size_t n_docs = documents.size();
  std::vector<std::size_t> df(n_terms, 0);
  Eigen::MatrixXd tf = Eigen::MatrixXd::Zero(n_terms, n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::set<int> seen;
    for (const auto& term : documents[d]) {
      int t = model.term_index.at(term);
      tf(t, d) += 1.0;
      seen.insert(t);
    }
    for (int t : seen) ++df[t];
  }
  model.idf.resize(n_terms);
  for (std::size_t t = 0; t < n_terms; ++t) {
    model.idf[t] = smooth_idf(n_docs, df[t]);
    tf.row(t) *= model.idf[t];
  }

  int bound = static_cast<int>(std::min(n_terms, n_docs));
  if (k < 1 || k > bound) {
    std::cerr << "warning: latent dimension " << k << " clamped to [1, "
              << bound << "]\n";
    k = std::clamp(k, 1, bound);
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(tf, Eigen::ComputeThinU);
  model.k = k;
  model.term_basis = svd.matrixU().leftCols(k);
  model.singular_values = svd.singularValues().head(k);
  return model;
}

ExpandedQuery expand(const VulnRecord& record,
                     const std::vector<CweEntry>& sources,
                     const ProjectionModel& model,
                     const ExpansionConfig& config) {
  ExpandedQuery query;
  query.original_terms = sanitize(record.description);
  query.repetition = config.repetition;
  for (const auto& src : sources) query.sources.push_back(src.cwe_id);

  std::set<std::string> original(query.original_terms.begin(),
                                 query.original_terms.end());
  Eigen::VectorXd projected = model.project(query.original_terms);
  double query_norm = projected.norm();

  std::set<std::string> seen;
  for (const auto& src : sources) {
    for (const auto& term : sanitize(src.description)) {
      if (original.count(term) || !seen.insert(term).second) continue;
      Eigen::VectorXd tv = model.term_vector(term);
      double tv_norm = tv.norm();
      double cos = 0.0;
      if (query_norm > 0.0 && tv_norm > 0.0)
        cos = projected.dot(tv) / (query_norm * tv_norm);
      double weight = config.alpha * cos;
      if (weight < config.weight_floor) continue;
      query.expansion_terms.push_back({term, weight});
    }
  }
  std::stable_sort(query.expansion_terms.begin(), query.expansion_terms.end(),
                   [](const WeightedTerm& a, const WeightedTerm& b) {
                     if (a.weight != b.weight) return a.weight > b.weight;
                     return a.term < b.term;
                   });
  return query;
}

ExpandedQuery expand_record(const VulnRecord& record,
                            const std::vector<CweEntry>& corpus,
                            const ExpansionConfig& config) {
  std::vector<CweEntry> sources = select_expansion_sources(record, corpus, config);
  std::vector<TokenStream> docs;
  for (const auto& entry : corpus) docs.push_back(sanitize(entry.description));
  docs.push_back(sanitize(record.description));
  ProjectionModel model = build_projection(docs, config.latent_k);
  return expand(record, sources, model, config);
}

std::string expanded_query_to_json(const ExpandedQuery& query) {
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const auto& wt : query.expansion_terms)
    terms.push_back({{"term", wt.term}, {"weight", wt.weight}});
  std::string original;
  for (const auto& tok : query.original_terms) {
    if (!original.empty()) original += ' ';
    original += tok;
  }
  nlohmann::ordered_json doc = {{"original", original},
                                {"repetition", query.repetition},
                                {"terms", terms},
                                {"sources", query.sources}};
  return doc.dump(2);
}

}  // namespace vfloc
