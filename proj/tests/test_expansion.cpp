#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "vfloc/errors.hpp"
#include "vfloc/expansion.hpp"

using namespace vfloc;

namespace {

const std::string kFixtures = VFLOC_FIXTURE_DIR;

std::vector<CweEntry> four_doc_corpus() {
  return {
      {"CWE-A", "Deserialization",
       "The product deserializes untrusted serialized objects from the "
       "network stream without validation"},
      {"CWE-B", "Traversal",
       "Attackers traverse directories using crafted pathnames to read "
       "arbitrary files outside the sandbox"},
      {"CWE-C", "Injection",
       "Unsanitized query strings let attackers inject commands into the "
       "database engine"},
      {"CWE-D", "Overflow",
       "A buffer overflow in the parser corrupts adjacent memory when "
       "copying oversized network input"},
  };
}

// Rebuilds the TF-IDF matrix the same way the library defines it
// (ordered vocabulary, tf times smoothed idf) but recomputes the rank-k
// basis through the eigendecomposition of A^T A instead of an SVD of A.
struct EigOracle {
  std::vector<std::string> vocabulary;
  std::map<std::string, int> term_index;
  Eigen::MatrixXd u_k;  // |vocab| x k

  EigOracle(const std::vector<TokenStream>& docs, int k) {
    std::map<std::string, int> vocab;
    for (const auto& doc : docs)
      for (const auto& term : doc) vocab.emplace(term, 0);
    int idx = 0;
    for (auto& [term, index] : vocab) {
      index = idx++;
      vocabulary.push_back(term);
    }
    term_index = vocab;

    Eigen::MatrixXd a =
        Eigen::MatrixXd::Zero(vocabulary.size(), docs.size());
    std::vector<int> df(vocabulary.size(), 0);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::set<int> seen;
      for (const auto& term : docs[d]) {
        a(vocab[term], d) += 1.0;
        seen.insert(vocab[term]);
      }
      for (int t : seen) ++df[t];
    }
    for (std::size_t t = 0; t < vocabulary.size(); ++t)
      a.row(t) *= smooth_idf(docs.size(), df[t]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
    // Eigenvalues come back ascending; take the largest k.
    int n = static_cast<int>(docs.size());
    u_k.resize(vocabulary.size(), k);
    for (int j = 0; j < k; ++j) {
      double lambda = eig.eigenvalues()(n - 1 - j);
      Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - j);
      u_k.col(j) = a * v / std::sqrt(lambda);
    }
  }
};

}  // namespace

TEST_CASE("select_expansion_sources prefers direct CWE id matches") {
  auto corpus = four_doc_corpus();
  VulnRecord record;
  record.cve_id = "CVE-1";
  record.description = "A deserialization flaw";
  record.cwe_ids = {"CWE-B", "CWE-D"};
  auto sources = select_expansion_sources(record, corpus);
  REQUIRE(sources.size() == 2);
  CHECK(sources[0].cwe_id == "CWE-B");
  CHECK(sources[1].cwe_id == "CWE-D");
}

TEST_CASE("select_expansion_sources falls back to retrieval") {
  auto corpus = four_doc_corpus();
  VulnRecord record;
  record.cve_id = "CVE-2";
  record.description =
      "The application deserializes untrusted serialized objects";

  SUBCASE("no cwe ids at all") {
    auto sources = select_expansion_sources(record, corpus);
    REQUIRE(sources.size() == 1);  // prf_docs defaults to 1
    CHECK(sources[0].cwe_id == "CWE-A");
  }
  SUBCASE("all cited ids unknown") {
    record.cwe_ids = {"CWE-999"};
    auto sources = select_expansion_sources(record, corpus);
    REQUIRE(sources.size() == 1);
    CHECK(sources[0].cwe_id == "CWE-A");
  }
  SUBCASE("wider prf window") {
    ExpansionConfig config;
    config.prf_docs = 3;
    auto sources = select_expansion_sources(record, corpus, config);
    CHECK(sources.size() == 3);
    CHECK(sources[0].cwe_id == "CWE-A");
  }
  SUBCASE("empty corpus is a configuration error") {
    CHECK_THROWS_AS(select_expansion_sources(record, {}), ConfigError);
  }
}

TEST_CASE("build_projection clamps k and validates input") {
  std::vector<TokenStream> docs = {{"alpha", "beta"}, {"beta", "gamma"}};
  ProjectionModel model = build_projection(docs, 100);
  CHECK(model.k == 2);  // min(3 terms, 2 docs)
  CHECK(model.vocabulary == std::vector<std::string>{"alpha", "beta", "gamma"});
  CHECK(model.term_basis.rows() == 3);
  CHECK(model.term_basis.cols() == 2);
  CHECK(model.singular_values.size() == 2);
  CHECK(model.singular_values(0) >= model.singular_values(1));

  CHECK_THROWS_AS(build_projection({}, 2), ConfigError);
  CHECK_THROWS_AS(build_projection({TokenStream{}, TokenStream{}}, 2),
                  ConfigError);
}

TEST_CASE("projection norm grows with the latent dimension") {
  std::vector<TokenStream> docs;
  for (const auto& entry : four_doc_corpus()) docs.push_back(sanitize(entry.description));
  TokenStream query = sanitize("untrusted serialized network objects");
  double prev = -1.0;
  for (int k = 1; k <= 4; ++k) {
    ProjectionModel model = build_projection(docs, k);
    double norm = model.project(query).norm();
    CHECK(norm >= prev - 1e-12);
    prev = norm;
  }
}

TEST_CASE("term_vector is zero for out-of-vocabulary terms") {
  std::vector<TokenStream> docs = {{"alpha", "beta"}, {"beta", "gamma"}};
  ProjectionModel model = build_projection(docs, 2);
  CHECK(model.term_vector("delta").norm() == 0.0);
  CHECK(model.term_vector("beta").norm() > 0.0);
}

TEST_CASE("expanded query repeats the original terms five times") {
  auto corpus = four_doc_corpus();
  VulnRecord record;
  record.cve_id = "CVE-3";
  record.description =
      "Deserialization of untrusted data in the stream parser";
  record.cwe_ids = {"CWE-A"};
  ExpandedQuery query = expand_record(record, corpus);

  CHECK(query.repetition == 5);
  CHECK(query.sources == std::vector<std::string>{"CWE-A"});

  std::string flat = query.flattened();
  std::string original;
  for (const auto& tok : query.original_terms) {
    if (!original.empty()) original += ' ';
    original += tok;
  }
  REQUIRE(!original.empty());
  std::size_t count = 0, at = 0;
  while ((at = flat.find(original, at)) != std::string::npos) {
    ++count;
    at += original.size();
  }
  CHECK(count == 5);

  // Expansion terms never duplicate the original terms and are unique.
  std::set<std::string> originals(query.original_terms.begin(),
                                  query.original_terms.end());
  std::set<std::string> seen;
  for (const auto& wt : query.expansion_terms) {
    CHECK(originals.count(wt.term) == 0);
    CHECK(seen.insert(wt.term).second);
  }
}

TEST_CASE("expansion weights stay within [0, alpha]") {
  auto corpus = four_doc_corpus();
  for (double alpha : {0.25, 1.0, 2.0}) {
    ExpansionConfig config;
    config.alpha = alpha;
    VulnRecord record;
    record.cve_id = "CVE-4";
    record.description =
        "Crafted serialized objects reach the deserialization routine over "
        "the network";
    record.cwe_ids = {"CWE-A", "CWE-D"};
    ExpandedQuery query = expand_record(record, corpus, config);
    CHECK(!query.expansion_terms.empty());
    for (const auto& wt : query.expansion_terms) {
      CHECK(wt.weight >= 0.0);
      CHECK(wt.weight <= alpha + 1e-12);
    }
    // Sorted by weight descending.
    for (std::size_t i = 1; i < query.expansion_terms.size(); ++i)
      CHECK(query.expansion_terms[i - 1].weight >=
            query.expansion_terms[i].weight);
  }
}

TEST_CASE("weights match an independent eigendecomposition oracle") {
  auto corpus = four_doc_corpus();
  const int k = 2;

  VulnRecord record;
  record.cve_id = "CVE-5";
  record.description =
      "The message broker deserializes untrusted serialized input from "
      "remote clients";
  record.cwe_ids = {"CWE-A", "CWE-B"};

  // Library path: model over the 4 corpus docs plus the query document.
  std::vector<TokenStream> docs;
  for (const auto& entry : corpus) docs.push_back(sanitize(entry.description));
  docs.push_back(sanitize(record.description));
  ProjectionModel model = build_projection(docs, k);
  ExpansionConfig config;
  config.latent_k = k;
  auto sources = select_expansion_sources(record, corpus, config);
  ExpandedQuery query = expand(record, sources, model, config);
  REQUIRE(!query.expansion_terms.empty());

  // Oracle path: same matrix, basis from eig(A^T A), cosine by hand.
  EigOracle oracle(docs, k);
  REQUIRE(oracle.vocabulary == model.vocabulary);

  TokenStream original = sanitize(record.description);
  Eigen::VectorXd tfidf = Eigen::VectorXd::Zero(oracle.vocabulary.size());
  {
    // Recompute idf directly from the definition.
    std::map<std::string, int> df;
    for (const auto& doc : docs) {
      std::set<std::string> seen(doc.begin(), doc.end());
      for (const auto& t : seen) ++df[t];
    }
    std::map<std::string, int> tf;
    for (const auto& t : original) ++tf[t];
    for (const auto& [term, count] : tf) {
      auto it = oracle.term_index.find(term);
      if (it != oracle.term_index.end())
        tfidf[it->second] = count * smooth_idf(docs.size(), df[term]);
    }
  }
  Eigen::VectorXd projected = oracle.u_k.transpose() * tfidf;

  for (const auto& wt : query.expansion_terms) {
    Eigen::VectorXd tv =
        oracle.u_k.row(oracle.term_index.at(wt.term)).transpose();
    double expected =
        config.alpha * projected.dot(tv) / (projected.norm() * tv.norm());
    CHECK(wt.weight == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("expanded_query_to_json is well formed") {
  auto corpus = four_doc_corpus();
  VulnRecord record;
  record.cve_id = "CVE-6";
  record.description = "Deserialization of untrusted data";
  record.cwe_ids = {"CWE-A"};
  ExpandedQuery query = expand_record(record, corpus);
  std::string json = expanded_query_to_json(query);
  CHECK(json.find("\"original\"") != std::string::npos);
  CHECK(json.find("\"repetition\": 5") != std::string::npos);
  CHECK(json.find("\"sources\"") != std::string::npos);
  CHECK(json.find("CWE-A") != std::string::npos);
}
