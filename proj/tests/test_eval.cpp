#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vfloc/errors.hpp"
#include "vfloc/eval.hpp"

#include "json.hpp"

using namespace vfloc;

namespace {

QueryResult make_query(const std::string& id,
                       std::vector<std::string> ranking,
                       std::set<std::string> truth) {
  QueryResult q;
  q.cve_id = id;
  q.ranking = std::move(ranking);
  q.truth = std::move(truth);
  return q;
}

// Straight-line re-implementations of the metric definitions, written
// as plain loops so the main code can be checked against them.
int naive_first_rank(const QueryResult& q) {  // 0 when absent
  for (std::size_t i = 0; i < q.ranking.size(); ++i)
    if (q.truth.count(q.ranking[i])) return static_cast<int>(i) + 1;
  return 0;
}

double naive_recall(const QueryResult& q, int k) {
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(q.ranking.size()); ++i)
    hits += q.truth.count(q.ranking[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(q.truth.size());
}

double naive_mrr(const std::vector<QueryResult>& qs) {
  double sum = 0.0;
  for (const auto& q : qs) {
    int r = naive_first_rank(q);
    if (r > 0) sum += 1.0 / r;
  }
  return sum / static_cast<double>(qs.size());
}

double naive_me(const std::vector<QueryResult>& qs, int k) {
  double sum = 0.0;
  for (const auto& q : qs) {
    int r = naive_first_rank(q);
    sum += (r > 0) ? std::min(r, k) : k;
  }
  return sum / static_cast<double>(qs.size());
}

std::vector<QueryResult> random_instance(std::mt19937& rng) {
  int n_queries = 1 + static_cast<int>(rng() % 5);
  std::vector<QueryResult> qs;
  for (int q = 0; q < n_queries; ++q) {
    int n_ranked = static_cast<int>(rng() % 30);  // may be empty
    std::vector<std::string> ranking;
    for (int i = 0; i < n_ranked; ++i)
      ranking.push_back("fn" + std::to_string(i));
    std::shuffle(ranking.begin(), ranking.end(), rng);
    // Truth drawn from the ranked pool plus ids that are never ranked.
    std::set<std::string> truth;
    int n_truth = 1 + static_cast<int>(rng() % 4);
    for (int t = 0; t < n_truth; ++t) {
      if (rng() % 3 == 0 || ranking.empty())
        truth.insert("absent" + std::to_string(t));
      else
        truth.insert(ranking[rng() % ranking.size()]);
    }
    qs.push_back(make_query("CVE-" + std::to_string(q), ranking, truth));
  }
  return qs;
}

}  // namespace

TEST_CASE("recall counts the relevant fraction in the cutoff") {
  QueryResult q = make_query("CVE-1", {"a", "b", "c", "d"}, {"b", "d"});
  CHECK(recall_at_k(q, 1) == 0.0);
  CHECK(recall_at_k(q, 2) == 0.5);
  CHECK(recall_at_k(q, 4) == 1.0);
  CHECK(recall_at_k(q, 100) == 1.0);  // cutoff beyond the ranking

  // Truth entirely absent from the ranking.
  QueryResult absent = make_query("CVE-2", {"a", "b"}, {"zz"});
  CHECK(recall_at_k(absent, 10) == 0.0);

  // A partial truth hit divides by the truth size, not the cutoff.
  QueryResult partial = make_query("CVE-3", {"a"}, {"a", "missing"});
  CHECK(recall_at_k(partial, 5) == 0.5);

  QueryResult empty_truth = make_query("CVE-4", {"a"}, {});
  CHECK_THROWS_AS(recall_at_k(empty_truth, 1), ConfigError);
}

TEST_CASE("mrr averages reciprocal first-relevant ranks") {
  std::vector<QueryResult> qs = {
      make_query("CVE-1", {"vf", "x"}, {"vf"}),        // rank 1
      make_query("CVE-2", {"x", "vf"}, {"vf"}),        // rank 2
      make_query("CVE-3", {"x", "y", "z", "vf"}, {"vf"}),  // rank 4
  };
  CHECK(mrr(qs) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0));

  // An absent relevant item contributes zero.
  qs.push_back(make_query("CVE-4", {"x"}, {"vf"}));
  CHECK(mrr(qs) == doctest::Approx((1.0 + 0.5 + 0.25) / 4.0));

  CHECK_THROWS_AS(mrr({}), ConfigError);
}

TEST_CASE("manual effort clips at the cutoff and charges K for misses") {
  std::vector<QueryResult> qs = {
      make_query("CVE-1", {"x", "y", "vf"}, {"vf"}),  // rank 3
      make_query("CVE-2", {"x"}, {"vf"}),             // absent
  };
  CHECK(me_at_k(qs, 10) == doctest::Approx((3.0 + 10.0) / 2.0));
  CHECK(me_at_k(qs, 1) == doctest::Approx(1.0));   // both clip to 1
  CHECK(me_at_k(qs, 3) == doctest::Approx(3.0));   // 3 and 3
  CHECK(me_at_k(qs, 100) == doctest::Approx((3.0 + 100.0) / 2.0));

  CHECK_THROWS_AS(me_at_k({}, 10), ConfigError);
}

TEST_CASE("a perfect system earns the ideal scores") {
  std::vector<QueryResult> qs;
  for (int i = 0; i < 7; ++i)
    qs.push_back(make_query("CVE-" + std::to_string(i),
                            {"vf" + std::to_string(i), "other"},
                            {"vf" + std::to_string(i)}));
  EvalReport report = aggregate(qs, "patch-present");
  CHECK(report.mrr_value == 1.0);
  for (int k : EvalReport::kRecallCutoffs) CHECK(report.recall.at(k) == 1.0);
  for (int k : EvalReport::kEffortCutoffs)
    CHECK(report.manual_effort.at(k) == 1.0);
}

TEST_CASE("metrics agree with naive re-implementations on random inputs") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    auto qs = random_instance(rng);
    CHECK(mrr(qs) == naive_mrr(qs));
    for (int k : {1, 3, 5, 10, 50, 100})
      CHECK(me_at_k(qs, k) == naive_me(qs, k));
    for (const auto& q : qs)
      for (int k : {1, 3, 5, 10}) CHECK(recall_at_k(q, k) == naive_recall(q, k));
  }
}

TEST_CASE("aggregate fills every cutoff and keeps the queries") {
  std::vector<QueryResult> qs = {
      make_query("CVE-1", {"vf", "x"}, {"vf"}),
      make_query("CVE-2", {"x", "y"}, {"vf"}),
  };
  EvalReport report = aggregate(qs, "patch-absent");
  CHECK(report.query_count == 2);
  CHECK(report.mode == "patch-absent");
  CHECK(report.recall.size() == EvalReport::kRecallCutoffs.size());
  CHECK(report.manual_effort.size() == EvalReport::kEffortCutoffs.size());
  CHECK(report.per_query.size() == 2);
  CHECK(report.mrr_value == doctest::Approx(0.5));
  CHECK(report.recall.at(1) == doctest::Approx(0.5));
  CHECK(report.manual_effort.at(10) == doctest::Approx((1.0 + 10.0) / 2.0));

  EvalReport empty = aggregate({}, "patch-absent");
  CHECK(empty.query_count == 0);
  CHECK(empty.recall.empty());
}

TEST_CASE("report_to_json carries the metrics and per-query ranks") {
  std::vector<QueryResult> qs = {
      make_query("CVE-1", {"vf", "x"}, {"vf"}),
      make_query("CVE-2", {"x"}, {"vf"}),
  };
  EvalReport report = aggregate(qs, "patch-present");
  auto doc = nlohmann::json::parse(report_to_json(report));
  CHECK(doc["mode"] == "patch-present");
  CHECK(doc["queries"] == 2);
  CHECK(doc["mrr"] == doctest::Approx(0.5));
  CHECK(doc["recall"]["recall@1"] == doctest::Approx(0.5));
  CHECK(doc["manual_effort"]["me@100"] == doctest::Approx((1.0 + 100.0) / 2.0));
  REQUIRE(doc["per_query"].size() == 2);
  CHECK(doc["per_query"][0]["first_relevant_rank"] == 1);
  CHECK(doc["per_query"][1]["first_relevant_rank"].is_null());
}

TEST_CASE("render_table lists every metric row") {
  std::vector<QueryResult> qs = {make_query("CVE-1", {"vf"}, {"vf"})};
  std::string table = render_table(aggregate(qs, "patch-present"));
  CHECK(table.find("MRR") != std::string::npos);
  for (int k : EvalReport::kRecallCutoffs)
    CHECK(table.find("Recall@" + std::to_string(k)) != std::string::npos);
  for (int k : EvalReport::kEffortCutoffs)
    CHECK(table.find("ME@" + std::to_string(k)) != std::string::npos);
  CHECK(table.find("100.00%") != std::string::npos);  // perfect recall
}
