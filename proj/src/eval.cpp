#include "vfloc/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

const std::vector<int> EvalReport::kRecallCutoffs = {1, 3, 5, 10};
const std::vector<int> EvalReport::kEffortCutoffs = {1, 3, 5, 10, 50, 100};

namespace {

// 1-based rank of the first relevant item, if any.
std::optional<int> first_relevant_rank(const QueryResult& query) {
  for (std::size_t i = 0; i < query.ranking.size(); ++i)
    if (query.truth.count(query.ranking[i]))
      return static_cast<int>(i) + 1;
  return std::nullopt;
}

}  // namespace

double recall_at_k(const QueryResult& query, int k) {
  if (query.truth.empty())
    throw ConfigError("recall over an empty truth set: " + query.cve_id);
  std::size_t hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(query.ranking.size()); ++i)
    if (query.truth.count(query.ranking[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(query.truth.size());
}

double mrr(const std::vector<QueryResult>& queries) {
  if (queries.empty()) throw ConfigError("MRR over zero queries");
  double sum = 0.0;
  for (const auto& q : queries) {
    auto rank = first_relevant_rank(q);
    if (rank) sum += 1.0 / *rank;
  }
  return sum / static_cast<double>(queries.size());
}

double me_at_k(const std::vector<QueryResult>& queries, int k) {
  if (queries.empty()) throw ConfigError("ME@K over zero queries");
  double sum = 0.0;
  for (const auto& q : queries) {
    auto rank = first_relevant_rank(q);
    sum += rank ? std::min(*rank, k) : k;
  }
  return sum / static_cast<double>(queries.size());
}

EvalReport aggregate(const std::vector<QueryResult>& queries,
                     const std::string& mode) {
  EvalReport report;
  report.mode = mode;
  report.per_query = queries;
  report.query_count = queries.size();
  if (queries.empty()) return report;
  report.mrr_value = mrr(queries);
  for (int k : EvalReport::kRecallCutoffs) {
    double sum = 0.0;
    for (const auto& q : queries) sum += recall_at_k(q, k);
    report.recall[k] = sum / static_cast<double>(queries.size());
  }
  for (int k : EvalReport::kEffortCutoffs)
    report.manual_effort[k] = me_at_k(queries, k);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json recall, effort;
  for (const auto& [k, v] : report.recall) recall["recall@" + std::to_string(k)] = v;
  for (const auto& [k, v] : report.manual_effort)
    effort["me@" + std::to_string(k)] = v;

  nlohmann::ordered_json per_query = nlohmann::ordered_json::array();
  for (const auto& q : report.per_query) {
    auto rank = first_relevant_rank(q);
    per_query.push_back(
        {{"cve_id", q.cve_id},
         {"first_relevant_rank",
          rank ? nlohmann::ordered_json(*rank) : nlohmann::ordered_json(nullptr)},
         {"ranked", q.ranking.size()}});
  }
  nlohmann::ordered_json doc = {{"mode", report.mode},
                                {"queries", report.query_count},
                                {"skipped", report.skipped},
                                {"mrr", report.mrr_value},
                                {"recall", recall},
                                {"manual_effort", effort},
                                {"per_query", per_query}};
  return doc.dump(2);
}

std::string render_table(const EvalReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& label, double value, bool percent) {
    out << std::left << std::setw(12) << label << std::right << std::setw(10)
        << std::fixed << std::setprecision(2)
        << (percent ? value * 100.0 : value) << (percent ? "%" : " ") << "\n";
  };
  out << std::left << std::setw(12) << "Metric" << std::right << std::setw(11)
      << report.mode << "\n";
  row("MRR", report.mrr_value, false);
  for (int k : EvalReport::kRecallCutoffs)
    if (report.recall.count(k))
      row("Recall@" + std::to_string(k), report.recall.at(k), true);
  for (int k : EvalReport::kEffortCutoffs)
    if (report.manual_effort.count(k))
      row("ME@" + std::to_string(k), report.manual_effort.at(k), false);
  return out.str();
}

}  // namespace vfloc
