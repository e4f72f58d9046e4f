#include "vfloc/scorer.hpp"

#include <algorithm>
#include <iostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

ScorerBackend ScorerBackend::remote(std::string url) {
  if (!url.starts_with("http://") && !url.starts_with("https://"))
    throw ConfigError("scorer endpoint must be an http(s) URL: " + url);
  return {ScorerKind::Remote, std::move(url)};
}

LexicalModel LexicalModel::build(const RepoIndex& index) {
  std::vector<TokenStream> docs;
  for (const auto& fn : index.functions) {
    if (fn.is_test) continue;
    docs.push_back(sanitize(fn.body + " " + fn.qualified_name));
  }
  return {CorpusStats::build(docs)};
}

namespace {

double idf_of(const CorpusStats& stats, const std::string& term) {
  auto it = stats.doc_freq.find(term);
  return smooth_idf(stats.doc_count, it == stats.doc_freq.end() ? 0 : it->second);
}

TermVector query_vector(const ExpandedQuery& query, const CorpusStats& stats) {
  TermVector v;
  for (const auto& [term, tf] : term_counts(query.original_terms))
    v[term] += query.repetition * tf * idf_of(stats, term);
  for (const auto& wt : query.expansion_terms)
    v[wt.term] += wt.weight * idf_of(stats, wt.term);
  return v;
}

}  // namespace

double lexical_score(const ExpandedQuery& query, const FunctionRecord& function,
                     const LexicalModel& model) {
  TokenStream doc = sanitize(function.body + " " + function.qualified_name);
  if (doc.empty()) return 0.5;
  TermVector fv;
  for (const auto& [term, tf] : term_counts(doc))
    fv[term] = tf * idf_of(model.stats, term);
  double cos = cosine(query_vector(query, model.stats), fv);
  return (1.0 + cos) / 2.0;
}

std::vector<ScoredFunction> remote_score(
    const ExpandedQuery& query,
    const std::vector<const FunctionRecord*>& functions,
    const std::string& endpoint) {
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto* fn : functions)
    methods.push_back({{"id", fn->qualified_name}, {"body", fn->body}});
  nlohmann::ordered_json request = {{"description", query.flattened()},
                                    {"methods", methods}};
  std::string payload = request.dump();

  httplib::Client client(endpoint);
  client.set_read_timeout(30, 0);
  httplib::Result res;
  const int kRetries = 3;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    res = client.Post("/score", payload, "application/json");
    if (res && res->status == 200) break;
  }
  if (!res || res->status != 200)
    throw ProtocolError("scorer endpoint unreachable after " +
                        std::to_string(kRetries) + " attempts: " + endpoint);

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed scorer response: ") + e.what());
  }
  std::unordered_map<std::string, double> by_id;
  for (const auto& item : body.value("scores", nlohmann::json::array())) {
    if (!item.contains("id") || !item.contains("score"))
      throw ProtocolError("scorer response entry missing id or score");
    by_id[item["id"].get<std::string>()] = item["score"].get<double>();
  }

  std::vector<ScoredFunction> out;
  for (const auto* fn : functions) {
    auto it = by_id.find(fn->qualified_name);
    if (it == by_id.end())
      throw ProtocolError("scorer response missing id: " + fn->qualified_name);
    double score = it->second;
    if (score < 0.0 || score > 1.0) {
      std::cerr << "warning: clamping out-of-range score " << score << " for "
                << fn->qualified_name << "\n";
      score = std::clamp(score, 0.0, 1.0);
    }
    out.push_back({fn, score});
  }
  return out;
}

CandidateSet select_candidates(const VulnRecord& record, const RepoIndex& index,
                               const ExpandedQuery& query,
                               const ScorerConfig& config) {
  std::vector<const FunctionRecord*> pool;
  for (const auto& fn : index.functions)
    if (!fn.is_test) pool.push_back(&fn);
  if (pool.empty())
    throw EmptyResultError("repository has no non-test functions to score");

  std::vector<ScoredFunction> scored;
  if (config.backend.kind == ScorerKind::Remote) {
    scored = remote_score(query, pool, config.backend.endpoint);
  } else {
    LexicalModel model = LexicalModel::build(index);
    for (const auto* fn : pool)
      scored.push_back({fn, lexical_score(query, *fn, model)});
  }

  std::sort(scored.begin(), scored.end(),
            [](const ScoredFunction& a, const ScoredFunction& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.function->qualified_name < b.function->qualified_name;
            });
  if (scored.size() > config.cap) scored.resize(config.cap);

  CandidateSet set;
  set.cve_id = record.cve_id;
  set.mode = Mode::PatchAbsent;
  for (const auto& sf : scored) {
    Candidate cand;
    cand.qualified_name = sf.function->qualified_name;
    cand.file_path = sf.function->file_path;
    cand.span = sf.function->span;
    cand.tags = {PatternTag::ScorerTopK};
    cand.score = sf.score;
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

std::string export_training_pairs(const std::vector<VulnRecord>& records,
                                  const TrainingExportConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::ostringstream out;

  for (const auto& record : records) {
    if (record.patch_refs.empty()) {
      std::cerr << "warning: " << record.cve_id
                << " has no patches; skipped from training export\n";
      continue;
    }
    std::vector<DiffHunk> hunks;
    for (const auto& ref : record.patch_refs) {
      auto parsed = parse_diff(resolve_patch_ref(ref));
      hunks.insert(hunks.end(), parsed.begin(), parsed.end());
    }
    RepoIndex index = index_repo(record.repo_path);
    CandidateSet positives = track(record.cve_id, hunks, index, config.tracker);

    std::unordered_set<std::string> positive_names;
    for (const auto& c : positives.candidates)
      positive_names.insert(c.qualified_name);

    std::vector<const FunctionRecord*> negatives_pool;
    for (const auto& fn : index.functions)
      if (!fn.is_test && !positive_names.count(fn.qualified_name))
        negatives_pool.push_back(&fn);
    std::sort(negatives_pool.begin(), negatives_pool.end(),
              [](const FunctionRecord* a, const FunctionRecord* b) {
                return a->qualified_name < b->qualified_name;
              });

    std::size_t want = config.negatives_per_positive * positive_names.size();
    if (want > negatives_pool.size()) {
      std::cerr << "warning: " << record.cve_id << " wants " << want
                << " negatives but only " << negatives_pool.size()
                << " are available\n";
      want = negatives_pool.size();
    }
    // Partial Fisher-Yates for a seeded sample without replacement.
    for (std::size_t i = 0; i < want; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, negatives_pool.size() - 1);
      std::swap(negatives_pool[i], negatives_pool[dist(rng)]);
    }

    auto emit = [&](const std::string& body, int label) {
      nlohmann::ordered_json line = {{"cve_id", record.cve_id},
                                     {"description", record.description},
                                     {"method", body},
                                     {"label", label}};
      out << line.dump() << "\n";
    };
    for (const auto& c : positives.candidates) {
      const FunctionRecord* fn = index.find_qualified(c.qualified_name);
      if (fn) emit(fn->body, 1);
    }
    for (std::size_t i = 0; i < want; ++i) emit(negatives_pool[i]->body, 0);
  }
  return out.str();
}

}  // namespace vfloc
