#include "vfloc/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  config.apply_json(buf.str());
  return config;
}

void RunConfig::apply_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (doc.contains("mode")) {
    std::string m = doc["mode"].get<std::string>();
    if (m == "auto") mode = ModeChoice::Auto;
    else if (m == "patch-present") mode = ModeChoice::ForcePatchPresent;
    else if (m == "patch-absent") mode = ModeChoice::ForcePatchAbsent;
    else throw ConfigError("unknown mode: " + m);
  }
  if (doc.contains("expansion")) {
    const auto& e = doc["expansion"];
    maybe(e, "alpha", expansion.alpha);
    maybe(e, "prf_docs", expansion.prf_docs);
    maybe(e, "latent_k", expansion.latent_k);
    maybe(e, "repetition", expansion.repetition);
    maybe(e, "weight_floor", expansion.weight_floor);
  }
  if (doc.contains("tracker")) {
    const auto& t = doc["tracker"];
    maybe(t, "additive_fallback", tracker.additive_fallback);
    maybe(t, "cap", tracker.cap);
  }
  if (doc.contains("scorer")) {
    const auto& s = doc["scorer"];
    maybe(s, "cap", scorer.cap);
    if (s.contains("backend")) {
      std::string b = s["backend"].get<std::string>();
      if (b == "lexical") scorer.backend = ScorerBackend::lexical();
      else scorer.backend = ScorerBackend::remote(b);
    }
  }
  if (doc.contains("ranker")) {
    const auto& r = doc["ranker"];
    maybe(r, "rounds", ranker.rounds);
    maybe(r, "top_k", ranker.top_k);
    maybe(r, "prompt_budget", ranker.prompt_budget);
    maybe(r, "seed", ranker.seed);
  }
  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    maybe(p, "cwe_corpus", cwe_corpus_path);
    maybe(p, "cache", cache_path);
  }
}

LocateOutcome locate(const VulnRecord& record, const RepoIndex& index,
                     const std::vector<CweEntry>& cwe_corpus,
                     PairwiseComparator& comparator, ComparisonCache& cache,
                     const RunConfig& config) {
  LocateOutcome out;
  out.query = expand_record(record, cwe_corpus, config.expansion);

  Mode mode = record.mode();
  if (config.mode == ModeChoice::ForcePatchPresent) mode = Mode::PatchPresent;
  if (config.mode == ModeChoice::ForcePatchAbsent) mode = Mode::PatchAbsent;
  out.mode_used = mode;

  if (mode == Mode::PatchPresent) {
    if (record.patch_refs.empty())
      throw ConfigError(record.cve_id +
                        " has no patches; use --mode patch-absent");
    std::vector<DiffHunk> hunks;
    for (const auto& ref : record.patch_refs) {
      auto parsed = parse_diff(resolve_patch_ref(ref));
      hunks.insert(hunks.end(), parsed.begin(), parsed.end());
    }
    out.candidates = track(record.cve_id, hunks, index, config.tracker);
  } else {
    out.candidates = select_candidates(record, index, out.query, config.scorer);
  }

  out.ranked = rank(out.candidates, index, out.query, comparator, cache,
                    config.ranker);
  return out;
}

EvalReport run_benchmark(const std::vector<VulnRecord>& records,
                         const std::vector<GroundTruth>& truths,
                         const std::vector<CweEntry>& cwe_corpus,
                         PairwiseComparator& comparator,
                         ComparisonCache& cache, const RunConfig& config) {
  std::vector<QueryResult> queries;
  std::size_t skipped = 0;

  for (const auto& record : records) {
    auto truth_it =
        std::find_if(truths.begin(), truths.end(), [&](const GroundTruth& gt) {
          return gt.cve_id == record.cve_id;
        });
    if (truth_it == truths.end()) {
      std::cerr << "warning: no ground truth for " << record.cve_id
                << "; skipped\n";
      ++skipped;
      continue;
    }

    RepoIndex index = index_repo(record.repo_path);

    QueryResult query;
    query.cve_id = record.cve_id;
    std::size_t unresolvable = 0;
    for (const auto& vf : truth_it->vf_refs) {
      if (index.find_qualified(vf.qualified_name)) {
        query.truth.insert(vf.qualified_name);
      } else {
        ++unresolvable;
        std::cerr << "warning: " << record.cve_id << " truth "
                  << vf.qualified_name << " not resolvable in index\n";
      }
    }
    if (query.truth.empty()) {
      std::cerr << "warning: " << record.cve_id
                << " has no resolvable truth (" << unresolvable
                << " unresolvable); skipped\n";
      ++skipped;
      continue;
    }

    LocateOutcome outcome =
        locate(record, index, cwe_corpus, comparator, cache, config);
    for (const auto& entry : outcome.ranked.ordering)
      query.ranking.push_back(entry.id);
    queries.push_back(std::move(query));
  }

  std::string mode_label;
  switch (config.mode) {
    case ModeChoice::Auto: mode_label = "auto"; break;
    case ModeChoice::ForcePatchPresent: mode_label = "patch-present"; break;
    case ModeChoice::ForcePatchAbsent: mode_label = "patch-absent"; break;
  }
  EvalReport report = aggregate(queries, mode_label);
  report.skipped = skipped;
  return report;
}

}  // namespace vfloc
