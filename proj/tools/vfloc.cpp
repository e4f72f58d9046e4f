#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vfloc/errors.hpp"
#include "vfloc/pipeline.hpp"

namespace {

using namespace vfloc;

std::string read_file_or_die(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

VulnRecord find_record(const std::vector<VulnRecord>& records,
                       const std::string& cve_id) {
  for (const auto& rec : records)
    if (rec.cve_id == cve_id) return rec;
  throw ConfigError("no such record: " + cve_id);
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? value : fallback;
}

// Spec strings: "mock:<table-path>", "truth:<ground-truth-path>", "llm".
std::unique_ptr<PairwiseComparator> make_comparator(const std::string& spec,
                                                    std::size_t prompt_budget) {
  if (spec.starts_with("mock:")) return make_table_comparator(spec.substr(5));
  if (spec.starts_with("truth:")) {
    std::set<std::string> ids;
    for (const auto& gt : load_ground_truth(spec.substr(6)))
      for (const auto& vf : gt.vf_refs) ids.insert(vf.qualified_name);
    return make_truth_comparator(ids);
  }
  if (spec == "llm" || spec.empty()) {
    LlmComparatorConfig cfg;
    cfg.endpoint = env_or("VF_LLM_ENDPOINT", "");
    cfg.api_key = env_or("VF_LLM_API_KEY", "");
    cfg.model = env_or("VF_LLM_MODEL", "gpt-4.1");
    cfg.prompt_budget = prompt_budget;
    return make_llm_comparator(std::move(cfg));
  }
  throw ConfigError("unknown comparator spec: " + spec);
}

struct CommonArgs {
  std::string config_path;
  std::string records_path;
  std::string cve_id;
  std::string cwe_path;
  std::string repo_override;
  std::string comparator_spec = "llm";
  std::string mode = "auto";
};

void add_pipeline_flags(CLI::App* cmd, CommonArgs& args, RunConfig& config) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--mode", args.mode, "auto|patch-present|patch-absent");
  cmd->add_option("--alpha", config.expansion.alpha, "expansion weight scale");
  cmd->add_option("--prf-docs", config.expansion.prf_docs,
                  "CWE descriptions taken by PRF");
  cmd->add_option("--latent-k", config.expansion.latent_k, "LSA rank");
  cmd->add_option("--repetition", config.expansion.repetition,
                  "original-query repetition");
  cmd->add_option("--tracker-cap", config.tracker.cap, "tracker candidate cap");
  cmd->add_flag("!--exclusive-fallback", config.tracker.additive_fallback,
                "only fall back to modified functions when no pattern fires");
  cmd->add_option("--scorer-cap", config.scorer.cap, "scorer candidate cap");
  cmd->add_option("--rounds", config.ranker.rounds, "swiss rounds");
  cmd->add_option("--top-k", config.ranker.top_k, "exhaustive stage size");
  cmd->add_option("--prompt-budget", config.ranker.prompt_budget,
                  "chars of each body shown to the comparator");
  cmd->add_option("--seed", config.ranker.seed, "tournament seed");
  cmd->add_option("--cache", config.cache_path, "comparison cache file");
  cmd->add_option("--comparator", args.comparator_spec,
                  "llm | mock:<table> | truth:<ground-truth>");
}

RunConfig finalize_config(const CommonArgs& args, RunConfig flag_values,
                          CLI::App* cmd) {
  RunConfig config;
  if (!args.config_path.empty())
    config = RunConfig::from_json_file(args.config_path);
  // Flags override file values override defaults.
  // Subcommands register different option subsets; absent options count
  // as unused instead of raising.
  auto used = [&](const char* name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (used("--alpha")) config.expansion.alpha = flag_values.expansion.alpha;
  if (used("--prf-docs")) config.expansion.prf_docs = flag_values.expansion.prf_docs;
  if (used("--latent-k")) config.expansion.latent_k = flag_values.expansion.latent_k;
  if (used("--repetition"))
    config.expansion.repetition = flag_values.expansion.repetition;
  if (used("--tracker-cap")) config.tracker.cap = flag_values.tracker.cap;
  if (used("--exclusive-fallback"))
    config.tracker.additive_fallback = flag_values.tracker.additive_fallback;
  if (used("--scorer-cap")) config.scorer.cap = flag_values.scorer.cap;
  if (used("--rounds")) config.ranker.rounds = flag_values.ranker.rounds;
  if (used("--top-k")) config.ranker.top_k = flag_values.ranker.top_k;
  if (used("--prompt-budget"))
    config.ranker.prompt_budget = flag_values.ranker.prompt_budget;
  if (used("--seed")) config.ranker.seed = flag_values.ranker.seed;
  if (used("--cache")) config.cache_path = flag_values.cache_path;

  if (args.mode == "auto") config.mode = ModeChoice::Auto;
  else if (args.mode == "patch-present") config.mode = ModeChoice::ForcePatchPresent;
  else if (args.mode == "patch-absent") config.mode = ModeChoice::ForcePatchAbsent;
  else throw ConfigError("unknown mode: " + args.mode);

  std::string scorer_endpoint = env_or("VF_SCORER_ENDPOINT", "");
  if (!scorer_endpoint.empty())
    config.scorer.backend = ScorerBackend::remote(scorer_endpoint);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulnerable-function localization for disclosed CVEs"};
  app.require_subcommand(1);

  CommonArgs args;
  RunConfig flag_values;

  auto* cmd_locate = app.add_subcommand(
      "locate", "full pipeline: expand, select candidates, rank");
  auto* cmd_expand =
      app.add_subcommand("expand", "print the expanded query for one CVE");
  auto* cmd_index = app.add_subcommand("index", "index a Java repository");
  auto* cmd_track =
      app.add_subcommand("track", "patch-present candidate selection");
  auto* cmd_score =
      app.add_subcommand("score", "patch-absent candidate selection");
  auto* cmd_rank =
      app.add_subcommand("rank", "rank a previously produced candidate set");
  auto* cmd_eval =
      app.add_subcommand("eval", "run the benchmark and print metrics");
  auto* cmd_export = app.add_subcommand(
      "export-training", "emit cross-encoder training pairs from tracked CVEs");

  std::string truth_path, candidates_path, out_path, repo_path;
  std::size_t export_ratio = 100;
  std::uint64_t export_seed = 0;

  for (CLI::App* cmd : {cmd_locate, cmd_expand, cmd_track, cmd_score, cmd_rank,
                        cmd_eval, cmd_export}) {
    cmd->add_option("--records", args.records_path, "records.json")->required();
  }
  for (CLI::App* cmd : {cmd_locate, cmd_expand, cmd_track, cmd_score, cmd_rank}) {
    cmd->add_option("--cve", args.cve_id, "CVE id to process")->required();
    cmd->add_option("--repo", args.repo_override,
                    "repository path override (default: record.repo_path)");
  }
  for (CLI::App* cmd : {cmd_locate, cmd_expand, cmd_score, cmd_rank, cmd_eval}) {
    cmd->add_option("--cwe", args.cwe_path, "cwe.json corpus")->required();
  }
  for (CLI::App* cmd : {cmd_locate, cmd_track, cmd_score, cmd_rank, cmd_eval}) {
    add_pipeline_flags(cmd, args, flag_values);
  }
  cmd_expand->add_option("--config", args.config_path, "JSON config file");
  cmd_expand->add_option("--alpha", flag_values.expansion.alpha, "");
  cmd_expand->add_option("--prf-docs", flag_values.expansion.prf_docs, "");
  cmd_expand->add_option("--latent-k", flag_values.expansion.latent_k, "");
  cmd_expand->add_option("--repetition", flag_values.expansion.repetition, "");

  cmd_index->add_option("--repo", repo_path, "repository path")->required();
  cmd_rank->add_option("--candidates", candidates_path,
                       "candidate set JSON from track/score")
      ->required();
  cmd_eval->add_option("--truth", truth_path, "ground_truth.json")->required();
  cmd_export->add_option("--ratio", export_ratio, "negatives per positive");
  cmd_export->add_option("--seed", export_seed, "sampling seed");
  cmd_export->add_option("--out", out_path, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* active = app.get_subcommands().front();

    if (active == cmd_index) {
      RepoIndex index = index_repo(repo_path);
      nlohmann::ordered_json doc = {{"files", index.files_indexed},
                                    {"functions", index.functions.size()},
                                    {"fields", index.fields.size()},
                                    {"skipped", index.files_skipped}};
      std::cout << doc.dump(2) << "\n";
      return 0;
    }

    if (active == cmd_export) {
      auto records = load_vuln_records(args.records_path);
      TrainingExportConfig cfg;
      cfg.negatives_per_positive = export_ratio;
      cfg.seed = export_seed;
      std::string data = export_training_pairs(records, cfg);
      if (out_path.empty()) {
        std::cout << data;
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + out_path);
        out << data;
      }
      return 0;
    }

    auto records = load_vuln_records(args.records_path);
    RunConfig config = finalize_config(args, flag_values, active);

    if (active == cmd_expand) {
      VulnRecord record = find_record(records, args.cve_id);
      auto corpus = load_cwe_corpus(args.cwe_path);
      std::cout << expanded_query_to_json(
                       expand_record(record, corpus, config.expansion))
                << "\n";
      return 0;
    }

    if (active == cmd_eval) {
      auto corpus = load_cwe_corpus(args.cwe_path);
      auto truths = load_ground_truth(truth_path);
      auto comparator =
          make_comparator(args.comparator_spec, config.ranker.prompt_budget);
      ComparisonCache cache = config.cache_path.empty()
                                  ? ComparisonCache()
                                  : ComparisonCache(config.cache_path);
      EvalReport report = run_benchmark(records, truths, corpus, *comparator,
                                        cache, config);
      std::cout << report_to_json(report) << "\n";
      std::cerr << render_table(report);
      return 0;
    }

    VulnRecord record = find_record(records, args.cve_id);
    if (!args.repo_override.empty()) record.repo_path = args.repo_override;
    RepoIndex index = index_repo(record.repo_path);

    if (active == cmd_track) {
      if (record.patch_refs.empty())
        throw ConfigError(record.cve_id +
                          " has no patches; use the score subcommand "
                          "(patch-absent mode)");
      std::vector<DiffHunk> hunks;
      for (const auto& ref : record.patch_refs) {
        auto parsed = parse_diff(resolve_patch_ref(ref));
        hunks.insert(hunks.end(), parsed.begin(), parsed.end());
      }
      std::cout << candidate_set_to_json(
                       track(record.cve_id, hunks, index, config.tracker))
                << "\n";
      return 0;
    }

    auto corpus = load_cwe_corpus(args.cwe_path);

    if (active == cmd_score) {
      ExpandedQuery query = expand_record(record, corpus, config.expansion);
      std::cout << candidate_set_to_json(
                       select_candidates(record, index, query, config.scorer))
                << "\n";
      return 0;
    }

    auto comparator =
        make_comparator(args.comparator_spec, config.ranker.prompt_budget);
    ComparisonCache cache = config.cache_path.empty()
                                ? ComparisonCache()
                                : ComparisonCache(config.cache_path);

    if (active == cmd_rank) {
      CandidateSet set =
          candidate_set_from_json(read_file_or_die(candidates_path));
      ExpandedQuery query = expand_record(record, corpus, config.expansion);
      std::cout << ranked_result_to_json(rank(set, index, query, *comparator,
                                              cache, config.ranker))
                << "\n";
      return 0;
    }

    // locate
    LocateOutcome outcome =
        locate(record, index, corpus, *comparator, cache, config);
    std::cout << ranked_result_to_json(outcome.ranked) << "\n";
    std::cerr << "mode: " << mode_name(outcome.mode_used) << ", candidates: "
              << outcome.candidates.candidates.size() << ", comparator calls: "
              << outcome.ranked.comparator_calls << "\n";
    int shown = 0;
    for (const auto& entry : outcome.ranked.ordering) {
      std::cerr << "  " << ++shown << ". " << entry.id << "\n";
      if (shown >= 10) break;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vfloc::exit_code_for(e);
  }
}
