#include "vfloc/ranker.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "vfloc/digest.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

Outcome swap_outcome(Outcome o) {
  switch (o) {
    case Outcome::FirstWins: return Outcome::SecondWins;
    case Outcome::SecondWins: return Outcome::FirstWins;
    case Outcome::Tie: return Outcome::Tie;
  }
  return Outcome::Tie;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::FirstWins: return "first";
    case Outcome::SecondWins: return "second";
    case Outcome::Tie: return "tie";
  }
  return "tie";
}

std::optional<Outcome> outcome_from_name(const std::string& name) {
  if (name == "first") return Outcome::FirstWins;
  if (name == "second") return Outcome::SecondWins;
  if (name == "tie") return Outcome::Tie;
  return std::nullopt;
}

ComparisonCache::ComparisonCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto doc = nlohmann::json::parse(line);
      auto outcome = outcome_from_name(doc.value("outcome", ""));
      std::string digest = doc.value("digest", "");
      if (outcome && !digest.empty()) entries_[digest] = *outcome;
    } catch (const nlohmann::json::parse_error&) {
      std::cerr << "warning: skipping malformed cache line\n";
    }
  }
}

std::optional<Outcome> ComparisonCache::lookup(const std::string& digest) const {
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ComparisonCache::store(const std::string& digest, Outcome outcome) {
  auto [it, inserted] = entries_.emplace(digest, outcome);
  if (!inserted || path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  out << nlohmann::ordered_json{{"digest", digest},
                                {"outcome", outcome_name(outcome)}}
             .dump()
      << "\n";
}

std::string ComparisonCache::digest_for(const std::string& description,
                                        const std::string& id_a,
                                        const std::string& id_b) {
  const std::string& lo = std::min(id_a, id_b);
  const std::string& hi = std::max(id_a, id_b);
  return sha256_hex(description + '\x1f' + lo + '\x1f' + hi);
}

Outcome compare(const CompareContext& ctx, const RankItem& a, const RankItem& b,
                PairwiseComparator& comparator, ComparisonCache& cache,
                std::size_t& calls) {
  bool in_order = a.id <= b.id;
  const RankItem& first = in_order ? a : b;
  const RankItem& second = in_order ? b : a;
  std::string digest = ComparisonCache::digest_for(ctx.description, first.id,
                                                   second.id);
  Outcome canonical;
  if (auto cached = cache.lookup(digest)) {
    canonical = *cached;
  } else {
    canonical = comparator.compare(ctx, first, second);
    ++calls;
    cache.store(digest, canonical);
  }
  return in_order ? canonical : swap_outcome(canonical);
}

namespace {

// Rematch-avoiding perfect matching over `order` (already sorted by
// score). Pairs the head against opponents fold-first within its score
// group, backtracking when the tail cannot be completed.
bool pair_round(const std::vector<int>& order,
                const std::vector<double>& scores,
                const std::set<std::pair<int, int>>& history,
                std::vector<std::pair<int, int>>& pairs) {
  if (order.empty()) return true;
  int head = order.front();
  std::vector<int> rest(order.begin() + 1, order.end());

  // Opponent preference: same-score block folded (middle first), then
  // list order.
  std::size_t block_end = 0;
  while (block_end < rest.size() && scores[rest[block_end]] == scores[head])
    ++block_end;
  std::vector<int> preference;
  if (block_end > 0) {
    std::size_t mid = block_end / 2;
    for (std::size_t i = mid; i < block_end; ++i) preference.push_back(rest[i]);
    for (std::size_t i = 0; i < mid; ++i) preference.push_back(rest[i]);
  }
  for (std::size_t i = block_end; i < rest.size(); ++i)
    preference.push_back(rest[i]);

  for (int opp : preference) {
    auto key = std::minmax(head, opp);
    if (history.count({key.first, key.second})) continue;
    std::vector<int> remaining;
    for (int x : rest)
      if (x != opp) remaining.push_back(x);
    pairs.emplace_back(head, opp);
    if (pair_round(remaining, scores, history, pairs)) return true;
    pairs.pop_back();
  }
  return false;
}

}  // namespace

TournamentState run_swiss(const std::vector<RankItem>& candidates,
                          const CompareContext& ctx, int rounds,
                          PairwiseComparator& comparator,
                          ComparisonCache& cache, std::uint64_t seed) {
  if (rounds < 1) throw ConfigError("swiss rounds must be >= 1");
  if (candidates.size() < 2)
    throw ConfigError("swiss tournament needs at least 2 candidates");

  TournamentState state;
  state.candidates = candidates;
  int n = static_cast<int>(candidates.size());
  state.scores.assign(n, 0.0);
  state.had_bye.assign(n, false);

  // Round-1 order: seeded Fisher-Yates shuffle.
  std::vector<int> shuffle_order(n);
  for (int i = 0; i < n; ++i) shuffle_order[i] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(shuffle_order[i], shuffle_order[j]);
  }

  for (int round = 1; round <= rounds; ++round) {
    std::vector<int> order;
    if (round == 1) {
      order = shuffle_order;
    } else {
      order.resize(n);
      for (int i = 0; i < n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (state.scores[a] != state.scores[b])
          return state.scores[a] > state.scores[b];
        return state.candidates[a].id < state.candidates[b].id;
      });
    }

    if (order.size() % 2 == 1) {
      // Bye: lowest-scored candidate without a prior bye.
      int bye = -1;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!state.had_bye[*it]) {
          bye = *it;
          break;
        }
      }
      if (bye < 0) bye = order.back();
      order.erase(std::find(order.begin(), order.end(), bye));
      state.had_bye[bye] = true;
      state.scores[bye] += 1.0;
    }

    std::vector<std::pair<int, int>> pairs;
    if (!pair_round(order, state.scores, state.history, pairs)) break;

    for (const auto& [i, j] : pairs) {
      Outcome outcome = compare(ctx, state.candidates[i], state.candidates[j],
                                comparator, cache, state.comparator_calls);
      switch (outcome) {
        case Outcome::FirstWins: state.scores[i] += 1.0; break;
        case Outcome::SecondWins: state.scores[j] += 1.0; break;
        case Outcome::Tie:
          state.scores[i] += 0.5;
          state.scores[j] += 0.5;
          break;
      }
      auto key = std::minmax(i, j);
      state.history.insert({key.first, key.second});
    }
    state.rounds_played = round;
  }
  return state;
}

std::vector<double> exhaustive_rank(const std::vector<RankItem>& top,
                                    const CompareContext& ctx,
                                    PairwiseComparator& comparator,
                                    ComparisonCache& cache,
                                    std::size_t& calls) {
  std::vector<double> wins(top.size(), 0.0);
  for (std::size_t i = 0; i < top.size(); ++i) {
    for (std::size_t j = i + 1; j < top.size(); ++j) {
      Outcome outcome = compare(ctx, top[i], top[j], comparator, cache, calls);
      switch (outcome) {
        case Outcome::FirstWins: wins[i] += 1.0; break;
        case Outcome::SecondWins: wins[j] += 1.0; break;
        case Outcome::Tie:
          wins[i] += 0.5;
          wins[j] += 0.5;
          break;
      }
    }
  }
  return wins;
}

RankedResult rank(const CandidateSet& candidate_set, const RepoIndex& index,
                  const ExpandedQuery& query, PairwiseComparator& comparator,
                  ComparisonCache& cache, const RankerConfig& config) {
  if (candidate_set.candidates.empty())
    throw EmptyResultError("cannot rank an empty candidate set");

  CompareContext ctx{candidate_set.cve_id, query.flattened()};
  std::vector<RankItem> items;
  for (const auto& cand : candidate_set.candidates) {
    const FunctionRecord* fn = index.find_qualified(cand.qualified_name);
    std::string body = fn ? fn->body : "";
    if (body.size() > config.prompt_budget) body.resize(config.prompt_budget);
    items.push_back({cand.qualified_name, std::move(body)});
  }

  RankedResult result;
  result.cve_id = candidate_set.cve_id;

  int n = static_cast<int>(items.size());
  if (n == 1) {
    result.ordering.push_back({items[0].id, 0.0, 0.0, true});
    result.top_k_used = 1;
    return result;
  }

  if (n <= config.top_k) {
    std::size_t calls = 0;
    std::vector<double> wins =
        exhaustive_rank(items, ctx, comparator, cache, calls);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (wins[a] != wins[b]) return wins[a] > wins[b];
      return items[a].id < items[b].id;
    });
    for (int i : order) result.ordering.push_back({items[i].id, 0.0, wins[i], true});
    result.top_k_used = n;
    result.comparator_calls = calls;
    return result;
  }

  TournamentState state = run_swiss(items, ctx, config.rounds, comparator,
                                    cache, config.seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (state.scores[a] != state.scores[b])
      return state.scores[a] > state.scores[b];
    return items[a].id < items[b].id;  // K-boundary ties break by name
  });

  int k = config.top_k;
  std::vector<RankItem> top;
  for (int i = 0; i < k; ++i) top.push_back(items[order[i]]);

  std::size_t exhaustive_calls = 0;
  std::vector<double> wins =
      exhaustive_rank(top, ctx, comparator, cache, exhaustive_calls);

  std::vector<int> top_order(k);
  for (int i = 0; i < k; ++i) top_order[i] = i;
  std::sort(top_order.begin(), top_order.end(), [&](int a, int b) {
    if (wins[a] != wins[b]) return wins[a] > wins[b];
    double sa = state.scores[order[a]], sb = state.scores[order[b]];
    if (sa != sb) return sa > sb;
    return top[a].id < top[b].id;
  });

  for (int i : top_order)
    result.ordering.push_back(
        {top[i].id, state.scores[order[i]], wins[i], true});
  for (int i = k; i < n; ++i)
    result.ordering.push_back(
        {items[order[i]].id, state.scores[order[i]], 0.0, false});

  result.top_k_used = k;
  result.swiss_calls = state.comparator_calls;
  result.comparator_calls = state.comparator_calls + exhaustive_calls;
  return result;
}

std::string ranked_result_to_json(const RankedResult& result) {
  nlohmann::ordered_json ranking = nlohmann::ordered_json::array();
  int rank_no = 1;
  for (const auto& entry : result.ordering) {
    ranking.push_back({{"rank", rank_no++},
                       {"id", entry.id},
                       {"swiss_score", entry.swiss_score},
                       {"win_count", entry.win_count},
                       {"in_top_k", entry.in_top_k}});
  }
  // Call counters are runtime statistics, not part of the result: a warm
  // cache must reproduce this serialization byte for byte.
  nlohmann::ordered_json doc = {{"cve_id", result.cve_id},
                                {"top_k", result.top_k_used},
                                {"ranking", ranking}};
  return doc.dump(2);
}

// --- Comparator backends ---

namespace {

class TableComparator final : public PairwiseComparator {
 public:
  explicit TableComparator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open decision table: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto doc = nlohmann::json::parse(line);
      std::string a = doc.value("a", "");
      std::string b = doc.value("b", "");
      auto outcome = outcome_from_name(doc.value("outcome", ""));
      if (a.empty() || b.empty() || !outcome)
        throw ConfigError("bad decision table line: " + line);
      if (a <= b) {
        table_[a + '\x1f' + b] = *outcome;
      } else {
        table_[b + '\x1f' + a] = swap_outcome(*outcome);
      }
    }
  }

  Outcome compare(const CompareContext&, const RankItem& a,
                  const RankItem& b) override {
    bool in_order = a.id <= b.id;
    std::string key = in_order ? a.id + '\x1f' + b.id : b.id + '\x1f' + a.id;
    auto it = table_.find(key);
    if (it == table_.end()) return Outcome::Tie;
    return in_order ? it->second : swap_outcome(it->second);
  }

 private:
  std::unordered_map<std::string, Outcome> table_;
};

class TruthComparator final : public PairwiseComparator {
 public:
  explicit TruthComparator(std::set<std::string> truth)
      : truth_(std::move(truth)) {}

  Outcome compare(const CompareContext&, const RankItem& a,
                  const RankItem& b) override {
    bool ta = truth_.count(a.id) > 0, tb = truth_.count(b.id) > 0;
    if (ta && !tb) return Outcome::FirstWins;
    if (tb && !ta) return Outcome::SecondWins;
    if (ta && tb) return Outcome::Tie;
    return a.id < b.id ? Outcome::FirstWins : Outcome::SecondWins;
  }

 private:
  std::set<std::string> truth_;
};

class FunctionComparator final : public PairwiseComparator {
 public:
  using Fn = std::function<Outcome(const CompareContext&, const RankItem&,
                                   const RankItem&)>;
  explicit FunctionComparator(Fn fn) : fn_(std::move(fn)) {}
  Outcome compare(const CompareContext& ctx, const RankItem& a,
                  const RankItem& b) override {
    return fn_(ctx, a, b);
  }

 private:
  Fn fn_;
};

class LlmComparator final : public PairwiseComparator {
 public:
  explicit LlmComparator(LlmComparatorConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty())
      throw ConfigError("LLM comparator requires an endpoint (VF_LLM_ENDPOINT)");
  }

  Outcome compare(const CompareContext& ctx, const RankItem& a,
                  const RankItem& b) override {
    nlohmann::ordered_json request = {
        {"model", cfg_.model},
        {"messages",
         {{{"role", "system"},
           {"content",
            "You judge which of two Java functions is more likely to be the "
            "vulnerable function for a disclosed vulnerability. Answer with "
            "exactly one word: A, B, or TIE."}},
          {{"role", "user"}, {"content", build_prompt(ctx, a, b)}}}},
        {"temperature", 0.0}};

    httplib::Client client(cfg_.endpoint);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    httplib::Result res;
    for (int attempt = 0; attempt < 3; ++attempt) {
      res = client.Post("/v1/chat/completions", headers, request.dump(),
                        "application/json");
      if (res && res->status == 200) break;
    }
    if (!res || res->status != 200)
      throw ProtocolError("LLM endpoint unreachable: " + cfg_.endpoint);

    try {
      auto doc = nlohmann::json::parse(res->body);
      std::string content =
          doc.at("choices").at(0).at("message").at("content").get<std::string>();
      return parse_reply(content);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed LLM response: ") + e.what());
    }
  }

 private:
  std::string build_prompt(const CompareContext& ctx, const RankItem& a,
                           const RankItem& b) const {
    auto clipped = [&](const std::string& body) {
      return body.size() > cfg_.prompt_budget ? body.substr(0, cfg_.prompt_budget)
                                              : body;
    };
    std::ostringstream out;
    out << "Vulnerability (" << ctx.cve_id << "):\n"
        << ctx.description << "\n\n"
        << "Example 1: a deserialization flaw description vs (A) a method "
           "calling readObject on untrusted input and (B) a string utility. "
           "Correct answer: A\n"
        << "Example 2: a path traversal description vs (A) a logging helper "
           "and (B) a method concatenating user input into a file path. "
           "Correct answer: B\n\n"
        << "Function A (" << a.id << "):\n" << clipped(a.body) << "\n\n"
        << "Function B (" << b.id << "):\n" << clipped(b.body) << "\n\n"
        << "Which function is more likely the vulnerable function? "
           "Answer exactly A, B, or TIE.";
    return out.str();
  }

  static Outcome parse_reply(const std::string& content) {
    std::string word;
    for (char c : content) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        word += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      } else if (!word.empty()) {
        break;
      }
    }
    if (word == "A") return Outcome::FirstWins;
    if (word == "B") return Outcome::SecondWins;
    if (word == "TIE") return Outcome::Tie;
    std::cerr << "warning: unparseable comparator reply treated as tie: "
              << content.substr(0, 80) << "\n";
    return Outcome::Tie;
  }

  LlmComparatorConfig cfg_;
};

}  // namespace

std::unique_ptr<PairwiseComparator> make_table_comparator(
    const std::string& path) {
  return std::make_unique<TableComparator>(path);
}

std::unique_ptr<PairwiseComparator> make_truth_comparator(
    const std::set<std::string>& truth_ids) {
  return std::make_unique<TruthComparator>(truth_ids);
}

std::unique_ptr<PairwiseComparator> make_function_comparator(
    std::function<Outcome(const CompareContext&, const RankItem&,
                          const RankItem&)> fn) {
  return std::make_unique<FunctionComparator>(std::move(fn));
}

std::unique_ptr<PairwiseComparator> make_llm_comparator(
    LlmComparatorConfig cfg) {
  return std::make_unique<LlmComparator>(std::move(cfg));
}

}  // namespace vfloc
