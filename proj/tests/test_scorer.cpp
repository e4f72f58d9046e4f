#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "vfloc/errors.hpp"
#include "vfloc/scorer.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace vfloc;

namespace {

RepoIndex make_repo(int function_count) {
  std::ostringstream src;
  src << "package com.gen;\n\npublic class Bulk {\n";
  for (int i = 0; i < function_count; ++i) {
    // Each method carries a distinct alphabetic marker token.
    std::string tag = {'t', 'a', 'g', static_cast<char>('a' + i / 26),
                       static_cast<char>('a' + i % 26)};
    src << "  public int method" << i << "(int value) {\n"
        << "    int " << tag << " = value;\n"
        << "    return value + " << tag << ";\n  }\n\n";
  }
  src << "}\n";
  RepoIndex index;
  index_source("com/gen/Bulk.java", src.str(), index);
  finalize_index(index);
  return index;
}

ExpandedQuery plain_query(const std::string& text) {
  ExpandedQuery query;
  query.original_terms = sanitize(text);
  query.repetition = 5;
  return query;
}

// Serves /score from a fixed handler on an ephemeral port.
struct StubScorer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit StubScorer(httplib::Server::Handler handler) {
    server.Post("/score", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port);
  }

  ~StubScorer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("lexical_score hits 1.0 on a perfect match and 0.5 on no signal") {
  std::string source = R"java(
public class A {
  void b() {
    deserialize();
  }

  int c() {
    unrelatedTokensOnly();
  }
}
)java";
  RepoIndex index;
  index_source("A.java", source, index);
  finalize_index(index);
  LexicalModel model = LexicalModel::build(index);

  // "A#b()" contributes no tokens, so the document for b is exactly the
  // query's token set ("void" comes from the signature line in the body).
  ExpandedQuery query = plain_query("void deserialize");
  const FunctionRecord* b = index.find_qualified("A#b()");
  REQUIRE(b != nullptr);
  CHECK(lexical_score(query, *b, model) == doctest::Approx(1.0).epsilon(1e-12));

  // No shared terms: cosine 0 maps to the neutral midpoint.
  const FunctionRecord* c = index.find_qualified("A#c()");
  REQUIRE(c != nullptr);
  CHECK(lexical_score(query, *c, model) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lexical_score stays in [0,1] and rewards overlap") {
  RepoIndex index = make_repo(20);
  LexicalModel model = LexicalModel::build(index);
  ExpandedQuery query = plain_query("crafted input reaches tagaf");
  double best = -1.0;
  std::string best_name;
  for (const auto& fn : index.functions) {
    double score = lexical_score(query, fn, model);
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
    if (score > best) {
      best = score;
      best_name = fn.qualified_name;
    }
  }
  CHECK(best_name == "com.gen.Bulk#method5(int)");
}

TEST_CASE("select_candidates caps at 100 and orders by score") {
  VulnRecord record;
  record.cve_id = "CVE-CAP";
  record.description = "A crafted input reaches the tagaf marker";

  SUBCASE("150 functions yield exactly 100 candidates") {
    RepoIndex index = make_repo(150);
    CandidateSet set =
        select_candidates(record, index, plain_query(record.description));
    CHECK(set.candidates.size() == 100);
    CHECK(set.mode == Mode::PatchAbsent);
    for (const auto& cand : set.candidates) {
      REQUIRE(cand.tags.size() == 1);
      CHECK(cand.tags[0] == PatternTag::ScorerTopK);
    }
    for (std::size_t i = 1; i < set.candidates.size(); ++i)
      CHECK(set.candidates[i - 1].score >= set.candidates[i].score);
    CHECK(set.candidates[0].qualified_name == "com.gen.Bulk#method5(int)");
  }
  SUBCASE("50 functions yield exactly 50") {
    RepoIndex index = make_repo(50);
    CandidateSet set =
        select_candidates(record, index, plain_query(record.description));
    CHECK(set.candidates.size() == 50);
  }
  SUBCASE("test functions are excluded from the pool") {
    RepoIndex index = make_repo(5);
    index_source("src/test/java/BulkTest.java",
                 "public class BulkTest { void t() {} }", index);
    finalize_index(index);
    CandidateSet set =
        select_candidates(record, index, plain_query(record.description));
    CHECK(set.candidates.size() == 5);
  }
  SUBCASE("an all-test repository is an empty result") {
    RepoIndex index;
    index_source("src/test/java/BulkTest.java",
                 "public class BulkTest { void t() {} }", index);
    finalize_index(index);
    CHECK_THROWS_AS(
        select_candidates(record, index, plain_query(record.description)),
        EmptyResultError);
  }
}

TEST_CASE("remote_score speaks the wire protocol") {
  RepoIndex index = make_repo(3);
  std::vector<const FunctionRecord*> pool;
  for (const auto& fn : index.functions) pool.push_back(&fn);
  ExpandedQuery query = plain_query("bulk method");

  SUBCASE("scores are matched back by id") {
    StubScorer stub([](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      REQUIRE(body.contains("description"));
      REQUIRE(body.contains("methods"));
      nlohmann::json scores = nlohmann::json::array();
      double v = 0.2;
      for (const auto& m : body["methods"]) {
        scores.push_back({{"id", m["id"]}, {"score", v}});
        v += 0.3;
      }
      res.set_content(nlohmann::json{{"scores", scores}}.dump(),
                      "application/json");
    });
    auto scored = remote_score(query, pool, stub.endpoint());
    REQUIRE(scored.size() == 3);
    CHECK(scored[0].score == doctest::Approx(0.2));
    CHECK(scored[1].score == doctest::Approx(0.5));
    CHECK(scored[2].score == doctest::Approx(0.8));
    CHECK(scored[0].function == pool[0]);
  }

  SUBCASE("the description carries the repeated query") {
    std::string seen;
    StubScorer stub([&](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      seen = body["description"].get<std::string>();
      nlohmann::json scores = nlohmann::json::array();
      for (const auto& m : body["methods"])
        scores.push_back({{"id", m["id"]}, {"score", 0.5}});
      res.set_content(nlohmann::json{{"scores", scores}}.dump(),
                      "application/json");
    });
    remote_score(query, pool, stub.endpoint());
    CHECK(seen == query.flattened());
  }

  SUBCASE("out-of-range scores are clamped") {
    StubScorer stub([](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      nlohmann::json scores = nlohmann::json::array();
      double v = -0.5;
      for (const auto& m : body["methods"]) {
        scores.push_back({{"id", m["id"]}, {"score", v}});
        v += 1.0;
      }
      res.set_content(nlohmann::json{{"scores", scores}}.dump(),
                      "application/json");
    });
    auto scored = remote_score(query, pool, stub.endpoint());
    CHECK(scored[0].score == 0.0);
    CHECK(scored[1].score == doctest::Approx(0.5));
    CHECK(scored[2].score == 1.0);
  }

  SUBCASE("a missing id is a protocol error") {
    StubScorer stub([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"scores":[]})", "application/json");
    });
    CHECK_THROWS_AS(remote_score(query, pool, stub.endpoint()), ProtocolError);
  }

  SUBCASE("malformed response bodies are protocol errors") {
    StubScorer stub([](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "application/json");
    });
    CHECK_THROWS_AS(remote_score(query, pool, stub.endpoint()), ProtocolError);
  }

  SUBCASE("persistent HTTP failures give up after retries") {
    std::atomic<int> attempts{0};
    StubScorer stub([&](const httplib::Request&, httplib::Response& res) {
      ++attempts;
      res.status = 500;
    });
    CHECK_THROWS_AS(remote_score(query, pool, stub.endpoint()), ProtocolError);
    CHECK(attempts == 3);
  }

  SUBCASE("an unreachable endpoint is a protocol error") {
    CHECK_THROWS_AS(remote_score(query, pool, "http://127.0.0.1:1"),
                    ProtocolError);
  }
}

TEST_CASE("scorer backend validation") {
  CHECK_THROWS_AS(ScorerBackend::remote("ftp://host"), ConfigError);
  CHECK(ScorerBackend::remote("http://host:8000").kind == ScorerKind::Remote);
  CHECK(ScorerBackend::lexical().kind == ScorerKind::Lexical);
}

TEST_CASE("training export keeps a 100:1 ratio and is deterministic") {
  namespace fs = std::filesystem;
  fs::path repo = fs::temp_directory_path() / "vfloc-export-repo";
  fs::create_directories(repo / "com/gen");
  {
    std::ostringstream src;
    src << "package com.gen;\n\npublic class Wide {\n"
        << "  public int vuln(int value) {\n    return value - 1;\n  }\n\n";
    for (int i = 0; i < 120; ++i) {
      src << "  public int filler" << i << "(int value) {\n"
          << "    return value + " << i << ";\n  }\n\n";
    }
    src << "}\n";
    std::ofstream out(repo / "com/gen/Wide.java");
    out << src.str();
  }

  VulnRecord record;
  record.cve_id = "CVE-EXPORT";
  record.description = "A sign error in vuln";
  record.repo_path = repo.string();
  record.patch_refs = {
      "--- a/com/gen/Wide.java\n"
      "+++ b/com/gen/Wide.java\n"
      "@@ -4,3 +4,3 @@\n"
      "   public int vuln(int value) {\n"
      "-    return value - 1;\n"
      "+    return value + 1;\n"
      "   }\n"};

  TrainingExportConfig config;
  config.seed = 42;
  std::string jsonl = export_training_pairs({record}, config);

  std::size_t positives = 0, negatives = 0;
  std::istringstream lines(jsonl);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    auto doc = nlohmann::json::parse(line);
    CHECK(doc["cve_id"] == "CVE-EXPORT");
    CHECK(doc["description"] == record.description);
    CHECK(!doc["method"].get<std::string>().empty());
    int label = doc["label"].get<int>();
    if (label == 1) {
      ++positives;
      // Positives come first; the single positive is the patched method.
      if (first)
        CHECK(doc["method"].get<std::string>().find("value - 1") !=
              std::string::npos);
    } else {
      ++negatives;
    }
    first = false;
  }
  CHECK(positives == 1);
  CHECK(negatives == 100);

  // Same seed, byte-identical; different seed, different sample.
  CHECK(export_training_pairs({record}, config) == jsonl);
  TrainingExportConfig other = config;
  other.seed = 43;
  CHECK(export_training_pairs({record}, other) != jsonl);

  // Patch-absent records are skipped with a warning, yielding no lines.
  VulnRecord absent = record;
  absent.cve_id = "CVE-ABSENT";
  absent.patch_refs.clear();
  CHECK(export_training_pairs({absent}, config).empty());

  fs::remove_all(repo);
}

TEST_CASE("training export clamps when negatives run short") {
  std::string base = std::string(VFLOC_FIXTURE_DIR) + "/bench";
  VulnRecord record;
  record.cve_id = "CVE-2024-11001";
  record.description = "Session token bypass";
  record.repo_path = base + "/repo_a";
  record.patch_refs = {base + "/patches/a.diff"};

  std::string jsonl = export_training_pairs({record});
  std::size_t positives = 0, negatives = 0;
  std::istringstream lines(jsonl);
  std::string line;
  while (std::getline(lines, line)) {
    auto doc = nlohmann::json::parse(line);
    (doc["label"] == 1 ? positives : negatives)++;
  }
  // Tracker finds two candidates; only one other function exists.
  CHECK(positives == 2);
  CHECK(negatives == 1);
}
