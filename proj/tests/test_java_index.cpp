#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <string>

#include "vfloc/errors.hpp"
#include "vfloc/java_index.hpp"

using namespace vfloc;

namespace {

const std::string kFixtures = VFLOC_FIXTURE_DIR;

const FunctionRecord& get(const RepoIndex& index, const std::string& qname) {
  const FunctionRecord* fn = index.find_qualified(qname);
  REQUIRE_MESSAGE(fn != nullptr, "missing function: " << qname);
  return *fn;
}

}  // namespace

TEST_CASE("is_test_file recognizes test paths and names") {
  CHECK(is_test_file("src/test/java/com/example/AppTest.java"));
  CHECK(is_test_file("src/main/java/com/example/AppTest.java"));
  CHECK(is_test_file("module/tests/Helper.java"));
  CHECK(is_test_file("test/Helper.java"));
  CHECK(is_test_file("a/b/ParserTests.java"));
  CHECK(is_test_file("a/b/ParserTestCase.java"));
  CHECK_FALSE(is_test_file("src/main/java/com/example/App.java"));
  CHECK_FALSE(is_test_file("src/main/java/com/example/Contest.java"));
  CHECK_FALSE(is_test_file("src/latest/Parser.java"));
}

TEST_CASE("index_repo walks a fixture repository") {
  RepoIndex index = index_repo(kFixtures + "/repos/replaced_class");
  CHECK(index.files_indexed == 4);
  CHECK(index.files_skipped == 0);
  CHECK(index.functions.size() == 5);
  CHECK(index.non_test_count == 4);

  const auto& create = get(index, "com.example.SerializerFactory#create()");
  CHECK(create.file_path ==
        "src/main/java/com/example/SerializerFactory.java");
  CHECK(create.span.start_line == 4);
  CHECK(create.span.end_line == 6);
  CHECK_FALSE(create.is_test);
  REQUIRE(create.invocations.size() == 1);
  CHECK(create.invocations[0].callee_name == "XStream");
  CHECK(create.invocations[0].kind == CallKind::ConstructorCall);

  const auto& render = get(index, "com.example.XmlRenderer#render(Object)");
  CHECK(render.simple_name == "render");
  CHECK(render.enclosing_class == "com.example.XmlRenderer");

  const auto& test_fn =
      get(index, "com.example.XmlRendererTest#checksRender()");
  CHECK(test_fn.is_test);

  CHECK(index.find_simple("render").size() == 1);
  CHECK(index.find_qualified("com.example.Missing#nope()") == nullptr);
}

TEST_CASE("index_source parses members, constructors and nesting") {
  std::string source = R"java(package com.demo;

public class Outer {
  private int count = 0;

  public Outer(int seed) {
    count = seed;
  }

  static {
    System.loadLibrary("demo");
  }

  public <T> List<T> wrap(Map<String, T> items, final int limit) {
    return null;
  }

  static class Inner {
    void ping() {
      pong();
    }
  }
}
)java";
  RepoIndex index;
  index_source("com/demo/Outer.java", source, index);
  finalize_index(index);

  REQUIRE(index.functions.size() == 4);

  const auto& ctor = get(index, "com.demo.Outer#Outer(int)");
  CHECK(ctor.is_constructor);
  CHECK(ctor.span.start_line == 6);
  CHECK(ctor.span.end_line == 8);
  CHECK(ctor.referenced_fields == std::vector<std::string>{"count"});

  const auto& init = get(index, "com.demo.Outer#<static-init>");
  CHECK(init.is_static_init);
  CHECK(init.span.start_line == 10);
  CHECK(init.span.end_line == 12);
  REQUIRE(init.invocations.size() == 1);
  CHECK(init.invocations[0].callee_name == "loadLibrary");
  CHECK(init.invocations[0].receiver == "System");
  CHECK(init.invocations[0].kind == CallKind::StaticCall);

  // Generics, final and parameter names are stripped from signatures.
  const auto& wrap = get(index, "com.demo.Outer#wrap(Map,int)");
  CHECK(wrap.simple_name == "wrap");

  const auto& ping = get(index, "com.demo.Outer.Inner#ping()");
  CHECK(ping.enclosing_class == "com.demo.Outer.Inner");
  REQUIRE(ping.invocations.size() == 1);
  CHECK(ping.invocations[0].callee_name == "pong");
  CHECK(ping.referenced_fields.empty());

  REQUIRE(index.fields.size() == 1);
  CHECK(index.fields[0].name == "count");
  CHECK(index.fields[0].owner_class == "com.demo.Outer");
  CHECK_FALSE(index.fields[0].declared_in_static_initializer);
}

TEST_CASE("index_source ignores comments, strings and abstract members") {
  std::string source = R"java(package com.demo;

// class NotReal { void fake() {} }
public interface Api {
  void start();
  /* String ghost = "x"; */
  default String name() {
    return "api(call)";
  }
}
)java";
  RepoIndex index;
  index_source("com/demo/Api.java", source, index);
  finalize_index(index);
  REQUIRE(index.functions.size() == 1);
  CHECK(index.functions[0].qualified_name == "com.demo.Api#name()");
  CHECK(index.functions[0].invocations.empty());
  CHECK(index.fields.empty());
}

TEST_CASE("config fixture exposes fields and the synthetic initializer") {
  RepoIndex index = index_repo(kFixtures + "/repos/config_change");

  const auto& init = get(index, "com.example.Config#<static-init>");
  CHECK(init.is_static_init);
  CHECK(init.span.start_line == 6);
  CHECK(init.span.end_line == 8);

  REQUIRE(index.fields.size() == 1);
  const FieldRecord& field = index.fields[0];
  CHECK(field.name == "bufferSize");
  CHECK(field.owner_class == "com.example.Config");
  CHECK(field.span.start_line == 4);
  CHECK(field.span.end_line == 4);
  CHECK(field.declared_in_static_initializer);

  auto refs = find_field_references(field, index);
  std::vector<std::string> names;
  for (const auto* fn : refs) names.push_back(fn->qualified_name);
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{
                     "com.example.Config#<static-init>",
                     "com.example.Server#allocate()"});
}

TEST_CASE("find_field_references requires owner qualification outside the class") {
  std::string source = R"java(package com.demo;

public class Holder {
  static int limit = 5;

  int local() {
    return limit;
  }
}

class Other {
  int qualified() {
    return Holder.limit;
  }

  int unrelated(int limit) {
    return limit;
  }
}
)java";
  RepoIndex index;
  index_source("com/demo/Holder.java", source, index);
  finalize_index(index);
  REQUIRE(index.fields.size() == 1);

  auto refs = find_field_references(index.fields[0], index);
  std::vector<std::string> names;
  for (const auto* fn : refs) names.push_back(fn->qualified_name);
  std::sort(names.begin(), names.end());
  // Bare "limit" in Other#unrelated does not count; the bare use inside
  // Holder and the qualified use in Other do.
  CHECK(names == std::vector<std::string>{"com.demo.Holder#local()",
                                          "com.demo.Other#qualified()"});
}

TEST_CASE("normalize_args_in_scope uses statements before the call") {
  std::string body = R"java(void run() {
    String alias = source;
    sink(alias);
    String late = other;
  })java";
  InvocationSite site;
  site.callee_name = "sink";
  site.args = {"alias"};
  site.kind = CallKind::MethodCall;
  site.origin_line = "    sink(alias);";
  CHECK(normalize_args_in_scope(site, body) ==
        std::vector<std::string>{"source"});

  // A site whose line is not found falls back to the whole body.
  site.origin_line = "missing";
  CHECK(normalize_args_in_scope(site, body) ==
        std::vector<std::string>{"source"});
}

TEST_CASE("index_repo error handling") {
  CHECK_THROWS_AS(index_repo("/nonexistent/repo"), IoError);

  auto empty_dir = std::filesystem::temp_directory_path() / "vfloc-empty-repo";
  std::filesystem::create_directories(empty_dir);
  CHECK_THROWS_AS(index_repo(empty_dir.string()), EmptyResultError);
  std::filesystem::remove_all(empty_dir);
}
