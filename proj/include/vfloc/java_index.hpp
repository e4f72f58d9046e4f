#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vfloc/diff.hpp"

namespace vfloc {

struct Span {
  int start_line = 0;  // 1-based, inclusive
  int end_line = 0;

  bool contains(int line) const { return line >= start_line && line <= end_line; }
};

/// An indexed Java method, constructor, or synthetic static-initializer
/// function. Constructors carry the class name as simple_name; static
/// initializers are named "Owner.<static-init>".
struct FunctionRecord {
  std::string qualified_name;  // package.Class#method(paramTypes)
  std::string simple_name;
  std::string file_path;
  Span span;
  std::string body;
  bool is_constructor = false;
  bool is_static_init = false;
  bool is_test = false;
  std::vector<InvocationSite> invocations;
  std::vector<std::string> referenced_fields;
  std::string enclosing_class;  // package-qualified
};

struct FieldRecord {
  std::string owner_class;  // package-qualified
  std::string name;
  bool declared_in_static_initializer = false;
  std::string file_path;
  Span span;
};

struct RepoIndex {
  std::vector<FunctionRecord> functions;
  std::vector<FieldRecord> fields;
  std::map<std::string, std::vector<std::size_t>> by_simple_name;
  std::map<std::string, std::vector<std::size_t>> by_qualified_name;
  std::size_t files_indexed = 0;
  std::size_t files_skipped = 0;
  std::size_t non_test_count = 0;

  const FunctionRecord* find_qualified(const std::string& qname) const;
  std::vector<const FunctionRecord*> find_simple(const std::string& name) const;
};

/// True for paths under a /test/ or /tests/ segment or whose file name
/// ends with Test.java, Tests.java, or TestCase.java.
bool is_test_file(const std::string& path);

/// Walks repo_path for *.java files and builds the index. Unparseable
/// files are skipped with a warning; zero parseable files is an error.
RepoIndex index_repo(const std::string& repo_path);

/// Parses one Java source text; exposed for fixtures and tests.
/// Call finalize_index once all sources are added.
void index_source(const std::string& file_path, const std::string& source,
                  RepoIndex& index);

/// Sorts records and rebuilds the lookup maps and counters.
void finalize_index(RepoIndex& index);

/// Arguments of a call inside `scope_body`, rewritten to the roots of
/// their intra-procedural copy chains (statements before the call only).
std::vector<std::string> normalize_args_in_scope(const InvocationSite& site,
                                                 const std::string& scope_body);

/// All non-test functions whose body references the field, either as a
/// bare name inside the owning class or owner-qualified anywhere.
std::vector<const FunctionRecord*> find_field_references(
    const FieldRecord& field, const RepoIndex& index);

}  // namespace vfloc
