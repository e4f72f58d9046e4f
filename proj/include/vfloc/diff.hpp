#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vfloc {

enum class LineRole { Added, Deleted, Context };

struct DiffLine {
  LineRole role;
  std::string text;
};

struct HunkRange {
  int start = 0;
  int count = 0;
};

struct DiffHunk {
  std::string file_path;  // repository-relative, a/ b/ prefixes stripped
  HunkRange old_range;
  HunkRange new_range;
  std::vector<DiffLine> lines;

  std::vector<std::string> lines_with_role(LineRole role) const;
};

enum class CallKind { MethodCall, ConstructorCall, StaticCall };

struct InvocationSite {
  std::string callee_name;
  std::string receiver;  // empty for bare calls and constructors
  std::vector<std::string> args;
  CallKind kind;
  std::string origin_line;
};

/// Parses unified-diff text (possibly multi-file) into hunks. Headers
/// without hunks yield no output; a malformed @@ header throws with
/// the offending line number.
std::vector<DiffHunk> parse_diff(const std::string& text);

/// Best-effort call extraction from a single (possibly partial) source
/// line. Nested calls are each reported. Never throws.
std::vector<InvocationSite> extract_invocations(std::string_view line);

/// Replaces local-variable arguments with the root of their copy chain
/// as witnessed by the statements preceding the call, in order.
/// Literals, fields, and unresolvable names stay verbatim.
std::vector<std::string> normalize_args(
    const std::vector<std::string>& args,
    const std::vector<std::string>& preceding_statements);

std::string serialize_hunks(const std::vector<DiffHunk>& hunks);

}  // namespace vfloc
