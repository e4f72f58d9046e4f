#include "vfloc/diff.hpp"

#include <cctype>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "vfloc/errors.hpp"

namespace vfloc {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_keyword(std::string_view word) {
  static const char* kKeywords[] = {
      "if",     "for",   "while",  "switch", "catch",  "return", "throw",
      "new",    "do",    "else",   "try",    "assert", "case",   "synchronized",
      "super",  "this",  "break",  "continue"};
  for (const char* kw : kKeywords)
    if (word == kw) return true;
  return false;
}

// Blanks out string and char literal contents so structural scans do
// not trip over quotes and parens inside them.
std::string mask_literals(std::string_view line) {
  std::string out(line);
  char quote = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = out[i];
    if (quote) {
      if (c == '\\' && i + 1 < out.size()) {
        out[i] = ' ';
        out[++i] = ' ';
        continue;
      }
      if (c == quote) {
        quote = 0;
      } else {
        out[i] = ' ';
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

bool parse_range(std::string_view token, HunkRange& range) {
  // token like "-12,7" or "+3" (count defaults to 1)
  if (token.empty()) return false;
  token.remove_prefix(1);
  auto comma = token.find(',');
  try {
    if (comma == std::string_view::npos) {
      range.start = std::stoi(std::string(token));
      range.count = 1;
    } else {
      range.start = std::stoi(std::string(token.substr(0, comma)));
      range.count = std::stoi(std::string(token.substr(comma + 1)));
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::string strip_prefix(std::string path) {
  if (path.starts_with("a/") || path.starts_with("b/")) return path.substr(2);
  return path;
}

// Identifier ending at position `end` (exclusive), scanning backwards.
std::string ident_before(const std::string& line, std::size_t end) {
  std::size_t i = end;
  while (i > 0 && is_ident_char(line[i - 1])) --i;
  if (i == end || !is_ident_start(line[i])) return "";
  return line.substr(i, end - i);
}

std::size_t skip_ws_back(const std::string& line, std::size_t pos) {
  while (pos > 0 && std::isspace(static_cast<unsigned char>(line[pos - 1]))) --pos;
  return pos;
}

std::vector<std::string> split_top_level_args(std::string_view inner) {
  std::vector<std::string> args;
  int depth = 0;
  std::string cur;
  for (char c : inner) {
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      args.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur += c;
  }
  std::string last = trim(cur);
  if (!last.empty()) args.push_back(last);
  return args;
}

bool is_simple_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

}  // namespace

std::vector<std::string> DiffHunk::lines_with_role(LineRole role) const {
  std::vector<std::string> out;
  for (const auto& line : lines)
    if (line.role == role) out.push_back(line.text);
  return out;
}

std::vector<DiffHunk> parse_diff(const std::string& text) {
  std::vector<DiffHunk> hunks;
  std::istringstream in(text);
  std::string line;
  std::string current_file;
  std::string old_file;
  DiffHunk* open_hunk = nullptr;
  int line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.starts_with("--- ")) {
      old_file = strip_prefix(trim(line.substr(4)));
      open_hunk = nullptr;
      continue;
    }
    if (line.starts_with("+++ ")) {
      std::string path = strip_prefix(trim(line.substr(4)));
      current_file = (path == "/dev/null") ? old_file : path;
      open_hunk = nullptr;
      continue;
    }
    if (line.starts_with("@@")) {
      auto close = line.find("@@", 2);
      if (close == std::string::npos)
        throw DiffParseError("malformed hunk header at line " +
                             std::to_string(line_no));
      std::istringstream header(line.substr(2, close - 2));
      std::string old_tok, new_tok;
      header >> old_tok >> new_tok;
      DiffHunk hunk;
      if (!parse_range(old_tok, hunk.old_range) ||
          !parse_range(new_tok, hunk.new_range))
        throw DiffParseError("malformed hunk header at line " +
                             std::to_string(line_no));
      if (current_file.empty())
        throw DiffParseError("hunk without file header at line " +
                             std::to_string(line_no));
      hunk.file_path = current_file;
      hunks.push_back(std::move(hunk));
      open_hunk = &hunks.back();
      continue;
    }
    if (line.starts_with("Binary files")) {
      std::cerr << "warning: skipping binary section: " << line << "\n";
      open_hunk = nullptr;
      continue;
    }
    if (open_hunk) {
      if (line.starts_with("+")) {
        open_hunk->lines.push_back({LineRole::Added, line.substr(1)});
      } else if (line.starts_with("-")) {
        open_hunk->lines.push_back({LineRole::Deleted, line.substr(1)});
      } else if (line.starts_with(" ") || line.empty()) {
        open_hunk->lines.push_back(
            {LineRole::Context, line.empty() ? "" : line.substr(1)});
      } else if (line.starts_with("\\")) {
        // "\ No newline at end of file"
      } else {
        open_hunk = nullptr;  // next file section
      }
    }
  }
  return hunks;
}

std::vector<InvocationSite> extract_invocations(std::string_view raw_line) {
  std::vector<InvocationSite> sites;
  std::string line = mask_literals(raw_line);

  for (std::size_t i = 0; i < line.size(); ++i) {
    if (!is_ident_start(line[i])) continue;
    std::size_t start = i;
    while (i < line.size() && is_ident_char(line[i])) ++i;
    std::string name = line.substr(start, i - start);
    std::size_t after = i;
    while (after < line.size() &&
           std::isspace(static_cast<unsigned char>(line[after])))
      ++after;
    if (after >= line.size() || line[after] != '(') continue;
    if (is_keyword(name)) continue;

    // Find the matching close paren; give up on unbalanced fragments.
    int depth = 0;
    std::size_t close = std::string::npos;
    for (std::size_t j = after; j < line.size(); ++j) {
      if (line[j] == '(') ++depth;
      if (line[j] == ')' && --depth == 0) {
        close = j;
        break;
      }
    }
    if (close == std::string::npos) continue;

    InvocationSite site;
    site.callee_name = name;
    site.origin_line = std::string(raw_line);

    std::size_t before = skip_ws_back(line, start);
    if (before > 0 && line[before - 1] == '@') continue;  // annotation
    bool is_call = true;
    if (before > 0 && line[before - 1] == '.') {
      std::string recv = ident_before(line, before - 1);
      site.receiver = recv;
      site.kind = (!recv.empty() &&
                   std::isupper(static_cast<unsigned char>(recv[0])))
                      ? CallKind::StaticCall
                      : CallKind::MethodCall;
    } else {
      std::string prev = ident_before(line, before);
      if (prev == "new") {
        site.kind = CallKind::ConstructorCall;
      } else if (!prev.empty() && !is_keyword(prev)) {
        // "Type name(args)" is a declaration, not a call.
        is_call = false;
      } else {
        site.kind = CallKind::MethodCall;
      }
    }

    std::string inner = line.substr(after + 1, close - after - 1);
    if (is_call) {
      // Args come from the unmasked text so literals stay readable.
      std::string raw_inner(raw_line.substr(after + 1, close - after - 1));
      site.args = split_top_level_args(raw_inner);
      sites.push_back(std::move(site));
    }
    // Nested calls inside the argument list are found by the outer
    // scan continuing from the callee name; nothing extra needed.
    i = after;  // re-scan from '(' so nested callees are visited
  }
  return sites;
}

std::vector<std::string> normalize_args(
    const std::vector<std::string>& args,
    const std::vector<std::string>& preceding_statements) {
  std::unordered_map<std::string, std::string> root;
  auto resolve = [&](const std::string& name) {
    auto it = root.find(name);
    return it == root.end() ? name : it->second;
  };

  for (const auto& raw : preceding_statements) {
    std::string stmt = mask_literals(raw);
    // Find a plain '=' that is not part of ==, <=, >=, != or compound ops.
    std::size_t eq = std::string::npos;
    for (std::size_t i = 0; i < stmt.size(); ++i) {
      if (stmt[i] != '=') continue;
      if (i + 1 < stmt.size() && stmt[i + 1] == '=') {
        ++i;
        continue;
      }
      if (i > 0 && std::string_view("=!<>+-*/%&|^").find(stmt[i - 1]) !=
                       std::string_view::npos)
        continue;
      eq = i;
      break;
    }
    if (eq == std::string::npos) continue;
    std::string lhs = ident_before(stmt, skip_ws_back(stmt, eq));
    if (lhs.empty() || is_keyword(lhs)) continue;
    std::string rhs = trim(stmt.substr(eq + 1));
    if (!rhs.empty() && rhs.back() == ';') rhs = trim(rhs.substr(0, rhs.size() - 1));
    if (is_simple_identifier(rhs) && !is_keyword(rhs)) {
      root[lhs] = resolve(rhs);
    } else {
      root.erase(lhs);  // chain cut at a non-trivial reassignment
    }
  }

  std::vector<std::string> out;
  out.reserve(args.size());
  for (const auto& arg : args) {
    std::string a = trim(arg);
    if (is_simple_identifier(a)) {
      out.push_back(resolve(a));
    } else {
      out.push_back(a);
    }
  }
  return out;
}

std::string serialize_hunks(const std::vector<DiffHunk>& hunks) {
  std::ostringstream out;
  std::string last_file;
  for (const auto& hunk : hunks) {
    if (hunk.file_path != last_file) {
      out << "--- a/" << hunk.file_path << "\n+++ b/" << hunk.file_path << "\n";
      last_file = hunk.file_path;
    }
    out << "@@ -" << hunk.old_range.start << "," << hunk.old_range.count
        << " +" << hunk.new_range.start << "," << hunk.new_range.count
        << " @@\n";
    for (const auto& line : hunk.lines) {
      char marker = line.role == LineRole::Added     ? '+'
                    : line.role == LineRole::Deleted ? '-'
                                                     : ' ';
      out << marker << line.text << "\n";
    }
  }
  return out.str();
}

}  // namespace vfloc
