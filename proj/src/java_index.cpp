#include "vfloc/java_index.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "vfloc/errors.hpp"

namespace fs = std::filesystem;

namespace vfloc {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Replaces comments and literal contents with spaces, keeping offsets
// and line breaks stable.
std::string mask_source(const std::string& src) {
  std::string out = src;
  enum { Code, Line, Block, Str, Chr } state = Code;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = out[i];
    char next = i + 1 < out.size() ? out[i + 1] : '\0';
    switch (state) {
      case Code:
        if (c == '/' && next == '/') {
          state = Line;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '/' && next == '*') {
          state = Block;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '"') {
          state = Str;
        } else if (c == '\'') {
          state = Chr;
        }
        break;
      case Line:
        if (c == '\n')
          state = Code;
        else
          out[i] = ' ';
        break;
      case Block:
        if (c == '*' && next == '/') {
          out[i] = out[i + 1] = ' ';
          ++i;
          state = Code;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
      case Str:
        if (c == '\\') {
          out[i] = ' ';
          if (i + 1 < out.size() && out[i + 1] != '\n') out[++i] = ' ';
        } else if (c == '"') {
          state = Code;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
      case Chr:
        if (c == '\\') {
          out[i] = ' ';
          if (i + 1 < out.size() && out[i + 1] != '\n') out[++i] = ' ';
        } else if (c == '\'') {
          state = Code;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
    }
  }
  return out;
}

struct Token {
  std::string text;
  std::size_t pos;
  bool ident;
};

std::vector<Token> tokenize(const std::string& mask) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < mask.size()) {
    char c = mask[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < mask.size() && is_ident_char(mask[j])) ++j;
      tokens.push_back({mask.substr(i, j - i), i, true});
      i = j;
    } else {
      tokens.push_back({std::string(1, c), i, false});
      ++i;
    }
  }
  return tokens;
}

class LineMap {
 public:
  explicit LineMap(const std::string& src) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < src.size(); ++i)
      if (src[i] == '\n') starts_.push_back(i + 1);
  }
  int line_of(std::size_t pos) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), pos);
    return static_cast<int>(it - starts_.begin());
  }

 private:
  std::vector<std::size_t> starts_;
};

const std::vector<std::string> kModifiers = {
    "public", "private", "protected", "static",   "final",        "abstract",
    "native", "strictfp", "transient", "volatile", "synchronized", "default"};

bool is_modifier(const std::string& word) {
  return std::find(kModifiers.begin(), kModifiers.end(), word) !=
         kModifiers.end();
}

std::string strip_generics(const std::string& s) {
  std::string out;
  int depth = 0;
  for (char c : s) {
    if (c == '<') {
      ++depth;
      continue;
    }
    if (c == '>') {
      if (depth > 0) --depth;
      continue;
    }
    if (depth == 0) out += c;
  }
  return out;
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool ws = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      ws = true;
      continue;
    }
    if (ws && !out.empty()) out += ' ';
    ws = false;
    out += c;
  }
  return out;
}

// "final @NotNull Map<String, Integer> counts" -> type "Map"
std::string param_type(const std::string& raw) {
  std::string flat = collapse_ws(strip_generics(raw));
  std::istringstream in(flat);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) {
    if (w == "final" || (!w.empty() && w[0] == '@')) continue;
    words.push_back(w);
  }
  if (words.size() <= 1) return words.empty() ? "" : words[0];
  words.pop_back();  // drop the parameter name
  std::string type;
  for (const auto& part : words) type += part;
  return type;
}

std::vector<std::string> split_params(const std::string& inner) {
  std::vector<std::string> parts;
  int angle = 0, paren = 0;
  std::string cur;
  for (char c : inner) {
    if (c == '<') ++angle;
    if (c == '>') --angle;
    if (c == '(') ++paren;
    if (c == ')') --paren;
    if (c == ',' && angle == 0 && paren == 0) {
      parts.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

struct ClassCtx {
  std::string simple_name;
  std::string qualified;  // package.Outer.Inner
  int body_depth;
  std::vector<std::size_t> field_indices;
  std::string static_body;
  Span static_span{0, 0};
};

}  // namespace

bool is_test_file(const std::string& path) {
  std::string p = path;
  std::replace(p.begin(), p.end(), '\\', '/');
  if (p.find("/test/") != std::string::npos ||
      p.find("/tests/") != std::string::npos || p.starts_with("test/") ||
      p.starts_with("tests/"))
    return true;
  std::string name = fs::path(p).filename().string();
  return name.ends_with("Test.java") || name.ends_with("Tests.java") ||
         name.ends_with("TestCase.java");
}

const FunctionRecord* RepoIndex::find_qualified(const std::string& qname) const {
  auto it = by_qualified_name.find(qname);
  if (it == by_qualified_name.end() || it->second.empty()) return nullptr;
  return &functions[it->second.front()];
}

std::vector<const FunctionRecord*> RepoIndex::find_simple(
    const std::string& name) const {
  std::vector<const FunctionRecord*> out;
  auto it = by_simple_name.find(name);
  if (it == by_simple_name.end()) return out;
  for (auto idx : it->second) out.push_back(&functions[idx]);
  return out;
}

void index_source(const std::string& file_path, const std::string& source,
                  RepoIndex& index) {
  std::string mask = mask_source(source);
  LineMap lines(source);
  std::vector<Token> tokens = tokenize(mask);
  bool test = is_test_file(file_path);

  std::string package;
  {
    static const std::regex kPackage(R"(^\s*package\s+([\w.]+)\s*;)",
                                     std::regex::multiline);
    std::smatch m;
    if (std::regex_search(mask, m, kPackage)) package = m[1];
  }

  std::vector<ClassCtx> class_stack;
  int depth = 0;
  std::size_t n = tokens.size();

  auto match_forward = [&](std::size_t from, const std::string& open,
                           const std::string& close) -> std::size_t {
    int d = 0;
    for (std::size_t j = from; j < n; ++j) {
      if (tokens[j].text == open) ++d;
      if (tokens[j].text == close && --d == 0) return j;
    }
    return n;
  };

  auto extract_body_meta = [&](FunctionRecord& fn) {
    std::istringstream in(fn.body);
    std::string line;
    while (std::getline(in, line)) {
      for (auto& site : extract_invocations(line))
        fn.invocations.push_back(std::move(site));
    }
  };

  auto pop_class = [&](ClassCtx& ctx) {
    if (!ctx.static_body.empty()) {
      FunctionRecord fn;
      fn.simple_name = "<static-init>";
      fn.qualified_name = ctx.qualified + "#<static-init>";
      fn.file_path = file_path;
      fn.span = ctx.static_span;
      fn.body = ctx.static_body;
      fn.is_static_init = true;
      fn.is_test = test;
      fn.enclosing_class = ctx.qualified;
      extract_body_meta(fn);
      index.functions.push_back(std::move(fn));
    }
    // Fields assigned inside the static block get flagged.
    for (auto fi : ctx.field_indices) {
      FieldRecord& field = index.fields[fi];
      std::size_t at = ctx.static_body.find(field.name);
      while (at != std::string::npos) {
        bool left_ok = at == 0 || !is_ident_char(ctx.static_body[at - 1]);
        std::size_t end = at + field.name.size();
        bool right_ok =
            end >= ctx.static_body.size() || !is_ident_char(ctx.static_body[end]);
        if (left_ok && right_ok) {
          field.declared_in_static_initializer = true;
          break;
        }
        at = ctx.static_body.find(field.name, at + 1);
      }
    }
  };

  std::size_t member_fn_base = index.functions.size();

  std::size_t i = 0;
  while (i < n) {
    const Token& tok = tokens[i];

    if (tok.text == "{") {
      ++depth;
      ++i;
      continue;
    }
    if (tok.text == "}") {
      --depth;
      while (!class_stack.empty() && depth < class_stack.back().body_depth) {
        pop_class(class_stack.back());
        class_stack.pop_back();
      }
      ++i;
      continue;
    }

    bool at_member_level =
        !class_stack.empty() && depth == class_stack.back().body_depth;

    // Type declarations (top level or nested).
    if (tok.ident &&
        (tok.text == "class" || tok.text == "interface" || tok.text == "enum" ||
         tok.text == "record") &&
        i + 1 < n && tokens[i + 1].ident) {
      std::string name = tokens[i + 1].text;
      std::size_t j = i + 2;
      while (j < n && tokens[j].text != "{" && tokens[j].text != ";") ++j;
      if (j < n && tokens[j].text == "{") {
        ClassCtx ctx;
        ctx.simple_name = name;
        std::string outer =
            class_stack.empty() ? package : class_stack.back().qualified;
        ctx.qualified = outer.empty() ? name : outer + "." + name;
        ctx.body_depth = depth + 1;
        class_stack.push_back(std::move(ctx));
        depth += 1;
        i = j + 1;
        continue;
      }
      i = j + 1;
      continue;
    }

    if (!at_member_level) {
      ++i;
      continue;
    }

    ClassCtx& cls = class_stack.back();

    // static { ... } initializer block
    if (tok.text == "static" && i + 1 < n && tokens[i + 1].text == "{") {
      std::size_t close = match_forward(i + 1, "{", "}");
      if (close >= n) break;
      std::size_t body_end = tokens[close].pos + 1;
      std::string body = source.substr(tok.pos, body_end - tok.pos);
      int start_line = lines.line_of(tok.pos);
      int end_line = lines.line_of(tokens[close].pos);
      if (cls.static_body.empty()) {
        cls.static_span = {start_line, end_line};
      } else {
        cls.static_body += "\n";
        cls.static_span.end_line = end_line;
      }
      cls.static_body += body;
      i = close + 1;
      depth = cls.body_depth;
      continue;
    }

    // Generic member: scan ahead to decide method vs field.
    std::size_t start = i;
    // Skip annotations with optional argument lists.
    while (i < n && tokens[i].text == "@") {
      i += 2;
      if (i < n && tokens[i].text == "(") i = match_forward(i, "(", ")") + 1;
    }
    std::size_t scan = i;
    std::size_t paren = n, eq = n, semi = n;
    int angle = 0;
    while (scan < n) {
      const std::string& t = tokens[scan].text;
      if (t == "<") ++angle;
      else if (t == ">") { if (angle > 0) --angle; }
      else if (angle == 0) {
        if (t == "(") { paren = scan; break; }
        if (t == "=") { eq = scan; break; }
        if (t == ";") { semi = scan; break; }
        if (t == "{" || t == "}") break;
      }
      ++scan;
    }

    if (paren < n && (eq == n || paren < eq)) {
      // Method or constructor.
      std::size_t name_idx = paren - 1;
      if (name_idx < start || !tokens[name_idx].ident) {
        i = paren + 1;
        continue;
      }
      std::string name = tokens[name_idx].text;
      std::size_t close = match_forward(paren, "(", ")");
      if (close >= n) break;
      // Skip "throws A, B" etc. up to the body or terminating ';'.
      std::size_t after = close + 1;
      while (after < n && tokens[after].text != "{" && tokens[after].text != ";")
        ++after;
      if (after >= n) break;
      if (tokens[after].text == ";") {
        i = after + 1;  // abstract or interface method, no body
        continue;
      }
      std::size_t body_close = match_forward(after, "{", "}");
      if (body_close >= n) break;

      FunctionRecord fn;
      fn.simple_name = name;
      fn.is_constructor = (name == cls.simple_name);
      fn.file_path = file_path;
      fn.is_test = test;
      fn.enclosing_class = cls.qualified;
      fn.span = {lines.line_of(tokens[start].pos),
                 lines.line_of(tokens[body_close].pos)};
      fn.body = source.substr(tokens[start].pos,
                              tokens[body_close].pos + 1 - tokens[start].pos);

      std::string params_raw =
          mask.substr(tokens[paren].pos + 1,
                      tokens[close].pos - tokens[paren].pos - 1);
      std::string sig;
      for (const auto& p : split_params(params_raw)) {
        std::string type = param_type(p);
        if (type.empty()) continue;
        if (!sig.empty()) sig += ",";
        sig += type;
      }
      fn.qualified_name = cls.qualified + "#" + name + "(" + sig + ")";
      extract_body_meta(fn);
      index.functions.push_back(std::move(fn));
      i = body_close + 1;
      continue;
    }

    if (eq < n || semi < n) {
      // Field declaration(s): Type name [= init][, name2 = init2];
      std::size_t decl_end = semi;
      if (eq < n) {
        // Initializer may contain braces or lambdas; find the ';' that
        // closes the declaration at member depth.
        int d = 0;
        std::size_t j = eq;
        while (j < n) {
          const std::string& t = tokens[j].text;
          if (t == "(" || t == "{" || t == "[") ++d;
          if (t == ")" || t == "}" || t == "]") --d;
          if (t == ";" && d == 0) break;
          ++j;
        }
        decl_end = j;
      }
      if (decl_end >= n) break;

      // Names: identifiers immediately followed by '=', ',' or ';'
      // and preceded by an identifier or ']' (their type).
      for (std::size_t j = i + 1; j < decl_end; ++j) {
        if (!tokens[j].ident || is_modifier(tokens[j].text)) continue;
        const std::string& next = tokens[j + 1].text;
        if (next != "=" && next != "," && next != ";") continue;
        const Token& prev = tokens[j - 1];
        if (!(prev.ident || prev.text == "]" || prev.text == ">")) continue;
        if (is_modifier(prev.text)) continue;
        FieldRecord field;
        field.owner_class = cls.qualified;
        field.name = tokens[j].text;
        field.file_path = file_path;
        field.span = {lines.line_of(tokens[i].pos),
                      lines.line_of(tokens[decl_end].pos)};
        cls.field_indices.push_back(index.fields.size());
        index.fields.push_back(std::move(field));
        // Skip past this declarator's initializer.
        if (next == "=") {
          int d = 0;
          ++j;
          while (j < decl_end) {
            const std::string& t = tokens[j].text;
            if (t == "(" || t == "{" || t == "[") ++d;
            if (t == ")" || t == "}" || t == "]") --d;
            if (t == "," && d == 0) break;
            ++j;
          }
        }
      }
      i = decl_end + 1;
      continue;
    }

    ++i;
  }

  while (!class_stack.empty()) {
    pop_class(class_stack.back());
    class_stack.pop_back();
  }

  // Bare-name field references within the same file's classes.
  for (std::size_t fi = member_fn_base; fi < index.functions.size(); ++fi) {
    FunctionRecord& fn = index.functions[fi];
    for (const auto& field : index.fields) {
      if (field.file_path != file_path) continue;
      if (field.owner_class != fn.enclosing_class) continue;
      std::size_t at = fn.body.find(field.name);
      while (at != std::string::npos) {
        bool left_ok = at == 0 || (!is_ident_char(fn.body[at - 1]) &&
                                   fn.body[at - 1] != '.');
        std::size_t end = at + field.name.size();
        bool right_ok = end >= fn.body.size() || !is_ident_char(fn.body[end]);
        if (left_ok && right_ok) {
          fn.referenced_fields.push_back(field.name);
          break;
        }
        at = fn.body.find(field.name, at + 1);
      }
    }
  }
}

void finalize_index(RepoIndex& index) {
  std::stable_sort(index.functions.begin(), index.functions.end(),
                   [](const FunctionRecord& a, const FunctionRecord& b) {
                     if (a.file_path != b.file_path)
                       return a.file_path < b.file_path;
                     return a.span.start_line < b.span.start_line;
                   });
  std::stable_sort(index.fields.begin(), index.fields.end(),
                   [](const FieldRecord& a, const FieldRecord& b) {
                     if (a.file_path != b.file_path)
                       return a.file_path < b.file_path;
                     return a.span.start_line < b.span.start_line;
                   });
  index.by_simple_name.clear();
  index.by_qualified_name.clear();
  index.non_test_count = 0;
  for (std::size_t i = 0; i < index.functions.size(); ++i) {
    const auto& fn = index.functions[i];
    index.by_simple_name[fn.simple_name].push_back(i);
    index.by_qualified_name[fn.qualified_name].push_back(i);
    if (!fn.is_test) ++index.non_test_count;
  }
}

RepoIndex index_repo(const std::string& repo_path) {
  if (!fs::exists(repo_path) || !fs::is_directory(repo_path))
    throw IoError("repository path not found: " + repo_path);

  std::vector<fs::path> sources;
  for (const auto& entry : fs::recursive_directory_iterator(repo_path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".java")
      sources.push_back(entry.path());
  }
  std::sort(sources.begin(), sources.end());

  RepoIndex index;
  for (const auto& path : sources) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string rel = fs::relative(path, repo_path).generic_string();
    try {
      index_source(rel, buf.str(), index);
      ++index.files_indexed;
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping unparseable file " << rel << ": "
                << e.what() << "\n";
      ++index.files_skipped;
    }
  }
  if (index.files_indexed == 0)
    throw EmptyResultError("no parseable Java files under " + repo_path);
  finalize_index(index);
  return index;
}

std::vector<std::string> normalize_args_in_scope(const InvocationSite& site,
                                                 const std::string& scope_body) {
  std::vector<std::string> preceding;
  std::size_t call_at = scope_body.find(site.origin_line);
  std::string before = call_at == std::string::npos
                           ? scope_body
                           : scope_body.substr(0, call_at);
  std::string stmt;
  for (char c : before) {
    stmt += c;
    if (c == ';' || c == '{' || c == '}') {
      preceding.push_back(stmt);
      stmt.clear();
    }
  }
  if (!stmt.empty()) preceding.push_back(stmt);
  return normalize_args(site.args, preceding);
}

std::vector<const FunctionRecord*> find_field_references(
    const FieldRecord& field, const RepoIndex& index) {
  std::vector<const FunctionRecord*> out;
  std::string owner_simple = field.owner_class;
  if (auto dot = owner_simple.rfind('.'); dot != std::string::npos)
    owner_simple = owner_simple.substr(dot + 1);
  std::string qualified = owner_simple + "." + field.name;

  for (const auto& fn : index.functions) {
    if (fn.is_test) continue;
    bool hit = false;
    // Owner-qualified access matches anywhere.
    std::size_t at = fn.body.find(qualified);
    while (at != std::string::npos && !hit) {
      bool left_ok = at == 0 || (!is_ident_char(fn.body[at - 1]) &&
                                 fn.body[at - 1] != '.');
      std::size_t end = at + qualified.size();
      bool right_ok = end >= fn.body.size() || !is_ident_char(fn.body[end]);
      if (left_ok && right_ok) hit = true;
      at = fn.body.find(qualified, at + 1);
    }
    // Bare access only inside the owning class.
    if (!hit && fn.enclosing_class == field.owner_class) {
      at = fn.body.find(field.name);
      while (at != std::string::npos && !hit) {
        bool left_ok = at == 0 || (!is_ident_char(fn.body[at - 1]) &&
                                   fn.body[at - 1] != '.');
        std::size_t end = at + field.name.size();
        bool right_ok = end >= fn.body.size() || !is_ident_char(fn.body[end]);
        if (left_ok && right_ok) hit = true;
        at = fn.body.find(field.name, at + 1);
      }
    }
    if (hit) out.push_back(&fn);
  }
  return out;
}

}  // namespace vfloc
