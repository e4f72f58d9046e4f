#include "vfloc/tracker.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

namespace {

struct NormalizedCall {
  InvocationSite site;
  std::vector<std::string> args;
};

// Invocations of one role, with args normalized against the statements
// visible earlier in the hunk (context plus same-role lines).
std::vector<NormalizedCall> role_calls(const DiffHunk& hunk, LineRole role) {
  std::vector<NormalizedCall> calls;
  std::vector<std::string> preceding;
  for (const auto& line : hunk.lines) {
    bool visible = line.role == LineRole::Context || line.role == role;
    if (!visible) continue;
    for (auto& site : extract_invocations(line.text)) {
      NormalizedCall call;
      call.args = normalize_args(site.args, preceding);
      call.site = std::move(site);
      calls.push_back(std::move(call));
    }
    preceding.push_back(line.text);
  }
  return calls;
}

bool is_method_like(CallKind kind) {
  return kind == CallKind::MethodCall || kind == CallKind::StaticCall;
}

bool is_class_like(const InvocationSite& site) {
  return site.kind == CallKind::ConstructorCall ||
         site.kind == CallKind::StaticCall;
}

// Entity a class-like call refers to: the constructed class, or the
// receiver type of a static call.
std::string class_entity(const InvocationSite& site) {
  return site.kind == CallKind::ConstructorCall ? site.callee_name
                                                : site.receiver;
}

std::string simple_class_name(const std::string& qualified) {
  auto dot = qualified.rfind('.');
  return dot == std::string::npos ? qualified : qualified.substr(dot + 1);
}

// Definitions of `name` in the repo; arity filter applies when any
// definition matches it (overload resolution is arity-only).
std::vector<const FunctionRecord*> definitions_of(const RepoIndex& index,
                                                  const std::string& name,
                                                  std::size_t arity) {
  std::vector<const FunctionRecord*> all = index.find_simple(name);
  std::erase_if(all, [](const FunctionRecord* f) { return f->is_test; });
  std::vector<const FunctionRecord*> arity_match;
  for (const auto* f : all) {
    auto open = f->qualified_name.find('(');
    std::string params = f->qualified_name.substr(open + 1);
    params.pop_back();
    std::size_t count =
        params.empty() ? 0 : std::count(params.begin(), params.end(), ',') + 1;
    if (count == arity) arity_match.push_back(f);
  }
  return arity_match.empty() ? all : arity_match;
}

// Non-test functions whose body invokes `name` (optionally restricted
// to class-like use of the entity).
std::vector<const FunctionRecord*> usage_sites(
    const RepoIndex& index, const std::string& name, bool class_use) {
  std::vector<const FunctionRecord*> out;
  for (const auto& fn : index.functions) {
    if (fn.is_test) continue;
    for (const auto& site : fn.invocations) {
      bool hit = class_use
                     ? (is_class_like(site) && class_entity(site) == name)
                     : (site.callee_name == name);
      if (hit) {
        out.push_back(&fn);
        break;
      }
    }
  }
  return out;
}

bool class_defined_in_repo(const RepoIndex& index, const std::string& name) {
  for (const auto& fn : index.functions) {
    if (!fn.is_test && simple_class_name(fn.enclosing_class) == name)
      return true;
  }
  return false;
}

}  // namespace

const char* pattern_tag_name(PatternTag tag) {
  switch (tag) {
    case PatternTag::ReplacedMethod: return "ReplacedMethod";
    case PatternTag::ReplacedClass: return "ReplacedClass";
    case PatternTag::AdditionalArguments: return "AdditionalArguments";
    case PatternTag::ConfigChange: return "ConfigChange";
    case PatternTag::ModifiedFallback: return "ModifiedFallback";
    case PatternTag::ScorerTopK: return "ScorerTopK";
  }
  return "?";
}

std::vector<PatternHit> detect_replaced_method(const DiffHunk& hunk,
                                               const RepoIndex& index) {
  std::vector<PatternHit> hits;
  auto deleted = role_calls(hunk, LineRole::Deleted);
  auto added = role_calls(hunk, LineRole::Added);
  if (deleted.empty() || added.empty()) return hits;

  for (const auto& del : deleted) {
    if (!is_method_like(del.site.kind)) continue;
    for (const auto& add : added) {
      if (!is_method_like(add.site.kind)) continue;
      if (del.site.callee_name == add.site.callee_name) continue;
      if (del.args != add.args) continue;

      std::string note = "deleted call " + del.site.callee_name +
                         " replaced by " + add.site.callee_name;
      auto defs = definitions_of(index, del.site.callee_name, del.args.size());
      if (!defs.empty()) {
        for (const auto* f : defs)
          hits.push_back({f, PatternTag::ReplacedMethod, note});
      } else {
        for (const auto* f : usage_sites(index, del.site.callee_name, false))
          hits.push_back(
              {f, PatternTag::ReplacedMethod, note + " (external; usage site)"});
      }
    }
  }
  return hits;
}

std::vector<PatternHit> detect_replaced_class(const DiffHunk& hunk,
                                              const RepoIndex& index) {
  std::vector<PatternHit> hits;
  auto deleted = role_calls(hunk, LineRole::Deleted);
  auto added = role_calls(hunk, LineRole::Added);
  if (deleted.empty() || added.empty()) return hits;

  for (const auto& del : deleted) {
    if (!is_class_like(del.site)) continue;
    std::string del_entity = class_entity(del.site);
    if (del_entity.empty()) continue;
    for (const auto& add : added) {
      if (!is_class_like(add.site)) continue;
      std::string add_entity = class_entity(add.site);
      if (add_entity.empty() || add_entity == del_entity) continue;
      if (del.args != add.args) continue;

      std::string note = "class " + del_entity + " replaced by " + add_entity;
      if (class_defined_in_repo(index, del_entity)) {
        // Constructors and field initialization of the replaced class.
        for (const auto& fn : index.functions) {
          if (fn.is_test) continue;
          if (simple_class_name(fn.enclosing_class) != del_entity) continue;
          if (fn.is_constructor || fn.is_static_init)
            hits.push_back({&fn, PatternTag::ReplacedClass, note});
        }
      } else {
        for (const auto* f : usage_sites(index, del_entity, true))
          hits.push_back(
              {f, PatternTag::ReplacedClass, note + " (external; usage site)"});
      }
    }
  }
  return hits;
}

std::vector<PatternHit> detect_additional_arguments(const DiffHunk& hunk,
                                                    const RepoIndex& index) {
  std::vector<PatternHit> hits;
  auto deleted = role_calls(hunk, LineRole::Deleted);
  auto added = role_calls(hunk, LineRole::Added);
  if (deleted.empty() || added.empty()) return hits;

  for (const auto& del : deleted) {
    for (const auto& add : added) {
      if (del.site.callee_name != add.site.callee_name) continue;
      if (del.site.kind != add.site.kind) continue;
      if (del.args == add.args) continue;

      std::string note = "call " + del.site.callee_name +
                         " changed arguments (" +
                         std::to_string(del.args.size()) + " -> " +
                         std::to_string(add.args.size()) + ")";
      auto defs = definitions_of(index, del.site.callee_name, del.args.size());
      if (!defs.empty()) {
        for (const auto* f : defs)
          hits.push_back({f, PatternTag::AdditionalArguments, note});
      } else {
        for (const auto* f : usage_sites(index, del.site.callee_name, false))
          hits.push_back({f, PatternTag::AdditionalArguments,
                          note + " (external; usage site)"});
      }
    }
  }
  return hits;
}

namespace {

// Old-file line numbers touched by the hunk; added lines take their
// insertion point.
std::vector<std::pair<int, LineRole>> hunk_old_lines(const DiffHunk& hunk) {
  std::vector<std::pair<int, LineRole>> out;
  int old_line = hunk.old_range.start;
  for (const auto& line : hunk.lines) {
    if (line.role == LineRole::Added) {
      out.emplace_back(old_line, line.role);
    } else {
      out.emplace_back(old_line, line.role);
      ++old_line;
    }
  }
  return out;
}

std::vector<std::string> harvest_identifiers(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      cur += c;
    } else {
      if (!cur.empty() && !std::isdigit(static_cast<unsigned char>(cur[0])))
        out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty() && !std::isdigit(static_cast<unsigned char>(cur[0])))
    out.push_back(cur);
  return out;
}

}  // namespace

std::vector<PatternHit> detect_config_change(const DiffHunk& hunk,
                                             const RepoIndex& index) {
  std::vector<PatternHit> hits;

  // Locus test: some hunk line must fall inside a field declaration or
  // a static initializer of the patched file.
  bool in_config_region = false;
  for (const auto& [line_no, role] : hunk_old_lines(hunk)) {
    for (const auto& field : index.fields) {
      if (field.file_path == hunk.file_path && field.span.contains(line_no)) {
        in_config_region = true;
        break;
      }
    }
    if (in_config_region) break;
    for (const auto& fn : index.functions) {
      if (fn.is_static_init && fn.file_path == hunk.file_path &&
          fn.span.contains(line_no)) {
        in_config_region = true;
        break;
      }
    }
    if (in_config_region) break;
  }
  if (!in_config_region) return hits;

  // Variables harvested from added and deleted lines.
  std::set<std::string> names;
  for (const auto& line : hunk.lines) {
    if (line.role == LineRole::Context) continue;
    for (const auto& ident : harvest_identifiers(line.text)) names.insert(ident);
  }

  for (const auto& field : index.fields) {
    if (field.file_path != hunk.file_path || !names.count(field.name)) continue;
    std::string note = "configuration field " + field.owner_class + "." +
                       field.name + " changed";
    for (const auto* fn : find_field_references(field, index))
      hits.push_back({fn, PatternTag::ConfigChange, note});
    const FunctionRecord* init =
        index.find_qualified(field.owner_class + "#<static-init>");
    if (init && !init->is_test)
      hits.push_back({init, PatternTag::ConfigChange, note});
  }
  return hits;
}

CandidateSet track(const std::string& cve_id,
                   const std::vector<DiffHunk>& hunks, const RepoIndex& index,
                   const TrackerConfig& config) {
  if (hunks.empty())
    throw ConfigError(
        "no diff hunks to track; use patch-absent mode for this record");

  struct Entry {
    const FunctionRecord* fn;
    std::set<PatternTag> tags;
    std::string note;
  };
  std::map<std::string, Entry> merged;

  auto add_hit = [&](const PatternHit& hit) {
    if (hit.function->is_test) return;
    auto [it, inserted] =
        merged.try_emplace(hit.function->qualified_name,
                           Entry{hit.function, {}, hit.note});
    it->second.tags.insert(hit.tag);
  };

  std::size_t pattern_hits = 0;
  for (const auto& hunk : hunks) {
    for (auto&& hit : detect_replaced_method(hunk, index)) add_hit(hit), ++pattern_hits;
    for (auto&& hit : detect_replaced_class(hunk, index)) add_hit(hit), ++pattern_hits;
    for (auto&& hit : detect_additional_arguments(hunk, index)) add_hit(hit), ++pattern_hits;
    for (auto&& hit : detect_config_change(hunk, index)) add_hit(hit), ++pattern_hits;
  }

  if (config.additive_fallback || pattern_hits == 0) {
    for (const auto& hunk : hunks) {
      std::set<int> changed;
      for (const auto& [line_no, role] : hunk_old_lines(hunk))
        if (role != LineRole::Context) changed.insert(line_no);
      for (const auto& fn : index.functions) {
        if (fn.is_test || fn.file_path != hunk.file_path) continue;
        bool touched = std::any_of(changed.begin(), changed.end(), [&](int l) {
          return fn.span.contains(l);
        });
        if (touched)
          add_hit({&fn, PatternTag::ModifiedFallback, "modified by patch"});
      }
    }
  }

  CandidateSet set;
  set.cve_id = cve_id;
  set.mode = Mode::PatchPresent;

  std::vector<const Entry*> entries;
  for (const auto& [name, entry] : merged) entries.push_back(&entry);
  auto by_location = [](const Entry* a, const Entry* b) {
    if (a->fn->file_path != b->fn->file_path)
      return a->fn->file_path < b->fn->file_path;
    return a->fn->span.start_line < b->fn->span.start_line;
  };
  auto is_fallback_only = [](const Entry* e) {
    return e->tags.size() == 1 && e->tags.count(PatternTag::ModifiedFallback);
  };
  std::vector<const Entry*> pattern_first, fallback_only;
  for (const Entry* e : entries)
    (is_fallback_only(e) ? fallback_only : pattern_first).push_back(e);
  std::sort(pattern_first.begin(), pattern_first.end(), by_location);
  std::sort(fallback_only.begin(), fallback_only.end(), by_location);

  auto emit = [&](const Entry* e) {
    Candidate cand;
    cand.qualified_name = e->fn->qualified_name;
    cand.file_path = e->fn->file_path;
    cand.span = e->fn->span;
    cand.tags.assign(e->tags.begin(), e->tags.end());
    cand.note = e->note;
    set.candidates.push_back(std::move(cand));
  };
  for (const Entry* e : pattern_first) emit(e);
  for (const Entry* e : fallback_only) emit(e);

  // Overflow trims config-change-only references first.
  if (set.candidates.size() > config.cap) {
    auto config_only = [](const Candidate& c) {
      return c.tags.size() == 1 && c.tags.front() == PatternTag::ConfigChange;
    };
    for (auto it = set.candidates.rbegin();
         it != set.candidates.rend() && set.candidates.size() > config.cap;) {
      if (config_only(*it)) {
        it = decltype(it)(set.candidates.erase(std::next(it).base()));
      } else {
        ++it;
      }
    }
    if (set.candidates.size() > config.cap)
      set.candidates.resize(config.cap);
  }
  return set;
}

std::string candidate_set_to_json(const CandidateSet& set) {
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const auto& c : set.candidates) {
    nlohmann::ordered_json tags = nlohmann::ordered_json::array();
    for (auto t : c.tags) tags.push_back(pattern_tag_name(t));
    cands.push_back({{"qualified_name", c.qualified_name},
                     {"file", c.file_path},
                     {"span", {c.span.start_line, c.span.end_line}},
                     {"tags", tags},
                     {"note", c.note}});
  }
  nlohmann::ordered_json doc = {{"cve_id", set.cve_id},
                                {"mode", mode_name(set.mode)},
                                {"candidates", cands}};
  return doc.dump(2);
}

CandidateSet candidate_set_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed candidate set: ") + e.what());
  }
  CandidateSet set;
  set.cve_id = doc.value("cve_id", "");
  set.mode = doc.value("mode", "") == "patch-absent" ? Mode::PatchAbsent
                                                     : Mode::PatchPresent;
  for (const auto& item : doc.value("candidates", nlohmann::json::array())) {
    Candidate cand;
    cand.qualified_name = item.value("qualified_name", "");
    cand.file_path = item.value("file", "");
    if (item.contains("span") && item["span"].is_array() &&
        item["span"].size() == 2) {
      cand.span = {item["span"][0].get<int>(), item["span"][1].get<int>()};
    }
    for (const auto& tag : item.value("tags", nlohmann::json::array())) {
      std::string name = tag.get<std::string>();
      for (PatternTag t :
           {PatternTag::ReplacedMethod, PatternTag::ReplacedClass,
            PatternTag::AdditionalArguments, PatternTag::ConfigChange,
            PatternTag::ModifiedFallback, PatternTag::ScorerTopK}) {
        if (name == pattern_tag_name(t)) cand.tags.push_back(t);
      }
    }
    cand.note = item.value("note", "");
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

}  // namespace vfloc
