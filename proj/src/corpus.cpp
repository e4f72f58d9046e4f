#include "vfloc/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "vfloc/errors.hpp"

namespace vfloc {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json parse_json_file(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

std::string trimmed(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<VulnRecord> load_vuln_records(const std::string& path) {
  json doc = parse_json_file(path);
  if (!doc.is_array())
    throw ValidationError(path + ": expected a JSON array of records");
  std::vector<VulnRecord> records;
  std::unordered_set<std::string> seen;
  for (const auto& item : doc) {
    VulnRecord rec;
    rec.cve_id = item.value("cve_id", "");
    rec.description = item.value("description", "");
    rec.cwe_ids = item.value("cwe_ids", std::vector<std::string>{});
    rec.patch_refs = item.value("patch_refs", std::vector<std::string>{});
    rec.repo_path = item.value("repo_path", "");
    if (rec.cve_id.empty())
      throw ValidationError(path + ": record with empty cve_id");
    if (trimmed(rec.description).empty())
      throw ValidationError(path + ": empty description for " + rec.cve_id);
    if (!seen.insert(rec.cve_id).second)
      throw ValidationError(path + ": duplicate cve_id " + rec.cve_id);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<CweEntry> load_cwe_corpus(const std::string& path) {
  json doc = parse_json_file(path);
  if (!doc.is_array())
    throw ValidationError(path + ": expected a JSON array of CWE entries");
  std::vector<CweEntry> entries;
  std::unordered_set<std::string> seen;
  for (const auto& item : doc) {
    CweEntry entry;
    entry.cwe_id = item.value("cwe_id", "");
    entry.name = item.value("name", "");
    entry.description = item.value("description", "");
    if (entry.cwe_id.empty())
      throw ValidationError(path + ": CWE entry with empty cwe_id");
    if (trimmed(entry.description).empty())
      throw ValidationError(path + ": empty description for " + entry.cwe_id);
    if (!seen.insert(entry.cwe_id).second)
      throw ValidationError(path + ": duplicate cwe_id " + entry.cwe_id);
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<GroundTruth> load_ground_truth(const std::string& path) {
  json doc = parse_json_file(path);
  if (!doc.is_array())
    throw ValidationError(path + ": expected a JSON array of truth entries");
  std::vector<GroundTruth> truths;
  for (const auto& item : doc) {
    GroundTruth gt;
    gt.cve_id = item.value("cve_id", "");
    if (gt.cve_id.empty())
      throw ValidationError(path + ": truth entry with empty cve_id");
    for (const auto& vf : item.value("vf", json::array())) {
      gt.vf_refs.push_back(
          {vf.value("qualified_name", ""), vf.value("file", "")});
    }
    if (gt.vf_refs.empty())
      throw ValidationError(path + ": no vf refs for " + gt.cve_id);
    truths.push_back(std::move(gt));
  }
  return truths;
}

std::string serialize_vuln_records(const std::vector<VulnRecord>& records) {
  ordered_json doc = ordered_json::array();
  for (const auto& rec : records) {
    doc.push_back({{"cve_id", rec.cve_id},
                   {"description", rec.description},
                   {"cwe_ids", rec.cwe_ids},
                   {"patch_refs", rec.patch_refs},
                   {"repo_path", rec.repo_path}});
  }
  return doc.dump(2);
}

std::string resolve_patch_ref(const std::string& ref) {
  auto looks_like_path = [&] {
    if (ref.find('\n') != std::string::npos) return false;
    return ref.ends_with(".diff") || ref.ends_with(".patch");
  };
  if (looks_like_path()) return read_file(ref);
  return ref;
}

const char* mode_name(Mode mode) {
  return mode == Mode::PatchPresent ? "patch-present" : "patch-absent";
}

}  // namespace vfloc
