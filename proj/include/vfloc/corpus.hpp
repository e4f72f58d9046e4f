#pragma once

#include <string>
#include <vector>

namespace vfloc {

enum class Mode { PatchPresent, PatchAbsent };

/// A disclosed vulnerability. patch_refs entries are either inline
/// unified-diff text or paths to .diff/.patch files; an empty list
/// selects PATCH-ABSENT mode.
struct VulnRecord {
  std::string cve_id;
  std::string description;
  std::vector<std::string> cwe_ids;
  std::vector<std::string> patch_refs;
  std::string repo_path;

  Mode mode() const {
    return patch_refs.empty() ? Mode::PatchAbsent : Mode::PatchPresent;
  }
};

struct CweEntry {
  std::string cwe_id;
  std::string name;
  std::string description;
};

struct FunctionRef {
  std::string qualified_name;
  std::string file;
};

struct GroundTruth {
  std::string cve_id;
  std::vector<FunctionRef> vf_refs;
};

std::vector<VulnRecord> load_vuln_records(const std::string& path);
std::vector<CweEntry> load_cwe_corpus(const std::string& path);
std::vector<GroundTruth> load_ground_truth(const std::string& path);

std::string serialize_vuln_records(const std::vector<VulnRecord>& records);

/// Resolves a patch_ref to diff text: inline text passes through,
/// paths ending in .diff/.patch are read from disk.
std::string resolve_patch_ref(const std::string& ref);

const char* mode_name(Mode mode);

}  // namespace vfloc
