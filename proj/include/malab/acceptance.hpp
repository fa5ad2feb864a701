#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace malab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // measured values behind the verdict
};

struct AcceptanceOptions {
  /// Thread count of the repeat pass compared against the single-threaded one.
  int alt_threads = 4;
  /// Written when non-empty: artifacts of the primary pass and summary.json.
  std::string out_dir;
};

struct AcceptanceSummary {
  std::vector<CriterionResult> results;
  std::vector<std::string> notes;  // supplementary output, not counted
  std::map<std::string, std::string> artifacts;
  bool all_pass() const;
};

/// Runs the nine acceptance criteria. Each criterion prints one line
/// "PASS|FAIL  [id] name: detail" to `log` as soon as it is decided.
///
/// The primary pass is single-threaded. Criterion 9 recomputes every artifact
/// with alt_threads and once more single-threaded and compares the bytes.
AcceptanceSummary run_acceptance(const AcceptanceOptions& opts, std::ostream& log);

}  // namespace malab
