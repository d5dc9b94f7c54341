#pragma once

#include "conecrit/continuation.hpp"
#include "conecrit/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace conecrit {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  /// Overrides the scenario's output directory when non-empty.
  std::filesystem::path output;
  /// Overrides the scenario's worker count when positive.
  int workers = 0;
  /// Progress messages; nullptr for silence.
  std::ostream* log = nullptr;
};

struct HitSummary {
  BranchPoint point;
  std::string label;  ///< interface type of the zero level set
};

struct StageResult {
  std::string name;
  std::string status;  ///< ok | failed | skipped
  std::string message;
  std::vector<Branch> branches;
  std::vector<std::vector<HitSummary>> hits;  ///< per branch
  std::size_t seeds_found = 0;
};

struct RunResult {
  std::filesystem::path directory;
  std::vector<StageResult> stages;
  std::vector<std::pair<std::string, std::string>> manifest;  ///< (stage, relative path)

  bool ok() const;
  const StageResult* stage(const std::string& name) const;
};

/// Runs every stage in order and writes CSVs, checkpoints, contours, a
/// summary and a manifest. Files are written to a staging directory that is
/// renamed to the output directory at the end; an existing output directory
/// is an error. A failed stage skips the stages that depend on it.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options);

}  // namespace conecrit
