#pragma once

#include "conecrit/continuation.hpp"
#include "conecrit/fem_problem.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace conecrit {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct MeshSpec {
  double target_h = 0.05;
  std::size_t element_cap = kDefaultElementCap;
  std::string file;  ///< optional mesh checkpoint instead of generation
  double width_factor = 3.0;
  double band = 0.9;
  int max_rounds = 6;
};

struct OutputSpec {
  std::string directory;
  std::vector<double> contour_levels{-0.5, 0.0, 0.5};
};

enum class StageKind { branch, fold_curve, bp_curve };

struct StartSpec {
  enum class Type { trivial, guess, checkpoint, switch_bp, hit, event };
  Type type = Type::trivial;
  std::string stage;  ///< referenced stage
  int branch = 1;     ///< branch of the referenced stage (seed), 1-based
  int k = 1;          ///< event or hit number, 1-based
  EventKind event = EventKind::none;
  InterfaceGuess guess = InterfaceGuess::t1;
  std::string path;
};

struct StageSpec {
  std::string name;
  int line = 0;
  StageKind kind = StageKind::branch;
  StartSpec start;
  std::string param = "m";
  std::string second;
  double direction = 1.0;
  /// 0 means every seed returned by branch switching.
  int seed = 1;
  std::optional<double> h, a, eps, m;
  ContinuationSettings settings;
  bool spectrum = true;
  bool adapt = false;
  int relax_steps = 0;
  double tau = 0.05;
  bool contours = true;
};

struct Scenario {
  std::string source;
  std::filesystem::path base_dir;  ///< relative paths are resolved against it
  double h = 1.0;
  double a = 1.05;
  double eps = 0.1;
  double m = 0.0;
  int workers = 1;
  MeshSpec mesh;
  OutputSpec output;
  std::vector<StageSpec> stages;

  const StageSpec* stage(const std::string& name) const;
};

/// Parses the key-value scenario format documented in docs/scenario-format.md.
/// Throws ScenarioError with the offending line number.
Scenario parse_scenario(std::istream& is, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace conecrit
