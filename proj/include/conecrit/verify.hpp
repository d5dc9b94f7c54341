#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conecrit {

struct Check {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

/// Oracle self-checks: interface lengths, normal-form loci, trivial-branch
/// predictions and the flat-disk Neumann eigenvalue.
std::vector<Check> oracle_checks();

/// One line per check; returns true if all passed.
bool print_checks(std::ostream& os, const std::vector<Check>& checks);

}  // namespace conecrit
