#pragma once

#include <string>
#include <vector>

namespace hybridmeas::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< measured deviation or quantity
  double tolerance = 0.0;  ///< bound that `value` must not exceed
  std::string detail;
};

/// Quick invariant checks against exact anchors; a few seconds in total.
std::vector<CheckResult> run_selftest();

}  // namespace hybridmeas::cli
