#pragma once

#include <string>
#include <vector>

namespace rlr {

struct SuiteResult {
  std::string name;
  bool pass = false;
  double ms = 0.0;
  std::string detail;  // first failure, or a summary stat
};

// Deterministic invariant suites shared by the CLI selftest subcommand and
// the test binaries. quad_order lets a caller degrade the quadrature to
// demonstrate that the cross-route checks actually bite.
std::vector<SuiteResult> run_selftest(int quad_order = 80);

}  // namespace rlr
