#pragma once

#include <string>
#include <vector>

namespace fbmldp {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity
  double threshold = 0.0;  // bound it is compared against
  std::string detail;
};

/// Fast self-test over every module (a few seconds at desk scale).
/// `workers` affects throughput only.
std::vector<CheckResult> run_invariant_suite(std::size_t workers = 1);

}  // namespace fbmldp
