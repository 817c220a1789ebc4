#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sbmai {

struct VerifyRow {
  std::string module;
  std::string check;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">=", "==" or "in"
  double limit = 0.0;
  double limit_hi = 0.0;  // upper end for "in"
  bool pass = false;
};

struct VerifyReport {
  std::uint64_t seed = 1;
  std::vector<VerifyRow> rows;
  bool all_pass = true;
};

// Desk-scale invariant suite. Every random draw derives from `seed`, so the
// report is a pure function of it.
VerifyReport run_verify(std::uint64_t seed);

}  // namespace sbmai
