#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geodens_app/config.hpp"

namespace geodens::app {

struct InvariantResult {
  std::string module;
  std::string name;
  bool pass = false;
  /// Measured quantity and the bound it is compared against.
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::uint64_t seed = 0;
  int dim = 1;
  int n = 0;
  int k = 1;
  std::vector<InvariantResult> results;

  bool all_pass() const;
};

/// Runs the invariant suites of every module on the configured grid, metric
/// order and seed. Deterministic: the same configuration yields a
/// bitwise-identical report.
ValidationReport run_validation(const RunConfig& config);

std::string to_json(const ValidationReport& report);

}  // namespace geodens::app
