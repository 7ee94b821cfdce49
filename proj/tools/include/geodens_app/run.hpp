#pragma once

#include <filesystem>
#include <string>

#include "geodens_app/config.hpp"

namespace geodens::app {

struct RunOptions {
  bool quiet = false;
  /// Suppresses all log output, including warnings and errors.
  bool silent = false;
};

/// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAborted = 3;
inline constexpr int kExitValidationFailed = 4;

/// Executes one command: writes manifest.json first, artifacts as they are
/// produced, and status.json last. Returns kExitOk iff the status is "ok".
/// Problems detected before the manifest is written (unreadable or invalid
/// initial data) produce no artifacts and return kExitConfig.
int run(const RunConfig& config, const RunOptions& options = {});

/// Step size actually used: the configured dt, or 0.5·Δx/max|u| at the
/// initial state capped at T/100.
double resolve_time_step(const RunConfig& config);

}  // namespace geodens::app
