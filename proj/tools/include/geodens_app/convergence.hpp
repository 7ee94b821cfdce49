#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geodens_app/config.hpp"

namespace geodens::app {

struct ConvergenceRun {
  int n = 0;
  double dt = 0.0;
  bool completed = false;
  std::string message;
  double t_end = 0.0;
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  double min_rho = 0.0;
  double spectral_tail_final = 0.0;
  double spectral_tail_max = 0.0;
  /// Spectral tail never decreased between recorded states.
  bool tail_monotone = true;
  std::vector<double> tail_times;
  std::vector<double> tail_history;
  /// Final density sampled on the base grid (empty if the run aborted).
  std::vector<double> rho_final;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRun> runs;
  /// log2 of successive final-density differences under dt-halving; NaN if
  /// a run aborted or the differences vanish.
  double temporal_order = 0.0;
  double temporal_order_fine = 0.0;
  /// log2 of successive energy drifts under dt-halving.
  double energy_order = 0.0;
  /// ‖ρ_n(T) - ρ_2n(T)‖ at the smallest step.
  double spatial_change = 0.0;
  int aborted_runs = 0;
};

/// Reruns the configured shoot at dt/{1,2,4} on grids n and 2n. Aborted
/// sub-runs are recorded and the study continues.
ConvergenceStudy run_convergence(const RunConfig& config, double dt);

void write_convergence(const ConvergenceStudy& study, const std::filesystem::path& dir);

}  // namespace geodens::app
