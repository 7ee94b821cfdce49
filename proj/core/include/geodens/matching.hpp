#pragma once

#include <array>
#include <string>
#include <vector>

#include "geodens/density_geodesic.hpp"
#include "geodens/field.hpp"

namespace geodens {

enum class MatchPreconditioner {
  /// Inverse of the Levenberg-damped Gauss–Newton matrix JᵀJ + μD of the
  /// endpoint map, with J taken from the same central differences as the
  /// gradient and D the constant-density curvature.
  gauss_newton,
  /// Per-mode inverse curvature of the objective at constant density.
  spectral,
};

struct OptimizerSettings {
  int max_iterations = 200;
  /// Stops once the max-norm of the gradient falls to this value.
  double gradient_tolerance = 1e-12;
  /// Armijo constant.
  double sufficient_decrease = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  /// Relative central-difference step: h = fd_step · max(1, |c_i|).
  double fd_step = 1e-5;
  /// Evaluates gradient components on worker threads.
  bool parallel = true;
  MatchPreconditioner preconditioner = MatchPreconditioner::gauss_newton;
  /// Initial Levenberg weight μ. It shrinks by 4 after a full step and grows
  /// by 4 after a backtracked one.
  double damping = 1.0;
};

struct MatchProblem {
  ScalarField rho0;
  ScalarField rho1;
  int k = 1;
  double T = 1.0;
  double dt = 1e-2;
  int n_modes = 8;
  OptimizerSettings opt{};
};

/// Throws std::invalid_argument unless both densities are positive with unit
/// mass on one grid, 1 ≤ n_modes ≤ n/3, T, dt > 0 and k ≥ -1.
void validate(const MatchProblem& problem);

/// Wavevectors of the search basis: every ξ with 1 ≤ max_j |ξ_j| ≤ n_modes
/// from one half-plane (ξ₀ > 0, or ξ₀ = 0 and ξ₁ > 0). Coefficient 2i
/// multiplies cos(ξᵢ·x) and coefficient 2i+1 multiplies sin(ξᵢ·x).
std::vector<std::array<int, 2>> match_basis(int dim, int n_modes);
std::size_t coefficient_count(int dim, int n_modes);

ScalarField momentum_from_coefficients(const Grid& grid, int n_modes, const std::vector<double>& coeffs);

/// Coefficients of p₀(x - delta) given those of p₀.
std::vector<double> translate_coefficients(int dim, int n_modes, const std::vector<double>& coeffs,
                                           std::array<double, 2> delta);

struct ObjectiveValue {
  double value = 0.0;
  bool penalized = false;
  /// Time at which an aborted shoot stopped.
  double abort_time = 0.0;
};

/// ½‖ρ(T) - ρ₁‖². An aborted shoot yields 10⁶·(1 + (T - t_abort)/T).
ObjectiveValue evaluate_objective(const MatchProblem& problem, const std::vector<double>& coeffs);
double objective(const MatchProblem& problem, const std::vector<double>& coeffs);

/// Central differences with per-coordinate step h·max(1, |c_i|).
/// h ≤ 0 selects problem.opt.fd_step.
std::vector<double> gradient_fd(const MatchProblem& problem, const std::vector<double>& coeffs,
                                double h = 0.0);

enum class MatchStatus { converged, max_iter, stalled };
std::string to_string(MatchStatus status);

struct MatchIteration {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  /// Euclidean length of the accepted coefficient update (0 at the start).
  double step = 0.0;
};

struct MatchResult {
  ScalarField p0;
  std::vector<double> coeffs;
  std::vector<double> objective_history;
  std::vector<MatchIteration> history;
  double final_l2_mismatch = 0.0;
  /// final_l2_mismatch / ‖ρ₁ - ρ₀‖ (0 when the endpoints coincide).
  double relative_mismatch = 0.0;
  Trajectory geodesic;
  MatchStatus status = MatchStatus::stalled;
  int objective_evaluations = 0;
  int penalized_evaluations = 0;
};

/// Preconditioned gradient descent from zero coefficients with Armijo
/// backtracking. Directions come from the configured preconditioner; the
/// spectral one also serves as fallback when the Gauss–Newton system is
/// unusable, with trial steps starting at the Barzilai–Borwein length.
/// Accepted steps never increase the objective, so the last iterate is the
/// best seen.
MatchResult solve_match(const MatchProblem& problem);

}  // namespace geodens
