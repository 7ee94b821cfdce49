#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "geodens/field.hpp"

namespace geodens {

/// Hamiltonian coordinates (ρ, p) of a density geodesic. `p` is the
/// mean-zero representative of the momentum potential modulo constants.
struct DensityState {
  ScalarField rho;
  ScalarField p;
  int k = 1;
};

/// Validates ρ > 0 and unit mass, projects p to mean zero.
/// Throws std::invalid_argument on violated invariants.
DensityState make_density_state(ScalarField rho, ScalarField p, int k,
                                double mass_tolerance = 1e-10);

struct Diagnostics {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double min_rho = 0.0;
  double max_abs_p = 0.0;
  int cg_iterations = 0;
  double spectral_tail = 0.0;
};

struct Trajectory {
  int k = 1;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<DensityState> states;
  std::vector<Diagnostics> diagnostics;
};

/// A step or run stopped because ρ lost positivity or mass drifted.
class StepAborted : public std::runtime_error {
 public:
  StepAborted(const std::string& reason, double time)
      : std::runtime_error(reason), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Abort raised by `shoot`, carrying everything computed before the failure.
class ShootAborted : public StepAborted {
 public:
  ShootAborted(const std::string& reason, double time, std::shared_ptr<const Trajectory> partial)
      : StepAborted(reason, time), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return *partial_; }

 private:
  std::shared_ptr<const Trajectory> partial_;
};

/// Raised by solve_L_rho when the iteration cap is hit.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// True when k > d/2, the regime in which every geodesic exists for all time.
bool global_existence_guaranteed(int k, int dim) noexcept;

/// L_ρ p = -div(ρ A⁻¹(ρ ∇p)), A = (1 - Δ)^{k+1}.
///
/// Discretized as -div P[ρ · A⁻¹ P[ρ · P∇p]] with P the 2/3-rule projector.
/// Truncating ∇p before the first product keeps the discrete operator
/// symmetric and positive semi-definite; its kernel is the constants plus the
/// modes outside the retained band. Throws std::domain_error if min ρ ≤ 0.
ScalarField apply_L_rho(const ScalarField& rho, const ScalarField& p, int k);

struct LinearSolveResult {
  ScalarField p;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves L_ρ p = ρ̇ for mean-zero p by preconditioned conjugate gradients on
/// the retained mean-zero band. The preconditioner is the inverse
/// constant-density symbol (1 + |ξ|²)^{k+1} / |ξ|², exact when ρ ≡ 1.
/// Components of ρ̇ outside that band are not in the range of the discrete
/// operator and are discarded before solving. max_iterations = 0 selects
/// 10·n^d. Throws SolverError on non-convergence.
LinearSolveResult solve_L_rho(const ScalarField& rho, const ScalarField& rhodot, int k,
                              double tol = 1e-10, int max_iterations = 0);

/// u = A⁻¹ P[ρ · P∇p], the Eulerian velocity with A u = ρ∇p.
VectorField horizontal_velocity(const DensityState& state);

struct HamiltonianRhs {
  ScalarField rhodot;
  ScalarField pdot;
};

/// ρ_t = L_ρ p and p_t = -∇p·u projected to mean zero.
HamiltonianRhs hamiltonian_rhs(const DensityState& state);

/// One classical RK4 step. Throws StepAborted on positivity loss or a mass
/// change above 1e-8.
DensityState step_rk4(const DensityState& state, double dt);

/// ½⟨p, L_ρ p⟩, the squared metric speed of ρ̇ = L_ρ p.
double metric_energy(const DensityState& state);

/// Largest spectral-tail fraction over ρ - mean(ρ) and p.
double spectral_tail(const DensityState& state);

Diagnostics diagnose(const DensityState& state, double t, bool with_cg = true,
                     double cg_tolerance = 1e-10);

/// 0.5 · Δx / max|u| at the given state, clamped to `fallback` when u vanishes.
double default_time_step(const DensityState& state, double fallback);

struct ShootOptions {
  int save_every = 1;
  /// Integrates toward negative times by evolving (ρ, -p) forward.
  bool backward = false;
  bool cg_diagnostics = true;
  double cg_tolerance = 1e-10;
  /// Called for every stored state in integration order, before the next step.
  std::function<void(const DensityState&, const Diagnostics&)> on_record;
};

/// Integrates from (ρ₀, p₀) over [0, T] (or [-T, 0] backward) with
/// ceil(T/dt) equal steps. Throws ShootAborted carrying the partial trajectory.
Trajectory shoot(const ScalarField& rho0, const ScalarField& p0, int k, double T, double dt,
                 const ShootOptions& options = {});

/// Endpoint of the geodesic without storing a trajectory.
DensityState flow(const DensityState& initial, double T, double dt);

}  // namespace geodens
