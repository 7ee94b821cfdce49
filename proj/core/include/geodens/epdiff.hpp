#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "geodens/density_geodesic.hpp"
#include "geodens/field.hpp"

namespace geodens {

/// Torus diffeomorphism φ(x) = x + phi_disp(x) (mod 2π) together with the
/// Eulerian velocity u = φ_t ∘ φ⁻¹ of the right-invariant flow.
struct DiffeoState {
  VectorField phi_disp;
  VectorField u;
  int k = 1;
};

DiffeoState identity_diffeo(const VectorField& u, int k);

/// Thrown when det Dφ ≤ 0 somewhere on the grid.
class EpdiffAborted : public std::runtime_error {
 public:
  EpdiffAborted(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// u_t = -A⁻¹{(u·∇)m + (div u) m + (∇u)ᵀ m}, m = A u.
/// The momentum is formed on the retained band and the bracket is dealiased.
VectorField epdiff_rhs(const VectorField& u, int k);

/// ½⟨A u, u⟩, conserved along EPDiff solutions.
double epdiff_energy(const VectorField& u, int k);

struct EpdiffRun {
  std::vector<double> times;
  std::vector<DiffeoState> states;
};

/// RK4 for the coupled system u_t = epdiff_rhs(u), φ_t = u ∘ φ, with
/// ceil(T/dt) equal steps. Keeps every `save_every`-th state plus the last.
/// Throws EpdiffAborted on Jacobian non-positivity.
EpdiffRun integrate_epdiff(const DiffeoState& initial, double T, double dt, int save_every = 1);

/// v ∘ φ at the grid points, by trigonometric interpolation of v.
VectorField compose(const VectorField& v, const VectorField& phi_disp);
ScalarField compose(const ScalarField& f, const VectorField& phi_disp);

/// det(I + D disp) by spectral differentiation.
ScalarField jacobian_determinant(const VectorField& disp);

/// Displacement of φ⁻¹ sampled at the grid points. Damped fixed point
/// y ← y - ½(φ(y) - x) to |φ(y) - x| ≤ tol. Throws std::runtime_error after
/// max_iterations.
VectorField invert_map(const VectorField& phi_disp, double tol = 1e-12, int max_iterations = 200);

struct LeftProjection {
  ScalarField rho;
  /// |∫Jac(φ⁻¹) - 1| before normalization.
  double mass_error = 0.0;
};

/// π_l(φ) = φ_*μ, the density Jac(φ⁻¹), normalized to unit mass.
LeftProjection project_left_detailed(const DiffeoState& phi);
ScalarField project_left(const DiffeoState& phi);

struct HorizontalLift {
  VectorField eulerian;
  VectorField lagrangian;
};

/// A⁻¹(ρ∇p) and its composition with φ. Rejects ρ that differs from π_l(φ)
/// by more than 1e-6 at some grid point.
HorizontalLift horizontal_lift(const ScalarField& rho, const ScalarField& p, const DiffeoState& phi);

/// L² norm of the divergence-free Hodge component of w = (A u) / ρ. Zero
/// exactly when u is horizontal for the left projection.
double horizontality_defect(const VectorField& u, const ScalarField& rho, int k);

/// max |ρ(φ(x)) · det Dφ(x) - 1| over the grid, for ρ = π_l(φ).
double lagrangian_density_defect(const VectorField& phi_disp, const ScalarField& rho);

/// Displacement of a diffeomorphism φ₀ with π_l(φ₀) = ρ₀. Inverse cumulative
/// distribution in 1-D (Newton per point), Moser's flow in 2-D.
VectorField density_preimage(const ScalarField& rho0, int moser_steps = 64);

struct CrossValidationOptions {
  /// EPDiff runs on a grid `refinement` times finer per axis.
  int refinement = 4;
  int snapshots = 10;
  bool concurrent = true;
};

struct CrossValidationReport {
  int dim = 1;
  int n = 0;
  int k = 1;
  double dt = 0.0;
  double T = 0.0;
  int refinement = 1;
  double l2_discrepancy_final = 0.0;
  double l2_discrepancy_max = 0.0;
  double horizontality_defect_max = 0.0;
  double energy_drift_density = 0.0;
  double energy_drift_epdiff = 0.0;
  double projection_mass_error_max = 0.0;
  std::vector<double> snapshot_times;
  std::vector<double> discrepancies;
  std::vector<double> defects;
  std::vector<double> rho_density_final;
  std::vector<double> rho_epdiff_final;
};

/// Shoots the density geodesic and the horizontal EPDiff geodesic through a
/// preimage of ρ₀ and compares ρ(t) with π_l(φ(t)) at common snapshots.
CrossValidationReport cross_validate(const ScalarField& rho0, const ScalarField& p0, int k, double T,
                                     double dt, const CrossValidationOptions& options = {});

/// JSON text with the report fields (grid, k, dt, T, discrepancies, defects, drifts).
std::string to_json(const CrossValidationReport& report);

}  // namespace geodens
