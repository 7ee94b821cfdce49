#include "geodens/density_geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geodens/spectral.hpp"
#include "tables.hpp"

namespace geodens {

namespace {

void require_positive(const ScalarField& rho, const char* what) {
  const double m = rho.min();
  if (!(m > 0.0)) {
    std::ostringstream os;
    os << what << ": density must be strictly positive (min " << m << ")";
    throw std::domain_error(os.str());
  }
}

// Shared intermediates of L_ρ p: g = P∇p and u = A⁻¹ P[ρ g].
struct Velocity {
  std::vector<std::vector<double>> g;
  std::vector<std::vector<double>> u;
};

Velocity velocity_parts(const ScalarField& rho, const ScalarField& p, int k) {
  const Grid& grid = rho.grid();
  const Spectrum p_hat = forward(p);
  const auto& inv_symbol = detail::inertia_power(grid, -(k + 1));
  Velocity v;
  std::vector<double> w(grid.size());
  for (int j = 0; j < grid.dim(); ++j) {
    v.g.push_back(inverse(grid, detail::derivative(grid, p_hat, j, true)));
    const auto& g = v.g.back();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rho[i] * g[i];
    Spectrum w_hat = forward(grid, w);
    detail::dealias_in_place(grid, w_hat);
    for (std::size_t i = 0; i < w_hat.size(); ++i) w_hat[i] *= inv_symbol[i];
    v.u.push_back(inverse(grid, std::move(w_hat)));
  }
  return v;
}

// -div P[ρ u]
ScalarField density_rate(const ScalarField& rho, const Velocity& v) {
  const Grid& grid = rho.grid();
  Spectrum total(grid.size());
  std::vector<double> flux(grid.size());
  for (int j = 0; j < grid.dim(); ++j) {
    const auto& u = v.u[j];
    for (std::size_t i = 0; i < flux.size(); ++i) flux[i] = rho[i] * u[i];
    const Spectrum d = detail::derivative(grid, forward(grid, flux), j, true);
    for (std::size_t i = 0; i < d.size(); ++i) total[i] -= d[i];
  }
  total[0] = 0.0;
  return inverse_field(grid, std::move(total), true);
}

// -P[g·u] with the mean removed.
ScalarField momentum_rate(const Grid& grid, const Velocity& v) {
  std::vector<double> h(grid.size(), 0.0);
  for (int j = 0; j < grid.dim(); ++j) {
    for (std::size_t i = 0; i < h.size(); ++i) h[i] -= v.g[j][i] * v.u[j][i];
  }
  Spectrum h_hat = forward(grid, h);
  detail::dealias_in_place(grid, h_hat);
  h_hat[0] = 0.0;
  return inverse_field(grid, std::move(h_hat), true);
}

// Restriction to the retained mean-zero band.
ScalarField band_projection(const ScalarField& f) {
  Spectrum s = forward(f);
  detail::dealias_in_place(f.grid(), s);
  s[0] = 0.0;
  return inverse_field(f.grid(), std::move(s), true);
}

ScalarField apply_preconditioner(const ScalarField& r, int k) {
  const Grid& grid = r.grid();
  const auto& t = detail::tables(grid);
  const auto& symbol = detail::inertia_power(grid, k + 1);
  Spectrum s = forward(r);
  s[0] = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!t.retained[i]) {
      s[i] = 0.0;
      continue;
    }
    s[i] *= symbol[i] / t.wave_squared[i];
  }
  return inverse_field(grid, std::move(s), true);
}

}  // namespace

bool global_existence_guaranteed(int k, int dim) noexcept { return 2 * k > dim; }

DensityState make_density_state(ScalarField rho, ScalarField p, int k, double mass_tolerance) {
  require_same_grid(rho.grid(), p.grid(), "make_density_state");
  if (k < -1) throw std::invalid_argument("metric order k must be >= -1");
  if (!(rho.min() > 0.0)) throw std::invalid_argument("density must be strictly positive");
  const double mass = rho.mean();
  if (std::abs(mass - 1.0) > mass_tolerance) {
    std::ostringstream os;
    os << "density must have unit mass (got " << mass << ")";
    throw std::invalid_argument(os.str());
  }
  return DensityState{std::move(rho), project_mean_zero(std::move(p)), k};
}

ScalarField apply_L_rho(const ScalarField& rho, const ScalarField& p, int k) {
  require_same_grid(rho.grid(), p.grid(), "apply_L_rho");
  require_positive(rho, "apply_L_rho");
  return density_rate(rho, velocity_parts(rho, p, k));
}

LinearSolveResult solve_L_rho(const ScalarField& rho, const ScalarField& rhodot, int k,
                              double tol, int max_iterations) {
  require_same_grid(rho.grid(), rhodot.grid(), "solve_L_rho");
  require_positive(rho, "solve_L_rho");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_L_rho: tolerance must be positive");
  const Grid& grid = rho.grid();
  if (max_iterations <= 0) max_iterations = static_cast<int>(10 * grid.size());

  const ScalarField b = band_projection(rhodot);
  const double b_norm = l2_norm(b);
  ScalarField x(grid);
  x.set_mean_zero(true);
  if (b_norm == 0.0) return {x, 0, 0.0};

  ScalarField r = b;
  ScalarField z = apply_preconditioner(r, k);
  ScalarField d = z;
  double rz = l2_inner(r, z);
  int it = 0;
  double rel = 1.0;
  while (it < max_iterations) {
    const ScalarField q = apply_L_rho(rho, d, k);
    const double dq = l2_inner(d, q);
    if (!(dq > 0.0)) break;
    const double alpha = rz / dq;
    x.axpy(alpha, d);
    r.axpy(-alpha, q);
    ++it;
    rel = l2_norm(r) / b_norm;
    if (rel <= tol) {
      // Guard against drift of the recursive residual.
      r = b - apply_L_rho(rho, x, k);
      rel = l2_norm(r) / b_norm;
      if (rel <= tol) break;
    }
    z = apply_preconditioner(r, k);
    const double rz_next = l2_inner(r, z);
    d = z + (rz_next / rz) * d;
    rz = rz_next;
  }
  if (!(rel <= tol)) {
    std::ostringstream os;
    os << "solve_L_rho did not converge: relative residual " << rel << " after " << it
       << " iterations";
    throw SolverError(os.str(), rel, it);
  }
  x = project_mean_zero(std::move(x));
  return {std::move(x), it, rel};
}

VectorField horizontal_velocity(const DensityState& state) {
  require_positive(state.rho, "horizontal_velocity");
  Velocity v = velocity_parts(state.rho, state.p, state.k);
  return VectorField(state.rho.grid(), std::move(v.u));
}

HamiltonianRhs hamiltonian_rhs(const DensityState& state) {
  require_same_grid(state.rho.grid(), state.p.grid(), "hamiltonian_rhs");
  require_positive(state.rho, "hamiltonian_rhs");
  const Velocity v = velocity_parts(state.rho, state.p, state.k);
  return {density_rate(state.rho, v), momentum_rate(state.rho.grid(), v)};
}

DensityState step_rk4(const DensityState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
  const auto stage = [&](const DensityState& s) {
    try {
      return hamiltonian_rhs(s);
    } catch (const std::domain_error& e) {
      throw StepAborted(std::string("positivity lost inside RK4 stage: ") + e.what(), 0.0);
    }
  };
  const auto shifted = [&](const HamiltonianRhs& f, double h) {
    DensityState s{state.rho, state.p, state.k};
    s.rho.axpy(h, f.rhodot);
    s.p.axpy(h, f.pdot);
    return s;
  };
  const HamiltonianRhs k1 = stage(state);
  const HamiltonianRhs k2 = stage(shifted(k1, 0.5 * dt));
  const HamiltonianRhs k3 = stage(shifted(k2, 0.5 * dt));
  const HamiltonianRhs k4 = stage(shifted(k3, dt));

  DensityState next{state.rho, state.p, state.k};
  const double w1 = dt / 6.0;
  const double w2 = dt / 3.0;
  for (std::size_t i = 0; i < next.rho.size(); ++i) {
    next.rho[i] += w1 * (k1.rhodot[i] + k4.rhodot[i]) + w2 * (k2.rhodot[i] + k3.rhodot[i]);
    next.p[i] += w1 * (k1.pdot[i] + k4.pdot[i]) + w2 * (k2.pdot[i] + k3.pdot[i]);
  }
  next.rho.set_mean_zero(false);
  next.p = project_mean_zero(std::move(next.p));

  const double min_rho = next.rho.min();
  if (!(min_rho > 0.0)) {
    std::ostringstream os;
    os << "positivity lost: min rho = " << min_rho;
    throw StepAborted(os.str(), 0.0);
  }
  const double drift = std::abs(next.rho.mean() - state.rho.mean());
  if (drift > 1e-8) {
    std::ostringstream os;
    os << "mass drift " << drift << " exceeds 1e-8";
    throw StepAborted(os.str(), 0.0);
  }
  return next;
}

double metric_energy(const DensityState& state) {
  return 0.5 * l2_inner(state.p, apply_L_rho(state.rho, state.p, state.k));
}

double spectral_tail(const DensityState& state) {
  return std::max(spectral_tail_fraction(state.rho), spectral_tail_fraction(state.p));
}

Diagnostics diagnose(const DensityState& state, double t, bool with_cg, double cg_tolerance) {
  Diagnostics d;
  d.t = t;
  d.mass = state.rho.mean();
  const ScalarField rhodot = apply_L_rho(state.rho, state.p, state.k);
  d.energy = 0.5 * l2_inner(state.p, rhodot);
  d.min_rho = state.rho.min();
  d.max_abs_p = state.p.max_abs();
  if (with_cg) d.cg_iterations = solve_L_rho(state.rho, rhodot, state.k, cg_tolerance).iterations;
  d.spectral_tail = spectral_tail(state);
  return d;
}

double default_time_step(const DensityState& state, double fallback) {
  const double umax = horizontal_velocity(state).max_abs();
  if (!(umax > 0.0)) return fallback;
  return std::min(fallback, 0.5 * state.rho.grid().spacing() / umax);
}

namespace {

int step_count(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  const double ratio = T / dt;
  if (ratio > static_cast<double>(std::numeric_limits<int>::max() / 2)) {
    throw std::invalid_argument("T/dt is too large");
  }
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
}

void reverse_in_time(Trajectory& traj) {
  std::reverse(traj.times.begin(), traj.times.end());
  std::reverse(traj.states.begin(), traj.states.end());
  std::reverse(traj.diagnostics.begin(), traj.diagnostics.end());
}

DensityState reversed(DensityState s) {
  s.p *= -1.0;
  return s;
}

}  // namespace

Trajectory shoot(const ScalarField& rho0, const ScalarField& p0, int k, double T, double dt,
                 const ShootOptions& options) {
  const int steps = step_count(T, dt);
  const double h = T / steps;
  const double sign = options.backward ? -1.0 : 1.0;
  const int stride = std::max(1, options.save_every);

  DensityState state = make_density_state(rho0, p0, k);
  if (options.backward) state = reversed(std::move(state));

  auto traj = std::make_shared<Trajectory>();
  traj->k = k;
  traj->dt = h;
  const auto record = [&](const DensityState& s, int step) {
    const double t = sign * step * h;
    DensityState stored = options.backward ? reversed(s) : s;
    traj->diagnostics.push_back(diagnose(stored, t, options.cg_diagnostics, options.cg_tolerance));
    if (options.on_record) options.on_record(stored, traj->diagnostics.back());
    traj->times.push_back(t);
    traj->states.push_back(std::move(stored));
  };
  record(state, 0);
  for (int step = 1; step <= steps; ++step) {
    try {
      state = step_rk4(state, h);
    } catch (const StepAborted& e) {
      const double t = sign * step * h;
      std::ostringstream os;
      os << e.what() << " (step ending at t = " << t << ")";
      if (options.backward) reverse_in_time(*traj);
      throw ShootAborted(os.str(), t, traj);
    }
    if (step % stride == 0 || step == steps) record(state, step);
  }
  if (options.backward) reverse_in_time(*traj);
  return std::move(*traj);
}

DensityState flow(const DensityState& initial, double T, double dt) {
  const int steps = step_count(T, dt);
  const double h = T / steps;
  DensityState state = initial;
  for (int step = 1; step <= steps; ++step) {
    try {
      state = step_rk4(state, h);
    } catch (const StepAborted& e) {
      throw StepAborted(e.what(), step * h);
    }
  }
  return state;
}

}  // namespace geodens
