#include "geodens/epdiff.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geodens/spectral.hpp"
#include "tables.hpp"

namespace geodens {

namespace {

int step_count(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  const double ratio = T / dt;
  if (ratio > static_cast<double>(std::numeric_limits<int>::max() / 2)) {
    throw std::invalid_argument("T/dt is too large");
  }
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
}

// Grid coordinates displaced by `disp`, one array per axis (y is empty in 1-D).
std::array<std::vector<double>, 2> displaced_points(const VectorField& disp) {
  const Grid& grid = disp.grid();
  std::array<std::vector<double>, 2> pts;
  for (int j = 0; j < grid.dim(); ++j) {
    pts[j].resize(grid.size());
    const auto d = disp.component(j);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      pts[j][i] = grid.coordinate(grid.multi_index(i)[j]) + d[i];
    }
  }
  return pts;
}

std::vector<double> evaluate(const ScalarField& f, const std::array<std::vector<double>, 2>& pts) {
  return evaluate_at(f.grid(), forward(f), pts[0], pts[1]);
}

VectorField evaluate(const VectorField& v, const std::array<std::vector<double>, 2>& pts) {
  std::vector<Spectrum> spectra;
  for (int j = 0; j < v.dim(); ++j) spectra.push_back(forward(v.grid(), v.component(j)));
  return VectorField(v.grid(), evaluate_many(v.grid(), spectra, pts[0], pts[1]));
}

// Columns ∂_j v_i of the spectral Jacobian, indexed [i][j].
std::vector<std::vector<std::vector<double>>> jacobian_entries(const VectorField& v, bool truncate) {
  const Grid& grid = v.grid();
  std::vector<std::vector<std::vector<double>>> d(grid.dim());
  for (int i = 0; i < grid.dim(); ++i) {
    const Spectrum s = forward(grid, v.component(i));
    for (int j = 0; j < grid.dim(); ++j) {
      d[i].push_back(inverse(grid, detail::derivative(grid, s, j, truncate)));
    }
  }
  return d;
}

void require_positive_jacobian(const VectorField& disp, const char* what) {
  const double m = jacobian_determinant(disp).min();
  if (!(m > 0.0)) {
    std::ostringstream os;
    os << what << ": map is not a diffeomorphism on the grid (min det = " << m << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

DiffeoState identity_diffeo(const VectorField& u, int k) {
  if (k < -1) throw std::invalid_argument("metric order k must be >= -1");
  return DiffeoState{VectorField(u.grid()), u, k};
}

VectorField epdiff_rhs(const VectorField& u, int k) {
  const Grid& grid = u.grid();
  const int d = grid.dim();
  const auto& symbol = detail::inertia_power(grid, k + 1);
  const auto& inv_symbol = detail::inertia_power(grid, -(k + 1));

  std::vector<std::vector<double>> ub(d);
  std::vector<std::vector<double>> m(d);
  std::vector<std::vector<std::vector<double>>> du(d);
  std::vector<std::vector<std::vector<double>>> dm(d);
  for (int i = 0; i < d; ++i) {
    Spectrum s = forward(grid, u.component(i));
    detail::dealias_in_place(grid, s);
    Spectrum ms = s;
    for (std::size_t q = 0; q < ms.size(); ++q) ms[q] *= symbol[q];
    for (int j = 0; j < d; ++j) {
      du[i].push_back(inverse(grid, detail::derivative(grid, s, j, true)));
      dm[i].push_back(inverse(grid, detail::derivative(grid, ms, j, true)));
    }
    ub[i] = inverse(grid, std::move(s));
    m[i] = inverse(grid, std::move(ms));
  }

  std::vector<std::vector<double>> out(d);
  std::vector<double> b(grid.size());
  for (int i = 0; i < d; ++i) {
    for (std::size_t q = 0; q < grid.size(); ++q) {
      double div = 0.0;
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        div += du[j][j][q];
        acc += ub[j][q] * dm[i][j][q] + m[j][q] * du[j][i][q];
      }
      b[q] = acc + div * m[i][q];
    }
    Spectrum bs = forward(grid, b);
    detail::dealias_in_place(grid, bs);
    for (std::size_t q = 0; q < bs.size(); ++q) bs[q] *= -inv_symbol[q];
    out[i] = inverse(grid, std::move(bs));
  }
  return VectorField(grid, std::move(out));
}

double epdiff_energy(const VectorField& u, int k) { return 0.5 * l2_inner(apply_A(k, u), u); }

VectorField compose(const VectorField& v, const VectorField& phi_disp) {
  require_same_grid(v.grid(), phi_disp.grid(), "compose");
  return evaluate(v, displaced_points(phi_disp));
}

ScalarField compose(const ScalarField& f, const VectorField& phi_disp) {
  require_same_grid(f.grid(), phi_disp.grid(), "compose");
  return ScalarField(f.grid(), evaluate(f, displaced_points(phi_disp)));
}

ScalarField jacobian_determinant(const VectorField& disp) {
  const Grid& grid = disp.grid();
  const auto d = jacobian_entries(disp, false);
  ScalarField det(grid);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    if (grid.dim() == 1) {
      det[q] = 1.0 + d[0][0][q];
    } else {
      det[q] = (1.0 + d[0][0][q]) * (1.0 + d[1][1][q]) - d[0][1][q] * d[1][0][q];
    }
  }
  return det;
}

VectorField invert_map(const VectorField& phi_disp, double tol, int max_iterations) {
  const Grid& grid = phi_disp.grid();
  const int d = grid.dim();
  std::vector<Spectrum> disp_hat;
  for (int j = 0; j < d; ++j) disp_hat.push_back(forward(grid, phi_disp.component(j)));

  // y(x) = x + e(x) with y + disp(y) = x.
  VectorField e(grid);
  std::array<std::vector<double>, 2> y;
  for (int it = 0; it <= max_iterations; ++it) {
    for (int j = 0; j < d; ++j) {
      y[j].resize(grid.size());
      const auto ej = e.component(j);
      for (std::size_t q = 0; q < grid.size(); ++q) {
        y[j][q] = grid.coordinate(grid.multi_index(q)[j]) + ej[q];
      }
    }
    double residual = 0.0;
    std::vector<std::vector<double>> r(d);
    const auto displaced = evaluate_many(grid, disp_hat, y[0], y[1]);
    for (int j = 0; j < d; ++j) {
      const std::vector<double>& dy = displaced[static_cast<std::size_t>(j)];
      r[j].resize(grid.size());
      const auto ej = e.component(j);
      for (std::size_t q = 0; q < grid.size(); ++q) {
        r[j][q] = ej[q] + dy[q];
        residual = std::max(residual, std::abs(r[j][q]));
      }
    }
    if (residual <= tol) return e;
    if (it == max_iterations) {
      std::ostringstream os;
      os << "invert_map: fixed point did not converge (residual " << residual << " after "
         << max_iterations << " iterations)";
      throw std::runtime_error(os.str());
    }
    for (int j = 0; j < d; ++j) {
      auto ej = e.component(j);
      for (std::size_t q = 0; q < grid.size(); ++q) ej[q] -= 0.5 * r[j][q];
    }
  }
  return e;
}

LeftProjection project_left_detailed(const DiffeoState& phi) {
  require_positive_jacobian(phi.phi_disp, "project_left");
  ScalarField jac = jacobian_determinant(invert_map(phi.phi_disp));
  const double mass = jac.mean();
  LeftProjection out{std::move(jac), std::abs(mass - 1.0)};
  out.rho *= 1.0 / mass;
  return out;
}

ScalarField project_left(const DiffeoState& phi) { return project_left_detailed(phi).rho; }

HorizontalLift horizontal_lift(const ScalarField& rho, const ScalarField& p, const DiffeoState& phi) {
  require_same_grid(rho.grid(), phi.phi_disp.grid(), "horizontal_lift");
  const ScalarField projected = project_left(phi);
  const double mismatch = (rho - projected).max_abs();
  if (mismatch > 1e-6) {
    std::ostringstream os;
    os << "horizontal_lift: density differs from the projection of phi by " << mismatch;
    throw std::invalid_argument(os.str());
  }
  VectorField eulerian = horizontal_velocity(DensityState{rho, project_mean_zero(p), phi.k});
  VectorField lagrangian = compose(eulerian, phi.phi_disp);
  return {std::move(eulerian), std::move(lagrangian)};
}

double horizontality_defect(const VectorField& u, const ScalarField& rho, int k) {
  require_same_grid(u.grid(), rho.grid(), "horizontality_defect");
  if (!(rho.min() > 0.0)) throw std::domain_error("horizontality_defect: density must be positive");
  const Grid& grid = u.grid();
  const int d = grid.dim();
  const VectorField m = apply_A(k, u);
  std::vector<Spectrum> w(d);
  std::vector<double> buf(grid.size());
  for (int j = 0; j < d; ++j) {
    const auto mj = m.component(j);
    for (std::size_t q = 0; q < grid.size(); ++q) buf[q] = mj[q] / rho[q];
    w[j] = forward(grid, buf);
  }
  // Leray projection; the constant mode is harmonic and belongs to the
  // divergence-free part.
  const auto& t = detail::tables(grid);
  for (std::size_t q = 1; q < grid.size(); ++q) {
    std::complex<double> dot = 0.0;
    for (int j = 0; j < d; ++j) dot += t.wave[j][q] * w[j][q];
    for (int j = 0; j < d; ++j) w[j][q] -= t.wave[j][q] * dot / t.wave_squared[q];
  }
  double sq = 0.0;
  for (int j = 0; j < d; ++j) {
    const ScalarField part(grid, inverse(grid, std::move(w[j])));
    sq += l2_inner(part, part);
  }
  return std::sqrt(sq);
}

double lagrangian_density_defect(const VectorField& phi_disp, const ScalarField& rho) {
  const ScalarField pulled = compose(rho, phi_disp);
  const ScalarField det = jacobian_determinant(phi_disp);
  double worst = 0.0;
  for (std::size_t q = 0; q < det.size(); ++q) {
    worst = std::max(worst, std::abs(pulled[q] * det[q] - 1.0));
  }
  return worst;
}

namespace {

VectorField preimage_1d(const ScalarField& rho0) {
  const Grid& grid = rho0.grid();
  const auto& t = detail::tables(grid);
  // ψ(x) = x + G(x), G' = ρ₀ - 1, is the inverse of the sought map.
  const Spectrum r = forward(rho0);
  Spectrum g(r.size());
  for (std::size_t q = 1; q < r.size(); ++q) {
    const double xi = t.wave[0][q];
    if (static_cast<int>(q) == grid.n() / 2) continue;
    g[q] = r[q] / std::complex<double>(0.0, xi);
  }
  std::vector<double> disp(grid.size());
  std::vector<double> x(1);
  std::vector<double> none;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const double y = grid.coordinate(static_cast<int>(q));
    x[0] = y;
    for (int it = 0; it < 100; ++it) {
      const double f = x[0] + evaluate_at(grid, g, x, none)[0] - y;
      const double fp = evaluate_at(grid, r, x, none)[0];
      const double step = f / fp;
      x[0] -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x[0]))) break;
    }
    disp[q] = x[0] - y;
  }
  return VectorField(grid, {std::move(disp)});
}

VectorField preimage_moser(const ScalarField& rho0, int steps) {
  const Grid& grid = rho0.grid();
  const auto& t = detail::tables(grid);
  // Δf = 1 - ρ₀ and v_s = ∇f / ((1-s) + s ρ₀) transports μ to ρ₀ μ over s ∈ [0,1].
  Spectrum f = forward(rho0);
  f[0] = 0.0;
  for (std::size_t q = 1; q < f.size(); ++q) f[q] /= t.wave_squared[q];
  const ScalarField fs = inverse_field(grid, f, true);
  const VectorField grad_f = gradient(fs);
  std::array<Spectrum, 2> gf_hat;
  for (int j = 0; j < 2; ++j) gf_hat[j] = forward(grid, grad_f.component(j));
  const std::array<Spectrum, 3> spectra{gf_hat[0], gf_hat[1], forward(rho0)};

  const auto velocity = [&](double s, const std::array<std::vector<double>, 2>& pts) {
    std::array<std::vector<double>, 2> v;
    auto values = evaluate_many(grid, spectra, pts[0], pts[1]);
    const std::vector<double>& rho_at = values[2];
    for (int j = 0; j < 2; ++j) {
      v[j] = std::move(values[static_cast<std::size_t>(j)]);
      for (std::size_t q = 0; q < v[j].size(); ++q) v[j][q] /= (1.0 - s) + s * rho_at[q];
    }
    return v;
  };
  std::array<std::vector<double>, 2> x;
  for (int j = 0; j < 2; ++j) {
    x[j].resize(grid.size());
    for (std::size_t q = 0; q < grid.size(); ++q) x[j][q] = grid.coordinate(grid.multi_index(q)[j]);
  }
  const double h = 1.0 / steps;
  const auto offset = [&](const std::array<std::vector<double>, 2>& k, double a) {
    auto y = x;
    for (int j = 0; j < 2; ++j) {
      for (std::size_t q = 0; q < y[j].size(); ++q) y[j][q] += a * k[j][q];
    }
    return y;
  };
  for (int s = 0; s < steps; ++s) {
    const double s0 = s * h;
    const auto k1 = velocity(s0, x);
    const auto k2 = velocity(s0 + 0.5 * h, offset(k1, 0.5 * h));
    const auto k3 = velocity(s0 + 0.5 * h, offset(k2, 0.5 * h));
    const auto k4 = velocity(s0 + h, offset(k3, h));
    for (int j = 0; j < 2; ++j) {
      for (std::size_t q = 0; q < grid.size(); ++q) {
        x[j][q] += h / 6.0 * (k1[j][q] + 2.0 * k2[j][q] + 2.0 * k3[j][q] + k4[j][q]);
      }
    }
  }
  std::vector<std::vector<double>> disp(2, std::vector<double>(grid.size()));
  for (int j = 0; j < 2; ++j) {
    for (std::size_t q = 0; q < grid.size(); ++q) {
      disp[j][q] = x[j][q] - grid.coordinate(grid.multi_index(q)[j]);
    }
  }
  return VectorField(grid, std::move(disp));
}

}  // namespace

VectorField density_preimage(const ScalarField& rho0, int moser_steps) {
  if (!(rho0.min() > 0.0)) throw std::invalid_argument("density_preimage: density must be positive");
  if (std::abs(rho0.mean() - 1.0) > 1e-10) {
    throw std::invalid_argument("density_preimage: density must have unit mass");
  }
  if (rho0.grid().dim() == 1) return preimage_1d(rho0);
  if (moser_steps < 1) throw std::invalid_argument("density_preimage: moser_steps must be positive");
  return preimage_moser(rho0, moser_steps);
}

EpdiffRun integrate_epdiff(const DiffeoState& initial, double T, double dt, int save_every) {
  require_same_grid(initial.phi_disp.grid(), initial.u.grid(), "integrate_epdiff");
  const int steps = step_count(T, dt);
  const double h = T / steps;
  const int stride = std::max(1, save_every);
  const int k = initial.k;

  struct Rate {
    VectorField du;
    VectorField dphi;
  };
  const auto rate = [k](const VectorField& disp, const VectorField& u) {
    return Rate{epdiff_rhs(u, k), compose(u, disp)};
  };

  EpdiffRun run;
  run.times.push_back(0.0);
  run.states.push_back(initial);
  DiffeoState state = initial;
  for (int step = 1; step <= steps; ++step) {
    const auto shifted = [&](const Rate& r, double a) {
      VectorField disp = state.phi_disp;
      VectorField u = state.u;
      disp.axpy(a, r.dphi);
      u.axpy(a, r.du);
      return std::pair{std::move(disp), std::move(u)};
    };
    const Rate k1 = rate(state.phi_disp, state.u);
    auto s2 = shifted(k1, 0.5 * h);
    const Rate k2 = rate(s2.first, s2.second);
    auto s3 = shifted(k2, 0.5 * h);
    const Rate k3 = rate(s3.first, s3.second);
    auto s4 = shifted(k3, h);
    const Rate k4 = rate(s4.first, s4.second);
    for (int j = 0; j < state.u.dim(); ++j) {
      auto u = state.u.component(j);
      auto p = state.phi_disp.component(j);
      for (std::size_t q = 0; q < u.size(); ++q) {
        u[q] += h / 6.0 * (k1.du.component(j)[q] + k4.du.component(j)[q]) +
                h / 3.0 * (k2.du.component(j)[q] + k3.du.component(j)[q]);
        p[q] += h / 6.0 * (k1.dphi.component(j)[q] + k4.dphi.component(j)[q]) +
                h / 3.0 * (k2.dphi.component(j)[q] + k3.dphi.component(j)[q]);
      }
    }
    const double t = step * h;
    const double min_det = jacobian_determinant(state.phi_disp).min();
    if (!(min_det > 0.0)) {
      std::ostringstream os;
      os << "Jacobian determinant lost positivity (min " << min_det << ") at t = " << t;
      throw EpdiffAborted(os.str(), t);
    }
    if (step % stride == 0 || step == steps) {
      run.times.push_back(t);
      run.states.push_back(state);
    }
  }
  return run;
}

namespace {

struct EpdiffSide {
  EpdiffRun run;
  std::vector<ScalarField> projected;
  std::vector<double> mass_errors;
  std::vector<double> defects;
  double energy_drift = 0.0;
};

EpdiffSide run_epdiff_side(const ScalarField& rho0, const ScalarField& p0, int k, double T,
                           double dt, int stride, int refinement) {
  const Grid& coarse = rho0.grid();
  const Grid fine(coarse.dim(), coarse.n() * refinement);
  const ScalarField rho_f = resample(rho0, fine);
  const ScalarField p_f = resample(p0, fine);
  DiffeoState phi0{density_preimage(rho_f), VectorField(fine), k};
  phi0.u = horizontal_lift(rho_f, p_f, phi0).eulerian;

  EpdiffSide side;
  side.run = integrate_epdiff(phi0, T, dt, stride);
  const double e0 = epdiff_energy(phi0.u, k);
  for (const DiffeoState& s : side.run.states) {
    LeftProjection proj = project_left_detailed(s);
    side.mass_errors.push_back(proj.mass_error);
    side.defects.push_back(horizontality_defect(s.u, proj.rho, k));
    side.projected.push_back(resample(proj.rho, coarse));
    if (e0 > 0.0) {
      side.energy_drift = std::max(side.energy_drift, std::abs(epdiff_energy(s.u, k) - e0) / e0);
    }
  }
  return side;
}

}  // namespace

CrossValidationReport cross_validate(const ScalarField& rho0, const ScalarField& p0, int k, double T,
                                     double dt, const CrossValidationOptions& options) {
  if (k < 0) throw std::invalid_argument("cross_validate requires k >= 0");
  if (options.refinement < 1 || (options.refinement & (options.refinement - 1)) != 0) {
    throw std::invalid_argument("cross_validate: refinement must be a power of two");
  }
  require_same_grid(rho0.grid(), p0.grid(), "cross_validate");
  const int steps = step_count(T, dt);
  const int stride = std::max(1, steps / std::max(1, options.snapshots));

  ShootOptions shoot_options;
  shoot_options.save_every = stride;
  shoot_options.cg_diagnostics = false;
  const auto density_side = [&] { return shoot(rho0, p0, k, T, dt, shoot_options); };
  const auto epdiff_side = [&] {
    return run_epdiff_side(rho0, p0, k, T, dt, stride, options.refinement);
  };

  Trajectory traj;
  EpdiffSide side;
  if (options.concurrent) {
    auto future = std::async(std::launch::async, epdiff_side);
    traj = density_side();
    side = future.get();
  } else {
    traj = density_side();
    side = epdiff_side();
  }

  CrossValidationReport report;
  report.dim = rho0.grid().dim();
  report.n = rho0.grid().n();
  report.k = k;
  report.dt = traj.dt;
  report.T = T;
  report.refinement = options.refinement;
  const std::size_t count = std::min(traj.states.size(), side.projected.size());
  const double e0 = traj.diagnostics.front().energy;
  for (std::size_t i = 0; i < count; ++i) {
    const double gap = l2_distance(traj.states[i].rho, side.projected[i]);
    report.snapshot_times.push_back(traj.times[i]);
    report.discrepancies.push_back(gap);
    report.defects.push_back(side.defects[i]);
    report.l2_discrepancy_max = std::max(report.l2_discrepancy_max, gap);
    report.horizontality_defect_max = std::max(report.horizontality_defect_max, side.defects[i]);
    report.projection_mass_error_max = std::max(report.projection_mass_error_max, side.mass_errors[i]);
    if (e0 > 0.0) {
      report.energy_drift_density =
          std::max(report.energy_drift_density, std::abs(traj.diagnostics[i].energy - e0) / e0);
    }
  }
  report.l2_discrepancy_final = report.discrepancies.back();
  report.energy_drift_epdiff = side.energy_drift;
  report.rho_density_final = traj.states[count - 1].rho.data();
  report.rho_epdiff_final = side.projected[count - 1].data();
  return report;
}

std::string to_json(const CrossValidationReport& report) {
  nlohmann::ordered_json j;
  j["grid"] = {{"dim", report.dim}, {"n", report.n}};
  j["k"] = report.k;
  j["dt"] = report.dt;
  j["T"] = report.T;
  j["refinement"] = report.refinement;
  j["l2_discrepancy_final"] = report.l2_discrepancy_final;
  j["l2_discrepancy_max"] = report.l2_discrepancy_max;
  j["horizontality_defect_max"] = report.horizontality_defect_max;
  j["energy_drift_density"] = report.energy_drift_density;
  j["energy_drift_epdiff"] = report.energy_drift_epdiff;
  j["projection_mass_error_max"] = report.projection_mass_error_max;
  j["snapshot_times"] = report.snapshot_times;
  j["discrepancies"] = report.discrepancies;
  j["horizontality_defects"] = report.defects;
  return j.dump(2);
}

}  // namespace geodens
