#include "geodens_app/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "geodens/density_geodesic.hpp"
#include "geodens/epdiff.hpp"
#include "geodens/field_io.hpp"
#include "geodens/matching.hpp"
#include "geodens/spectral.hpp"
#include "geodens_app/format.hpp"
#include "geodens_app/run.hpp"

namespace geodens::app {

namespace fs = std::filesystem;

namespace {

constexpr double kOrder = 3.5;

class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [-1, 1) from the top 53 bits.
  double symmetric() { return 2.0 * static_cast<double>(engine_() >> 11) * 0x1.0p-53 - 1.0; }

 private:
  std::mt19937_64 engine_;
};

/// Real part of a one-sided random spectrum supported on max_j |ξ_j| ≤ band,
/// with coefficients decaying like 1/(1 + |ξ|²).
ScalarField random_field(const Grid& grid, Random& rng, int band, double amplitude) {
  Spectrum s(grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const auto xi = grid.wavevector(f);
    if (std::max(std::abs(xi[0]), std::abs(xi[1])) > band) continue;
    if (xi[0] == 0 && xi[1] == 0) continue;
    const double scale = amplitude / (1.0 + grid.wavenumber_squared(f));
    s[f] = {scale * rng.symmetric(), scale * rng.symmetric()};
  }
  return inverse_field(grid, std::move(s));
}

ScalarField random_mean_zero(const Grid& grid, Random& rng, int band, double amplitude) {
  return project_mean_zero(random_field(grid, rng, band, amplitude));
}

ScalarField random_density(const Grid& grid, Random& rng, int band) {
  ScalarField f = random_field(grid, rng, band, 1.0);
  f *= 0.3 / std::max(f.max_abs(), 1e-300);
  for (double& v : f.values()) v += 1.0;
  f *= 1.0 / f.mean();
  return f;
}

/// 1 + a cos(x) (times cos(y) in 2-D), unit mass.
ScalarField bump_density(const Grid& grid, double a) {
  const bool two = grid.dim() == 2;
  ScalarField f = ScalarField::sample(grid, [&](double x, double y) {
    return 1.0 + a * std::cos(x) * (two ? std::cos(y) : 1.0);
  });
  f *= 1.0 / f.mean();
  return f;
}

ScalarField sine_momentum(const Grid& grid, double a) {
  const bool two = grid.dim() == 2;
  return project_mean_zero(
      ScalarField::sample(grid, [&](double x, double y) { return a * std::sin(x) * (two ? std::cos(y) : 1.0); }));
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (int j = 0; j < a.dim(); ++j) m = std::max(m, max_abs_diff(a.component(j), b.component(j)));
  return m;
}

std::string fmt(double v) { return format_double(v); }

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + fmt(values[i]);
  return out;
}

class Collector {
 public:
  explicit Collector(std::vector<InvariantResult>& out) : out_(out) {}

  void set_module(std::string module) { module_ = std::move(module); }

  /// Passes when value ≤ threshold.
  void at_most(const std::string& name, double value, double threshold, std::string detail = {}) {
    add(name, value <= threshold, value, threshold, std::move(detail));
  }

  void add(const std::string& name, bool pass, double value, double threshold, std::string detail) {
    out_.push_back({module_, name, pass, value, threshold, std::move(detail)});
  }

  /// Convergence under dt-halving: the last two errors must shrink at the
  /// target order unless the finest one already sits below `floor`.
  void order(const std::string& name, const std::vector<double>& errors, double floor, const std::string& what) {
    const double e1 = errors[errors.size() - 2];
    const double e2 = errors.back();
    const double observed = (e1 > 0.0 && e2 > 0.0) ? std::log2(e1 / e2) : std::numeric_limits<double>::quiet_NaN();
    const bool saturated = e2 <= floor;
    std::string detail = what + " under dt-halving: " + join(errors);
    if (saturated) detail += "; finest value below the roundoff floor " + fmt(floor);
    add(name, saturated || observed >= kOrder, observed, kOrder, detail);
  }

  /// Records a failure for an invariant whose check threw.
  void guard(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, std::numeric_limits<double>::quiet_NaN(), 0.0, std::string("exception: ") + e.what());
    }
  }

 private:
  std::vector<InvariantResult>& out_;
  std::string module_;
};

// ---------------------------------------------------------------- spectral-core

void spectral_suite(Collector& c, const Grid& grid, int k, Random& rng) {
  c.set_module("spectral-core");
  const int band = grid.dealias_cutoff();

  c.guard("round-trip", [&] {
    ScalarField f(grid);
    for (double& v : f.values()) v = rng.symmetric();
    const std::vector<double> back = inverse(grid, forward(f));
    c.at_most("round-trip", max_abs_diff(back, f.values()) / f.max_abs(), 1e-12,
              "relative max-norm error of physical -> spectral -> physical on white noise");
  });

  c.guard("gradient-divergence-skew-adjoint", [&] {
    const ScalarField f = random_field(grid, rng, band, 1.0);
    std::vector<ScalarField> comps;
    for (int j = 0; j < grid.dim(); ++j) comps.push_back(random_field(grid, rng, band, 1.0));
    const VectorField v = VectorField::from_scalars(comps);
    const VectorField g = gradient(f);
    double sum = l2_inner(divergence(v), f);
    for (int j = 0; j < grid.dim(); ++j) sum += l2_inner(v.scalar(j), g.scalar(j));
    c.at_most("gradient-divergence-skew-adjoint", std::abs(sum), 1e-10, "|<div v, f> + sum_j <v_j, d_j f>|");
  });

  c.guard("inertia-self-adjoint-positive", [&] {
    const FourierMultiplier A = inertia_symbol(grid, k);
    const ScalarField f = random_field(grid, rng, band, 1.0);
    const ScalarField g = random_field(grid, rng, band, 1.0);
    const ScalarField Af = apply_multiplier(A, f);
    const ScalarField Ag = apply_multiplier(A, g);
    const double scale = std::max(l2_norm(Af) * l2_norm(g), l2_norm(Ag) * l2_norm(f));
    const double asym = std::abs(l2_inner(Af, g) - l2_inner(f, Ag)) / scale;
    const double deficit = std::max(0.0, l2_inner(f, f) - l2_inner(Af, f)) / l2_inner(Af, f);
    c.at_most("inertia-self-adjoint-positive", std::max(asym, deficit), 1e-10,
              "relative asymmetry " + fmt(asym) + ", relative shortfall of <Af,f> below <f,f> " + fmt(deficit));
  });

  c.guard("translation-equivariance", [&] {
    const ScalarField f = random_field(grid, rng, band, 1.0);
    const std::array<int, 2> offset{3, grid.dim() == 2 ? 5 : 0};
    const FourierMultiplier A = inertia_symbol(grid, k);
    double err = max_abs_diff(apply_multiplier(A, shift_by_grid(f, offset)).values(),
                              shift_by_grid(apply_multiplier(A, f), offset).values()) /
                 apply_multiplier(A, f).max_abs();
    err = std::max(err, max_abs_diff(gradient(shift_by_grid(f, offset)), shift_by_grid(gradient(f), offset)) /
                            gradient(f).max_abs());
    c.at_most("translation-equivariance", err, 1e-12,
              "relative max-norm gap between shift-then-apply and apply-then-shift (inertia, gradient)");
  });
}

// ------------------------------------------------------------- density-geodesic

std::vector<double> energy_drifts(const Grid& grid, int k, double T, const std::vector<double>& steps) {
  std::vector<double> drifts;
  ShootOptions options;
  options.cg_diagnostics = false;
  for (double dt : steps) {
    const Trajectory traj = shoot(bump_density(grid, 0.5), sine_momentum(grid, 0.2), k, T, dt, options);
    const double e0 = traj.diagnostics.front().energy;
    double drift = 0.0;
    for (const auto& d : traj.diagnostics) drift = std::max(drift, std::abs(d.energy - e0) / e0);
    drifts.push_back(drift);
  }
  return drifts;
}

void density_suite(Collector& c, const Grid& grid, int k, Random& rng) {
  c.set_module("density-geodesic");
  const int band = std::max(2, grid.dealias_cutoff() / 2);

  c.guard("mass-conservation", [&] {
    ShootOptions options;
    options.cg_diagnostics = false;
    const double T = 1.0;
    const Trajectory traj =
        shoot(random_density(grid, rng, 3), random_mean_zero(grid, rng, 3, 0.2), k, T, 0.02, options);
    double drift = 0.0;
    for (const auto& d : traj.diagnostics) drift = std::max(drift, std::abs(d.mass - traj.diagnostics[0].mass));
    c.at_most("mass-conservation", drift / T, 1e-10, "max |mass(t) - mass(0)| per unit time");
  });

  c.guard("energy-conservation", [&] {
    // Outside the global regime the long run may legitimately lose positivity.
    const double T = global_existence_guaranteed(k, grid.dim()) ? 5.0 : 1.0;
    c.order("energy-conservation", energy_drifts(grid, k, T, {0.125, 0.0625, 0.03125}), 1e-13,
            "max relative energy drift over T = " + fmt(T));
  });

  c.guard("L-rho-self-adjoint-positive", [&] {
    const ScalarField rho = random_density(grid, rng, band);
    const ScalarField p = random_mean_zero(grid, rng, band, 1.0);
    const ScalarField q = random_mean_zero(grid, rng, band, 1.0);
    const double asym = std::abs(l2_inner(q, apply_L_rho(rho, p, k)) - l2_inner(p, apply_L_rho(rho, q, k)));
    const double quad = l2_inner(p, apply_L_rho(rho, p, k));
    c.add("L-rho-self-adjoint-positive", asym <= 1e-10 && quad > 0.0, asym, 1e-10,
          "|<q, L p> - <p, L q>| = " + fmt(asym) + ", <p, L p> = " + fmt(quad));
  });

  c.guard("solve-inverts-apply", [&] {
    const ScalarField rho = random_density(grid, rng, band);
    const ScalarField p = random_mean_zero(grid, rng, band, 1.0);
    const LinearSolveResult r = solve_L_rho(rho, apply_L_rho(rho, p, k), k);
    c.at_most("solve-inverts-apply", l2_distance(r.p, p) / l2_norm(p), 1e-7,
              "relative L2 error of solve(apply(p)), " + std::to_string(r.iterations) + " CG iterations");
  });

  c.guard("hamilton-jacobi-consistency", [&] {
    const ScalarField one = ScalarField::constant(grid, 1.0);
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
      const ScalarField p = random_mean_zero(grid, rng, std::max(1, grid.n() / 6), 1.0);
      const HamiltonianRhs rhs = hamiltonian_rhs(make_density_state(one, p, -1));
      const VectorField g = gradient(p);
      ScalarField sq(grid);
      for (int j = 0; j < grid.dim(); ++j) sq += pointwise_product(g.scalar(j), g.scalar(j));
      worst = std::max(worst, max_abs_diff(rhs.pdot.values(), project_mean_zero(-sq).values()));
    }
    c.at_most("hamilton-jacobi-consistency", worst, 1e-10,
              "max |pdot + P|grad p|^2| at rho = 1, k = -1 over 20 random band-limited p");
  });

  c.guard("time-reversibility", [&] {
    const ScalarField rho0 = bump_density(grid, 0.3);
    const ScalarField p0 = sine_momentum(grid, 0.2);
    std::vector<double> errors;
    for (double dt : {0.2, 0.1, 0.05}) {
      const DensityState end = flow(make_density_state(rho0, p0, k), 1.0, dt);
      const DensityState back = flow(make_density_state(end.rho, -end.p, k), 1.0, dt);
      errors.push_back(l2_distance(back.rho, rho0));
    }
    c.order("time-reversibility", errors, 1e-12, "||rho_back - rho0||");
  });

  c.guard("equilibria", [&] {
    const ScalarField rho0 = random_density(grid, rng, band);
    const ScalarField p0 = ScalarField::constant(grid, 0.7);
    ShootOptions options;
    options.cg_diagnostics = false;
    const Trajectory traj = shoot(rho0, p0, k, 1.0, 0.1, options);
    double gap = 0.0;
    for (const DensityState& s : traj.states) {
      gap = std::max(gap, max_abs_diff(s.rho.values(), rho0.values()));
      gap = std::max(gap, s.p.max_abs());
    }
    c.at_most("equilibria", gap, 0.0, "max deviation of (rho, p) from the constant-momentum start");
  });
}

// ------------------------------------------------------------------- epdiff

struct CoupledEnd {
  double energy_drift;
  double defect_max;
  /// max |q(T) - q(0)| for q = ρ∘φ · det Dφ, ρ from the density geodesic.
  double lagrangian_change;
};

ScalarField lagrangian_density(const ScalarField& rho, const VectorField& phi_disp) {
  return pointwise_product(compose(rho, phi_disp), jacobian_determinant(phi_disp));
}

/// Horizontal EPDiff geodesic through a preimage of rho0 on the same grid,
/// alongside the density geodesic with the same data.
CoupledEnd coupled_run(const ScalarField& rho0, const ScalarField& p0, int k, double T, double dt) {
  DiffeoState phi0{density_preimage(rho0), VectorField(rho0.grid()), k};
  phi0.u = horizontal_lift(rho0, p0, phi0).eulerian;
  const EpdiffRun run = integrate_epdiff(phi0, T, dt);
  const double e0 = epdiff_energy(phi0.u, k);
  double drift = 0.0;
  double defect = horizontality_defect(phi0.u, rho0, k);
  for (const DiffeoState& s : run.states) {
    drift = std::max(drift, std::abs(epdiff_energy(s.u, k) - e0) / e0);
    defect = std::max(defect, horizontality_defect(s.u, project_left(s), k));
  }
  const DensityState end = flow(make_density_state(rho0, p0, k), T, dt);
  const double change = max_abs_diff(lagrangian_density(end.rho, run.states.back().phi_disp).values(),
                                     lagrangian_density(rho0, phi0.phi_disp).values());
  return {drift, defect, change};
}

void epdiff_suite(Collector& c, const Grid& grid, int k, Random& rng) {
  c.set_module("epdiff");
  // The 2-D preimage map is resolved to roundoff at n = 32 only for a milder bump.
  const ScalarField rho0 = bump_density(grid, grid.dim() == 1 ? 0.3 : 0.15);
  const ScalarField p0 = sine_momentum(grid, 0.2);
  const std::vector<double> steps{0.2, 0.1, 0.05};

  std::vector<CoupledEnd> ends;
  c.guard("epdiff-energy-conservation", [&] {
    for (double dt : steps) ends.push_back(coupled_run(rho0, p0, k, 1.0, dt));
    std::vector<double> drifts;
    for (const auto& e : ends) drifts.push_back(e.energy_drift);
    c.order("epdiff-energy-conservation", drifts, 1e-13, "max relative drift of <Au,u>/2 over T = 1");
  });

  c.guard("horizontality-preservation", [&] {
    if (ends.size() != steps.size()) throw std::runtime_error("coupled runs unavailable");
    std::vector<double> defects;
    for (const auto& e : ends) defects.push_back(e.defect_max);
    const bool pass = defects.back() <= 1e-10 || defects.back() < defects.front();
    c.add("horizontality-preservation", pass, defects.back(), 1e-10,
          "max Hodge defect along the lifted geodesic under dt-halving: " + join(defects) +
              "; passes when at the floor or shrinking");
  });

  c.guard("submersion", [&] {
    CrossValidationOptions options;
    options.refinement = grid.dim() == 1 ? 4 : 1;
    options.snapshots = 2;
    std::vector<double> gaps;
    for (double dt : steps) gaps.push_back(cross_validate(rho0, p0, k, 1.0, dt, options).l2_discrepancy_max);
    c.order("submersion", gaps, 1e-11, "max L2 gap between rho(t) and the projected EPDiff geodesic");
  });

  c.guard("project-left-identity-translation", [&] {
    const VectorField u = VectorField::from_scalars(std::vector<ScalarField>(
        grid.dim(), random_field(grid, rng, 3, 0.1)));
    const double id = max_abs_diff(project_left(identity_diffeo(u, k)).values(),
                                   ScalarField::constant(grid, 1.0).values());
    const double shift = rng.symmetric();
    const DiffeoState moved{VectorField::constant(grid, {shift, -0.5 * shift}), u, k};
    const double tr = max_abs_diff(project_left(moved).values(), ScalarField::constant(grid, 1.0).values());
    c.add("project-left-identity-translation", id == 0.0 && tr <= 1e-12, tr, 1e-12,
          "identity deviation " + fmt(id) + " (must be 0), translation deviation " + fmt(tr));
  });

  c.guard("lagrangian-eulerian-consistency", [&] {
    if (ends.size() != steps.size()) throw std::runtime_error("coupled runs unavailable");
    std::vector<double> defects;
    for (const auto& e : ends) defects.push_back(e.lagrangian_change);
    c.order("lagrangian-eulerian-consistency", defects, 1e-11,
            "max change of rho o phi * det D phi between t = 0 and T = 1, rho from the density geodesic");
  });
}

// ------------------------------------------------------------------ matching

void matching_suite(Collector& c, const Grid& grid, int k, Random& rng) {
  c.set_module("matching");
  const int n_modes = grid.dim() == 1 ? 4 : 2;
  MatchProblem base{bump_density(grid, 0.2), bump_density(grid, 0.2), k, 0.5, 0.05, n_modes, {}};
  base.opt.max_iterations = 6;
  const std::size_t count = coefficient_count(grid.dim(), n_modes);

  std::vector<double> target_coeffs(count);
  for (double& v : target_coeffs) v = 0.1 * rng.symmetric();

  c.guard("objective-nonnegative-zero", [&] {
    const double zero = objective(base, std::vector<double>(count, 0.0));
    double lowest = std::numeric_limits<double>::infinity();
    for (int draw = 0; draw < 4; ++draw) {
      std::vector<double> coeffs(count);
      for (double& v : coeffs) v = 0.2 * rng.symmetric();
      lowest = std::min(lowest, objective(base, coeffs));
    }
    c.add("objective-nonnegative-zero", zero == 0.0 && lowest >= 0.0, zero, 0.0,
          "objective at rho1 = rho0 with zero coefficients " + fmt(zero) + ", smallest random value " + fmt(lowest));
  });

  MatchProblem problem = base;
  {
    ShootOptions options;
    options.cg_diagnostics = false;
    const ScalarField p_star = momentum_from_coefficients(grid, n_modes, target_coeffs);
    problem.rho1 = shoot(problem.rho0, p_star, k, problem.T, problem.dt, options).states.back().rho;
  }

  std::optional<MatchResult> first;
  c.guard("accepted-step-monotone", [&] {
    first = solve_match(problem);
    double worst = 0.0;
    const auto& h = first->objective_history;
    for (std::size_t i = 1; i < h.size(); ++i) worst = std::max(worst, h[i] - h[i - 1]);
    c.at_most("accepted-step-monotone", worst, 0.0,
              "largest increase between accepted iterates over " + std::to_string(h.size()) + " entries");
  });

  c.guard("candidate-invariants", [&] {
    int violations = 0;
    int penalized = 0;
    for (double scale : {0.1, 1.0, 10.0, 100.0}) {
      std::vector<double> coeffs(count);
      for (double& v : coeffs) v = scale * rng.symmetric();
      const ObjectiveValue ov = evaluate_objective(problem, coeffs);
      try {
        const DensityState end = flow(
            make_density_state(problem.rho0, momentum_from_coefficients(grid, n_modes, coeffs), k), problem.T,
            problem.dt);
        const bool sound = end.rho.min() > 0.0 && std::abs(end.rho.mean() - 1.0) <= 1e-8;
        if (ov.penalized || !sound) ++violations;
      } catch (const StepAborted&) {
        if (!ov.penalized || ov.value < 1e6) ++violations;
        ++penalized;
      }
    }
    c.at_most("candidate-invariants", violations, 0.0,
              "candidates at scales 0.1..100: " + std::to_string(penalized) +
                  " aborted and penalized; every accepted endpoint positive with unit mass");
  });

  c.guard("determinism", [&] {
    if (!first) throw std::runtime_error("first optimizer run unavailable");
    const MatchResult second = solve_match(problem);
    bool same = second.coeffs == first->coeffs && second.objective_history == first->objective_history &&
                second.p0.data() == first->p0.data() && second.status == first->status;
    c.add("determinism", same, same ? 0.0 : 1.0, 0.0, "two solves of the same problem compared bitwise");
  });
}

// -------------------------------------------------------------------- cli-io

class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "geodens-validate-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("cannot create a temporary directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Relative paths of regular files below `dir`, sorted.
std::vector<fs::path> listing(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Names of files that differ between two artifact directories. The
/// status files are compared without wall_time; `skip` names are ignored.
std::vector<std::string> differing(const fs::path& a, const fs::path& b, const std::vector<std::string>& skip) {
  std::vector<std::string> out;
  const auto la = listing(a);
  const auto lb = listing(b);
  if (la != lb) return {"<file lists differ>"};
  for (const fs::path& rel : la) {
    if (std::find(skip.begin(), skip.end(), rel.string()) != skip.end()) continue;
    if (rel == "status.json") {
      auto ja = nlohmann::json::parse(slurp(a / rel));
      auto jb = nlohmann::json::parse(slurp(b / rel));
      ja.erase("wall_time");
      jb.erase("wall_time");
      if (ja != jb) out.push_back(rel.string());
    } else if (slurp(a / rel) != slurp(b / rel)) {
      out.push_back(rel.string());
    }
  }
  return out;
}

std::string describe(const std::vector<std::string>& names) {
  if (names.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out;
}

constexpr RunOptions kSilent{true, true};

void cli_suite(Collector& c, const RunConfig& config, const Grid& grid, Random& rng) {
  c.set_module("cli-io");

  c.guard("field-checksums", [&] {
    const ScalarField f = random_field(grid, rng, grid.dealias_cutoff(), 1.0);
    const std::string bytes = encode_field(f);
    const FieldFile back = decode_field(bytes);
    const bool round_trip = back.values == f.data();
    std::string corrupt = bytes;
    corrupt[corrupt.size() / 2 + corrupt.size() / 4] ^= 0x10;
    bool detected = false;
    try {
      (void)decode_field(corrupt);
    } catch (const FieldFormatError&) {
      detected = true;
    }
    c.add("field-checksums", round_trip && detected, round_trip && detected ? 0.0 : 1.0, 0.0,
          std::string("bitwise round trip ") + (round_trip ? "ok" : "FAILED") + ", corrupted payload " +
              (detected ? "rejected" : "ACCEPTED"));
  });

  TempDir tmp;
  const fs::path input = tmp.path() / "inputs" / "rho0.field";
  RunConfig shoot_config;
  shoot_config.command = Command::shoot;
  shoot_config.dim = config.dim;
  shoot_config.n = config.n;
  shoot_config.k = config.k;
  shoot_config.T = 0.1;
  shoot_config.dt = 0.02;
  shoot_config.seed = config.seed;
  shoot_config.rho0 = "file " + input.string();
  shoot_config.p0 = "sin 0.2 1";
  shoot_config.base_dir = tmp.path();
  shoot_config.output_dir = tmp.path() / "run";

  c.guard("reproducibility", [&] {
    fs::create_directories(input.parent_path());
    write_field(input, random_density(grid, rng, 3));
    const int first = run(shoot_config, kSilent);
    fs::rename(shoot_config.output_dir, tmp.path() / "run-first");
    const int second = run(shoot_config, kSilent);
    const auto diff = differing(tmp.path() / "run-first", shoot_config.output_dir, {});
    c.add("reproducibility", first == 0 && second == 0 && diff.empty(), static_cast<double>(diff.size()), 0.0,
          "shoot run twice with identical configuration; exit codes " + std::to_string(first) + ", " +
              std::to_string(second) + "; differing artifacts: " + describe(diff));
  });

  c.guard("self-describing-manifest", [&] {
    RunConfig replay = load_run_config(shoot_config.output_dir / "manifest.json", std::nullopt);
    const bool same_config = to_ini(replay) == to_ini(shoot_config);
    replay.output_dir = tmp.path() / "replay";
    const int code = run(replay, kSilent);
    const auto diff = differing(shoot_config.output_dir, replay.output_dir, {"manifest.json"});
    c.add("self-describing-manifest", same_config && code == 0 && diff.empty(), static_cast<double>(diff.size()),
          0.0,
          std::string("configuration recovered from the manifest ") + (same_config ? "matches" : "DIFFERS") +
              "; rerun exit code " + std::to_string(code) + "; differing artifacts: " + describe(diff));
  });

  c.guard("inputs-unmodified", [&] {
    const std::string before = git_blob_sha1_file(input);
    const auto stamp = fs::last_write_time(input);
    RunConfig again = shoot_config;
    again.output_dir = tmp.path() / "again";
    const int code = run(again, kSilent);
    const bool same = git_blob_sha1_file(input) == before && fs::last_write_time(input) == stamp;
    c.add("inputs-unmodified", same && code == 0, same ? 0.0 : 1.0, 0.0,
          std::string("input field hash and timestamp ") + (same ? "unchanged" : "CHANGED") + " after a run");
  });
}

nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

bool ValidationReport::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const InvariantResult& r) { return r.pass; });
}

ValidationReport run_validation(const RunConfig& config) {
  ValidationReport report;
  report.seed = config.seed;
  report.dim = config.dim;
  report.n = config.n;
  report.k = config.k;

  const Grid grid(config.dim, config.n);
  const Grid epdiff_grid(config.dim, config.dim == 1 ? std::max(config.n, 64) : std::min(config.n, 32));
  const Grid match_grid(config.dim, config.dim == 1 ? config.n : std::min(config.n, 32));
  Random rng(config.seed);
  Collector c(report.results);
  spectral_suite(c, grid, config.k, rng);
  density_suite(c, grid, config.k, rng);
  epdiff_suite(c, epdiff_grid, std::max(config.k, 0), rng);
  matching_suite(c, match_grid, config.k, rng);
  cli_suite(c, config, grid, rng);
  return report;
}

std::string to_json(const ValidationReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["grid"] = {{"dim", report.dim}, {"n", report.n}};
  j["k"] = report.k;
  j["all_pass"] = report.all_pass();
  auto& results = j["invariants"] = nlohmann::ordered_json::array();
  for (const InvariantResult& r : report.results) {
    results.push_back({{"module", r.module},
                       {"name", r.name},
                       {"pass", r.pass},
                       {"value", number(r.value)},
                       {"threshold", number(r.threshold)},
                       {"detail", r.detail}});
  }
  return j.dump(2);
}

}  // namespace geodens::app
