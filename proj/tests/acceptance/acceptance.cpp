#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dense_oracle.hpp"
#include "geodens/density_geodesic.hpp"
#include "geodens/epdiff.hpp"
#include "geodens/matching.hpp"
#include "geodens/spectral.hpp"
#include "geodens_app/config.hpp"
#include "geodens_app/run.hpp"
#include "test_support.hpp"

using namespace geodens;
using namespace geodens::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<void(Outcome&)> body;
};

double order(double coarse, double fine) { return std::log2(coarse / fine); }

ScalarField scenario_rho(const Grid& g) {
  return ScalarField::sample(g, [](double x, double) { return 1.0 + 0.5 * std::cos(x); });
}

ScalarField scenario_p(const Grid& g) {
  return ScalarField::sample(g, [](double x, double) { return 0.2 * std::sin(x); });
}

struct ConservationSummary {
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  double min_rho = 0.0;
  double tail_max = 0.0;
};

ConservationSummary shoot_summary(double T, double dt) {
  const Grid g(1, 64);
  ShootOptions opt;
  opt.cg_diagnostics = false;
  const Trajectory traj = shoot(scenario_rho(g), scenario_p(g), 1, T, dt, opt);
  ConservationSummary s;
  s.min_rho = traj.diagnostics.front().min_rho;
  const double e0 = traj.diagnostics.front().energy;
  for (const Diagnostics& d : traj.diagnostics) {
    s.mass_drift = std::max(s.mass_drift, std::abs(d.mass - 1.0));
    s.energy_drift = std::max(s.energy_drift, std::abs(d.energy - e0) / e0);
    s.min_rho = std::min(s.min_rho, d.min_rho);
    s.tail_max = std::max(s.tail_max, d.spectral_tail);
  }
  return s;
}

void operator_oracle(Outcome& out) {
  const Grid g(1, 16);
  const ScalarField rho = ScalarField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); });
  const Matrix Q = band_basis(16);
  for (int k : {0, 1}) {
    const Matrix oracle = dense_L_oracle(rho, k);
    const Matrix L = assemble_columns(rho, k);
    const double apply_err = (L - oracle).norm() / oracle.norm();
    const double asym = (L - L.transpose()).cwiseAbs().maxCoeff() / L.cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q.transpose() * L * Q);
    const double lambda_min = eig.eigenvalues().minCoeff();

    Rng rng(static_cast<std::uint64_t>(31 + k));
    double solve_err = 0.0;
    for (int draw = 0; draw < 5; ++draw) {
      const ScalarField rhodot = project_mean_zero(trig_field(g, rng, 5, 1.0));
      const Eigen::VectorXd y = (Q.transpose() * oracle * Q).ldlt().solve(Q.transpose() * to_vector(rhodot));
      const ScalarField dense = to_field(g, Q * y);
      const LinearSolveResult r = solve_L_rho(rho, rhodot, k, 1e-13);
      solve_err = std::max(solve_err, l2_distance(r.p, dense) / l2_norm(dense));
    }
    out.detail << "k=" << k << " apply " << apply_err << " solve " << solve_err << " asym " << asym
               << " lambda_min " << lambda_min << "; ";
    out.require(apply_err <= 1e-8, "apply vs dense");
    out.require(solve_err <= 1e-8, "solve vs dense");
    out.require(asym <= 1e-10, "symmetry");
    out.require(lambda_min > 0.0, "positive definite on mean-zero band");
  }
}

void constant_symbol(Outcome& out) {
  double worst = 0.0;
  int probes = 0;
  for (int dim : {1, 2}) {
    const Grid g(dim, dim == 1 ? 64 : 32);
    const ScalarField one = ScalarField::constant(g, 1.0);
    const int c = g.dealias_cutoff();
    for (int k : {-1, 0, 1, 2}) {
      for (int a = 0; a <= c; ++a) {
        for (int b = dim == 2 ? -c : 0; b <= (dim == 2 ? c : 0); ++b) {
          if (a == 0 && b <= 0) continue;
          const ScalarField mode = ScalarField::sample(g, [&](double x, double y) { return std::cos(a * x + b * y); });
          const double xi2 = a * a + b * b;
          const double symbol = xi2 / std::pow(1.0 + xi2, k + 1);
          const ScalarField res = apply_L_rho(one, mode, k);
          worst = std::max(worst, max_abs_diff(res, symbol * mode) / symbol);
          ++probes;
        }
      }
    }
  }
  out.detail << "max relative deviation " << worst << " over " << probes << " retained modes";
  out.require(worst <= 1e-10, "symbol deviation");
}

void conservation(Outcome& out) {
  const ConservationSummary fine = shoot_summary(5.0, 1e-3);
  out.detail << "dt=1e-3: mass " << fine.mass_drift << " energy " << fine.energy_drift << "; ";
  out.require(fine.mass_drift <= 1e-9, "mass drift");
  out.require(fine.energy_drift <= 1e-8, "energy drift at dt=1e-3");

  std::vector<double> drifts;
  for (double dt : {0.125, 0.0625, 0.03125}) drifts.push_back(shoot_summary(5.0, dt).energy_drift);
  const double o1 = order(drifts[0], drifts[1]);
  const double o2 = order(drifts[1], drifts[2]);
  out.detail << "ladder 0.125/0.0625/0.03125 drifts " << drifts[0] << " " << drifts[1] << " " << drifts[2]
             << " orders " << o1 << " " << o2 << "; ";
  out.require(o1 >= 3.5 && o2 >= 3.5, "energy drift order");

  std::vector<double> literal;
  for (double dt : {1e-3, 5e-4}) literal.push_back(shoot_summary(5.0, dt).energy_drift);
  out.detail << "(info) dt=1e-3/5e-4 drifts " << fine.energy_drift << " " << literal[1];
}

void global_regime(Outcome& out) {
  const ConservationSummary s = shoot_summary(10.0, 1e-3);
  out.detail << "min rho " << s.min_rho << " max tail " << s.tail_max << " mass " << s.mass_drift << " energy "
             << s.energy_drift;
  out.require(s.min_rho >= 0.1, "min rho");
  out.require(s.tail_max < 1e-6, "spectral tail");
}

void submersion(Outcome& out) {
  const Grid g(1, 64);
  const ScalarField rho0 = scenario_rho(g);
  const ScalarField p0 = scenario_p(g);
  const CrossValidationReport fine = cross_validate(rho0, p0, 1, 1.0, 1e-3);
  out.detail << "dt=1e-3: discrepancy " << fine.l2_discrepancy_final << " defect " << fine.horizontality_defect_max
             << "; ";
  out.require(fine.l2_discrepancy_final <= 1e-5, "final discrepancy");
  out.require(fine.horizontality_defect_max <= 1e-6, "horizontality defect");

  std::vector<double> gaps;
  double defect = 0.0;
  for (double dt : {0.2, 0.1, 0.05}) {
    const CrossValidationReport r = cross_validate(rho0, p0, 1, 1.0, dt);
    gaps.push_back(r.l2_discrepancy_final);
    defect = std::max(defect, r.horizontality_defect_max);
  }
  const double o1 = order(gaps[0], gaps[1]);
  const double o2 = order(gaps[1], gaps[2]);
  out.detail << "ladder 0.2/0.1/0.05 discrepancies " << gaps[0] << " " << gaps[1] << " " << gaps[2] << " orders "
             << o1 << " " << o2;
  out.require(o1 >= 3.5 && o2 >= 3.5, "discrepancy order");
  out.require(defect <= 1e-6, "horizontality defect on ladder");
}

void hamilton_jacobi(Outcome& out) {
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const int dim = draw < 10 ? 1 : 2;
    const Grid g(dim, dim == 1 ? 64 : 32);
    Rng rng(static_cast<std::uint64_t>(1000 + draw));
    const ScalarField p = project_mean_zero(trig_field(g, rng, g.n() / 6, 1.0));
    const HamiltonianRhs rhs = hamiltonian_rhs(make_density_state(ScalarField::constant(g, 1.0), p, -1));
    const VectorField grad = gradient(p);
    ScalarField sq(g);
    for (int j = 0; j < dim; ++j) sq += pointwise_product(grad.scalar(j), grad.scalar(j));
    worst = std::max(worst, max_abs_diff(rhs.pdot, project_mean_zero(-sq)));
  }
  out.detail << "max deviation over 20 draws " << worst;
  out.require(worst <= 1e-10, "Hamilton-Jacobi residual");
}

void reversibility(Outcome& out) {
  const Grid g(1, 64);
  const DensityState start = make_density_state(scenario_rho(g), scenario_p(g), 1);
  std::vector<double> errors;
  const std::vector<double> steps{0.2, 0.1, 0.05};
  for (double dt : steps) {
    DensityState end = flow(start, 1.0, dt);
    end.p = -end.p;
    const DensityState back = flow(end, 1.0, dt);
    errors.push_back(l2_distance(back.rho, start.rho));
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out.detail << "dt=" << steps[i] << " err " << errors[i] << " C " << errors[i] / std::pow(steps[i], 4) << "; ";
  }
  const double o1 = order(errors[0], errors[1]);
  const double o2 = order(errors[1], errors[2]);
  out.detail << "orders " << o1 << " " << o2;
  out.require(o1 >= 3.5 && o2 >= 3.5, "reversibility order");
}

bool monotone(const std::vector<double>& history) {
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] > history[i - 1]) return false;
  }
  return true;
}

void matching(Outcome& out) {
  const Grid g(1, 64);
  const ScalarField rho0 = ScalarField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); });
  std::vector<double> truth(coefficient_count(1, 8));
  Rng rng(2024);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = 0.1 * rng.uniform(-1, 1) / (1.0 + static_cast<double>(i / 2));
  const ScalarField p_star = momentum_from_coefficients(g, 8, truth);
  const MatchProblem self{.rho0 = rho0,
                          .rho1 = flow(make_density_state(rho0, p_star, 1), 1.0, 1e-2).rho,
                          .k = 1,
                          .T = 1.0,
                          .dt = 1e-2,
                          .n_modes = 8};
  const MatchResult a = solve_match(self);
  out.detail << "self-consistency: relative " << a.relative_mismatch << " in " << a.history.size() - 1
             << " iterations; ";
  out.require(a.relative_mismatch <= 1e-6, "self-consistency mismatch");
  out.require(monotone(a.objective_history), "self-consistency monotone");

  const auto gauss = [&](double c) {
    ScalarField f = ScalarField::sample(g, [c](double x, double) { return std::exp((std::cos(x - c) - 1.0) / 0.49); });
    f *= 1.0 / f.mean();
    return f;
  };
  const MatchProblem bump{.rho0 = gauss(kPi - 0.8),
                          .rho1 = gauss(kPi + 0.8),
                          .k = 1,
                          .T = 1.0,
                          .dt = 1e-2,
                          .n_modes = 8,
                          .opt = OptimizerSettings{.max_iterations = 200}};
  const MatchResult b = solve_match(bump);
  out.detail << "bump translation: relative " << b.relative_mismatch << " in " << b.history.size() - 1
             << " iterations; ";
  out.require(b.relative_mismatch <= 1e-3, "bump mismatch");
  out.require(monotone(b.objective_history), "bump monotone");

  // Directional consistency: |(J(c + hv) - J(c - hv)) / 2h - ∇J·v| = O(h²).
  std::vector<double> c(truth.size());
  std::vector<double> v(truth.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = 0.5 * truth[i];
    v[i] = rng.uniform(-1, 1);
  }
  const std::vector<double> grad = gradient_fd(self, c);
  double slope = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) slope += grad[i] * v[i];
  std::vector<double> errs;
  for (double h : {0.04, 0.02, 0.01}) {
    std::vector<double> plus = c;
    std::vector<double> minus = c;
    for (std::size_t i = 0; i < c.size(); ++i) {
      plus[i] += h * v[i];
      minus[i] -= h * v[i];
    }
    errs.push_back(std::abs((objective(self, plus) - objective(self, minus)) / (2 * h) - slope));
  }
  const double o1 = order(errs[0], errs[1]);
  const double o2 = order(errs[1], errs[2]);
  out.detail << "directional errors " << errs[0] << " " << errs[1] << " " << errs[2] << " orders " << o1 << " "
             << o2;
  out.require(o1 >= 1.8 && o2 >= 1.8, "directional derivative order");
}

void symmetry(Outcome& out) {
  double worst_shoot = 0.0;
  for (int dim : {1, 2}) {
    const Grid g(dim, dim == 1 ? 64 : 32);
    const std::array<int, 2> offset{7, dim == 2 ? -3 : 0};
    const ScalarField rho = bump(g, 0.4);
    const ScalarField p = sine(g, 0.2);
    const DensityState a = flow(make_density_state(shift_by_grid(rho, offset), shift_by_grid(p, offset), 1), 1.0, 0.01);
    const DensityState b = flow(make_density_state(rho, p, 1), 1.0, 0.01);
    worst_shoot = std::max({worst_shoot, max_abs_diff(a.rho, shift_by_grid(b.rho, offset)),
                            max_abs_diff(a.p, shift_by_grid(b.p, offset))});
  }
  out.detail << "shoot " << worst_shoot << "; ";
  out.require(worst_shoot <= 1e-10, "shoot equivariance");

  double worst_epdiff = 0.0;
  for (int dim : {1, 2}) {
    const Grid g(dim, dim == 1 ? 64 : 16);
    Rng rng(static_cast<std::uint64_t>(50 + dim));
    std::vector<ScalarField> comps;
    for (int j = 0; j < dim; ++j) comps.push_back(trig_field(g, rng, 3, 0.2));
    const VectorField u = VectorField::from_scalars(comps);
    const std::array<int, 2> offset{5, dim == 2 ? 2 : 0};
    const DiffeoState a = integrate_epdiff(identity_diffeo(shift_by_grid(u, offset), 1), 1.0, 0.05).states.back();
    const DiffeoState b = integrate_epdiff(identity_diffeo(u, 1), 1.0, 0.05).states.back();
    worst_epdiff = std::max({worst_epdiff, max_abs_diff(a.u, shift_by_grid(b.u, offset)),
                             max_abs_diff(a.phi_disp, shift_by_grid(b.phi_disp, offset))});
  }
  out.detail << "epdiff " << worst_epdiff << "; ";
  out.require(worst_epdiff <= 1e-10, "epdiff equivariance");

  const Grid g(1, 64);
  const std::array<int, 2> offset{11, 0};
  const double delta = offset[0] * g.spacing();
  const MatchProblem base{
      .rho0 = bump(g, 0.3), .rho1 = shift_by_grid(bump(g, 0.3), {4, 0}), .T = 0.5, .dt = 0.01, .n_modes = 6};
  MatchProblem moved = base;
  moved.rho0 = shift_by_grid(base.rho0, offset);
  moved.rho1 = shift_by_grid(base.rho1, offset);
  Rng rng(77);
  std::vector<double> c(coefficient_count(1, 6));
  for (double& x : c) x = 0.1 * rng.uniform(-1, 1);
  const double j0 = objective(base, c);
  const double j1 = objective(moved, translate_coefficients(1, 6, c, {delta, 0.0}));
  out.detail << "objective " << std::abs(j0 - j1) << "; ";
  out.require(std::abs(j0 - j1) <= 1e-10, "objective equivariance");

  bool constant = true;
  for (int dim : {1, 2}) {
    const Grid ge(dim, 32);
    const ScalarField rho = bump(ge, 0.4);
    const Trajectory traj = shoot(rho, ScalarField::constant(ge, 0.7), 1, 1.0, 0.1);
    for (const DensityState& s : traj.states) {
      constant = constant && s.rho.data() == rho.data() && s.p.max_abs() == 0.0;
    }
  }
  out.detail << "equilibria " << (constant ? "exactly constant" : "drifted");
  out.require(constant, "equilibria");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void reproducibility(Outcome& out) {
  std::string templ = (fs::temp_directory_path() / "geodens-acceptance-XXXXXX").string();
  if (!mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
  const fs::path root = templ;
  app::RunConfig config = app::make_run_config(app::IniDocument::parse("[run]\nseed = 42\n", "<acceptance>"),
                                               app::Command::validate, root);
  std::vector<std::string> reports;
  for (const char* name : {"first", "second"}) {
    config.output_dir = root / name;
    const int code = app::run(config, {true, true});
    out.require(code == app::kExitOk, std::string("validate exit code ") + std::to_string(code));
    reports.push_back(slurp(root / name / "report.json"));
  }
  fs::remove_all(root);
  const bool same = !reports[0].empty() && reports[0] == reports[1];
  out.detail << "report.json " << reports[0].size() << " bytes, " << (same ? "identical" : "different");
  out.require(same, "bitwise identical reports");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Acceptance checks, one PASS/FAIL line per criterion"};
  int only = 0;
  cli.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(cli, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "operator oracle equivalence", 5, operator_oracle},
      {2, "constant-density symbol", 1, constant_symbol},
      {3, "conservation laws", 60, conservation},
      {4, "global-regime smoke test", 120, global_regime},
      {5, "submersion cross-validation", 120, submersion},
      {6, "Hamilton-Jacobi limit", 5, hamilton_jacobi},
      {7, "time reversibility", 60, reversibility},
      {8, "matching", 900, matching},
      {9, "symmetry suite", 10, symmetry},
      {10, "reproducibility", 600, reproducibility},
  };

  bool all = true;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.require(seconds < c.budget_seconds, "runtime budget");
    all = all && out.pass;
    std::printf("criterion %2d %-30s %s (%.2f s / %.0f s) %s\n", c.id, c.title, out.pass ? "PASS" : "FAIL", seconds,
                c.budget_seconds, out.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
