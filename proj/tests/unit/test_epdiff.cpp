#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "geodens/density_geodesic.hpp"
#include "geodens/epdiff.hpp"
#include "geodens/spectral.hpp"
#include "test_support.hpp"

using namespace geodens;
using namespace geodens::testing;

namespace {

VectorField as_vector(const ScalarField& f) { return VectorField::from_scalars({f}); }

/// Root of x + a sin x = y by bracketed Newton.
double solve_sine_map(double y, double a) {
  double lo = y - std::abs(a) - 1.0;
  double hi = y + std::abs(a) + 1.0;
  double x = y;
  for (int it = 0; it < 200; ++it) {
    const double f = x + a * std::sin(x) - y;
    if (std::abs(f) < 1e-15) break;
    (f > 0 ? hi : lo) = x;
    const double next = x - f / (1.0 + a * std::cos(x));
    x = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
  }
  return x;
}

}  // namespace

TEST(EpdiffRhs, CamassaHolmOracle) {
  // 1-D EPDiff is m_t = -(u m_x + 2 u_x m); for u = sin x every term is explicit.
  const Grid g(1, 64);
  const ScalarField u = ScalarField::sample(g, [](double x, double) { return std::sin(x); });
  for (int k : {0, 1, 2}) {
    const double a1 = std::pow(2.0, k + 1);  // symbol of A at |ξ| = 1
    const double a2 = std::pow(5.0, k + 1);  // at |ξ| = 2
    // u m_x + 2 u_x m = 3 a1 sin x cos x = 1.5 a1 sin 2x
    const ScalarField expected =
        ScalarField::sample(g, [&](double x, double) { return -1.5 * a1 / a2 * std::sin(2 * x); });
    EXPECT_LE(max_abs_diff(epdiff_rhs(as_vector(u), k).scalar(0), expected), 1e-13) << "k = " << k;
  }
}

TEST(EpdiffRhs, CamassaHolmRandomFields) {
  const Grid g(1, 64);
  Rng rng(4);
  const ScalarField u = trig_field(g, rng, 8, 1.0);
  const int k = 1;
  const ScalarField m = apply_A(k, as_vector(u)).scalar(0);
  const ScalarField ux = gradient(u).scalar(0);
  const ScalarField mx = gradient(m).scalar(0);
  const ScalarField bracket = pointwise_product(u, mx) + 2.0 * pointwise_product(ux, m);
  const ScalarField expected = -apply_A_inv(k, as_vector(dealiased(bracket))).scalar(0);
  EXPECT_LE(max_abs_diff(epdiff_rhs(as_vector(u), k).scalar(0), expected), 1e-10 * expected.max_abs());
}

TEST(EpdiffRhs, ShearFlowOracle) {
  // u = (sin y, 0): only (∇u)ᵀ m survives, giving a y-component.
  const Grid g(2, 32);
  const VectorField u = VectorField::from_scalars(
      {ScalarField::sample(g, [](double, double y) { return std::sin(y); }), ScalarField(g)});
  for (int k : {0, 1}) {
    const double a1 = std::pow(2.0, k + 1);
    const double a2 = std::pow(5.0, k + 1);
    const VectorField r = epdiff_rhs(u, k);
    const ScalarField expected =
        ScalarField::sample(g, [&](double, double y) { return -0.5 * a1 / a2 * std::sin(2 * y); });
    EXPECT_LE(r.scalar(0).max_abs(), 1e-13);
    EXPECT_LE(max_abs_diff(r.scalar(1), expected), 1e-13);
  }
}

TEST(Epdiff, EnergyConservationIsFourthOrder) {
  const Grid g(1, 64);
  Rng rng(12);
  const VectorField u0 = as_vector(trig_field(g, rng, 4, 0.3));
  std::vector<double> drift;
  for (double dt : {0.2, 0.1, 0.05}) {
    const EpdiffRun run = integrate_epdiff(identity_diffeo(u0, 1), 2.0, dt);
    const double e0 = epdiff_energy(u0, 1);
    double worst = 0.0;
    for (const auto& s : run.states) worst = std::max(worst, std::abs(epdiff_energy(s.u, 1) / e0 - 1.0));
    drift.push_back(worst);
  }
  EXPECT_LT(drift[2], 1e-9);
  EXPECT_GE(std::log2(drift[1] / drift[2]), 3.5);
}

TEST(Epdiff, TranslationEquivariance) {
  const Grid g(2, 16);
  Rng rng(6);
  const VectorField u = VectorField::from_scalars({trig_field(g, rng, 3, 0.2), trig_field(g, rng, 3, 0.2)});
  const std::array<int, 2> offset{3, -5};
  EXPECT_LE(max_abs_diff(epdiff_rhs(shift_by_grid(u, offset), 1), shift_by_grid(epdiff_rhs(u, 1), offset)),
            1e-12);
  const auto a = integrate_epdiff(identity_diffeo(shift_by_grid(u, offset), 1), 0.5, 0.1).states.back();
  const auto b = integrate_epdiff(identity_diffeo(u, 1), 0.5, 0.1).states.back();
  EXPECT_LE(max_abs_diff(a.u, shift_by_grid(b.u, offset)), 1e-12);
  EXPECT_LE(max_abs_diff(a.phi_disp, shift_by_grid(b.phi_disp, offset)), 1e-12);
}

TEST(Composition, IdentityAndTranslation) {
  const Grid g(2, 16);
  Rng rng(1);
  const ScalarField f = trig_field(g, rng, 5, 1.0);
  EXPECT_LE(max_abs_diff(compose(f, VectorField(g)), f), 1e-13);
  const VectorField shift = VectorField::constant(g, {0.3, -1.1});
  EXPECT_LE(max_abs_diff(compose(f, shift), translate(f, {-0.3, 1.1})), 1e-12);
}

TEST(Composition, JacobianOfSineMap) {
  const Grid g(1, 64);
  const VectorField disp = as_vector(ScalarField::sample(g, [](double x, double) { return 0.3 * std::sin(x); }));
  const ScalarField expected = ScalarField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); });
  EXPECT_LE(max_abs_diff(jacobian_determinant(disp), expected), 1e-13);
}

TEST(Composition, InvertMapMatchesPointwiseRootFinding) {
  const Grid g(1, 64);
  const VectorField disp = as_vector(ScalarField::sample(g, [](double x, double) { return 0.3 * std::sin(x); }));
  const VectorField inv = invert_map(disp);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.coordinate(static_cast<int>(i));
    EXPECT_NEAR(y + inv.component(0)[i], solve_sine_map(y, 0.3), 1e-11);
  }
}

TEST(LeftProjection, SineMapDensityOracle) {
  // π_l(φ) = Jac(φ⁻¹) = 1 / φ'(φ⁻¹(y)).
  const Grid g(1, 128);
  const VectorField disp = as_vector(ScalarField::sample(g, [](double x, double) { return 0.3 * std::sin(x); }));
  const DiffeoState phi{disp, VectorField(g), 1};
  const LeftProjection proj = project_left_detailed(phi);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = solve_sine_map(g.coordinate(static_cast<int>(i)), 0.3);
    EXPECT_NEAR(proj.rho[i], 1.0 / (1.0 + 0.3 * std::cos(x)), 1e-8);
  }
  EXPECT_LE(proj.mass_error, 1e-8);
}

TEST(LeftProjection, IdentityAndTranslations) {
  for (int dim : {1, 2}) {
    const Grid g(dim, 16);
    const DiffeoState id{VectorField(g), VectorField(g), 1};
    EXPECT_EQ(max_abs_diff(project_left(id), ScalarField::constant(g, 1.0)), 0.0);
    const DiffeoState moved{VectorField::constant(g, {0.77, -2.1}), VectorField(g), 1};
    EXPECT_LE(max_abs_diff(project_left(moved), ScalarField::constant(g, 1.0)), 1e-12);
  }
}

TEST(LeftProjection, RejectsFoldedMaps) {
  const Grid g(1, 32);
  const VectorField disp = as_vector(ScalarField::sample(g, [](double x, double) { return 1.5 * std::sin(x); }));
  EXPECT_THROW(project_left_detailed(DiffeoState{disp, VectorField(g), 1}), std::invalid_argument);
}

TEST(Preimage, ProjectsBackToDensity) {
  const Grid g1(1, 128);
  const ScalarField rho1 = bump(g1, 0.5);
  const VectorField d1 = density_preimage(rho1);
  EXPECT_LE(max_abs_diff(project_left(DiffeoState{d1, VectorField(g1), 1}), rho1), 1e-10);

  const Grid g2(2, 32);
  const ScalarField rho2 = bump(g2, 0.15);
  const VectorField d2 = density_preimage(rho2);
  EXPECT_LE(max_abs_diff(project_left(DiffeoState{d2, VectorField(g2), 1}), rho2), 1e-6);
}

TEST(HorizontalLift, HorizontalVelocityHasNoDefect) {
  const Grid g(2, 32);
  const ScalarField rho = bump(g, 0.15);
  const DiffeoState phi{density_preimage(rho), VectorField(g), 1};
  const ScalarField p = project_mean_zero(sine(g, 0.2));
  const HorizontalLift lift = horizontal_lift(rho, p, phi);
  EXPECT_LE(horizontality_defect(lift.eulerian, rho, 1), 1e-12);
  EXPECT_LE(max_abs_diff(lift.eulerian, horizontal_velocity(make_density_state(rho, p, 1))), 1e-13);

  // A divergence-free shear is vertical for ρ ≡ 1.
  const VectorField shear = VectorField::from_scalars(
      {ScalarField::sample(g, [](double, double y) { return std::sin(y); }), ScalarField(g)});
  EXPECT_GT(horizontality_defect(shear, ScalarField::constant(g, 1.0), 1), 0.5);
}

TEST(HorizontalLift, RejectsMismatchedDensity) {
  const Grid g(1, 32);
  const DiffeoState id{VectorField(g), VectorField(g), 1};
  EXPECT_THROW(horizontal_lift(bump(g, 0.2), sine(g, 0.1), id), std::invalid_argument);
}

TEST(LagrangianDensity, PreservedAlongCoupledFlow) {
  const Grid g(1, 64);
  const ScalarField rho0 = bump(g, 0.3);
  const ScalarField p0 = project_mean_zero(sine(g, 0.2));
  DiffeoState phi{density_preimage(rho0), VectorField(g), 1};
  phi.u = horizontal_lift(rho0, p0, phi).eulerian;
  const auto run = integrate_epdiff(phi, 1.0, 0.01);
  const DensityState end = flow(make_density_state(rho0, p0, 1), 1.0, 0.01);
  EXPECT_LE(lagrangian_density_defect(run.states.back().phi_disp, end.rho), 1e-8);
}

TEST(CrossValidate, SchedulingIndependentAndSerializable) {
  const Grid g(1, 32);
  const ScalarField rho0 = bump(g, 0.3);
  const ScalarField p0 = sine(g, 0.2);
  CrossValidationOptions opt;
  opt.refinement = 2;
  opt.snapshots = 4;
  const CrossValidationReport a = cross_validate(rho0, p0, 1, 0.5, 0.05, opt);
  opt.concurrent = false;
  const CrossValidationReport b = cross_validate(rho0, p0, 1, 0.5, 0.05, opt);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(a.rho_epdiff_final, b.rho_epdiff_final);
  EXPECT_EQ(a.snapshot_times.size(), 6u);
  EXPECT_LE(a.l2_discrepancy_max, 1e-6);

  const auto j = nlohmann::json::parse(to_json(a));
  for (const char* key : {"grid", "k", "dt", "T", "refinement", "l2_discrepancy_final", "l2_discrepancy_max",
                          "horizontality_defect_max", "energy_drift_density", "energy_drift_epdiff",
                          "projection_mass_error_max", "snapshot_times", "discrepancies",
                          "horizontality_defects"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_THROW(cross_validate(rho0, p0, -1, 0.5, 0.05), std::invalid_argument);
  opt.refinement = 3;
  EXPECT_THROW(cross_validate(rho0, p0, 1, 0.5, 0.05, opt), std::invalid_argument);
}
