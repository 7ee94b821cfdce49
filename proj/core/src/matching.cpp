#include "geodens/matching.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "geodens/spectral.hpp"

namespace geodens {

namespace {

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Inverse of the per-coefficient curvature T²λ²/2 of the objective at ρ ≡ 1,
// with λ = |ξ|²/(1+|ξ|²)^{k+1} the constant-density symbol of L_ρ.
std::vector<double> preconditioner(const MatchProblem& problem) {
  const auto basis = match_basis(problem.rho0.grid().dim(), problem.n_modes);
  std::vector<double> diag;
  for (const auto& xi : basis) {
    const double q = static_cast<double>(xi[0] * xi[0] + xi[1] * xi[1]);
    const double lambda = q / std::pow(1.0 + q, problem.k + 1);
    const double value = 2.0 / (problem.T * problem.T * lambda * lambda);
    diag.push_back(value);
    diag.push_back(value);
  }
  return diag;
}

}  // namespace

void validate(const MatchProblem& problem) {
  const auto check_density = [](const ScalarField& rho, const char* name) {
    if (!(rho.min() > 0.0)) {
      throw std::invalid_argument(std::string("match: ") + name + " must be strictly positive");
    }
    if (std::abs(rho.mean() - 1.0) > 1e-10) {
      throw std::invalid_argument(std::string("match: ") + name + " must have unit mass");
    }
  };
  require_same_grid(problem.rho0.grid(), problem.rho1.grid(), "match");
  check_density(problem.rho0, "rho0");
  check_density(problem.rho1, "rho1");
  if (problem.k < -1) throw std::invalid_argument("match: k must be >= -1");
  if (!(problem.T > 0.0) || !(problem.dt > 0.0)) {
    throw std::invalid_argument("match: T and dt must be positive");
  }
  if (problem.n_modes < 1 || problem.n_modes > problem.rho0.grid().dealias_cutoff()) {
    std::ostringstream os;
    os << "match: n_modes must lie in [1, " << problem.rho0.grid().dealias_cutoff() << "]";
    throw std::invalid_argument(os.str());
  }
  const OptimizerSettings& o = problem.opt;
  if (o.max_iterations < 0 || o.max_backtracks < 1 || !(o.fd_step > 0.0) ||
      !(o.backtrack > 0.0 && o.backtrack < 1.0) ||
      !(o.sufficient_decrease > 0.0 && o.sufficient_decrease < 1.0) ||
      !(o.gradient_tolerance >= 0.0)) {
    throw std::invalid_argument("match: invalid optimizer settings");
  }
}

std::vector<std::array<int, 2>> match_basis(int dim, int n_modes) {
  std::vector<std::array<int, 2>> basis;
  if (dim == 1) {
    for (int m = 1; m <= n_modes; ++m) basis.push_back({m, 0});
    return basis;
  }
  for (int a = 0; a <= n_modes; ++a) {
    for (int b = -n_modes; b <= n_modes; ++b) {
      if (a == 0 && b <= 0) continue;
      basis.push_back({a, b});
    }
  }
  return basis;
}

std::size_t coefficient_count(int dim, int n_modes) { return 2 * match_basis(dim, n_modes).size(); }

ScalarField momentum_from_coefficients(const Grid& grid, int n_modes, const std::vector<double>& coeffs) {
  const auto basis = match_basis(grid.dim(), n_modes);
  if (coeffs.size() != 2 * basis.size()) {
    throw std::invalid_argument("momentum_from_coefficients: wrong coefficient count");
  }
  if (n_modes > grid.dealias_cutoff()) {
    throw std::invalid_argument("momentum_from_coefficients: n_modes exceeds the retained band");
  }
  const int n = grid.n();
  const auto slot = [&](std::array<int, 2> xi) {
    const auto wrap = [n](int w) { return static_cast<std::size_t>(((w % n) + n) % n); };
    return grid.dim() == 1 ? wrap(xi[0]) : wrap(xi[0]) * n + wrap(xi[1]);
  };
  Spectrum s(grid.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const std::complex<double> c(0.5 * coeffs[2 * i], -0.5 * coeffs[2 * i + 1]);
    s[slot(basis[i])] += c;
    s[slot({-basis[i][0], -basis[i][1]})] += std::conj(c);
  }
  return inverse_field(grid, std::move(s), true);
}

std::vector<double> translate_coefficients(int dim, int n_modes, const std::vector<double>& coeffs,
                                           std::array<double, 2> delta) {
  const auto basis = match_basis(dim, n_modes);
  if (coeffs.size() != 2 * basis.size()) {
    throw std::invalid_argument("translate_coefficients: wrong coefficient count");
  }
  std::vector<double> out(coeffs.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double theta = basis[i][0] * delta[0] + (dim == 2 ? basis[i][1] * delta[1] : 0.0);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double a = coeffs[2 * i];
    const double b = coeffs[2 * i + 1];
    out[2 * i] = a * c - b * s;
    out[2 * i + 1] = a * s + b * c;
  }
  return out;
}

namespace {

struct Probe {
  ObjectiveValue value;
  /// ρ(T); empty when the shoot aborted.
  std::vector<double> endpoint;
};

Probe probe(const MatchProblem& problem, const std::vector<double>& coeffs) {
  const ScalarField p0 = momentum_from_coefficients(problem.rho0.grid(), problem.n_modes, coeffs);
  const DensityState start = make_density_state(problem.rho0, p0, problem.k);
  try {
    DensityState end = flow(start, problem.T, problem.dt);
    const double d = l2_distance(end.rho, problem.rho1);
    return {{0.5 * d * d, false, problem.T}, end.rho.data()};
  } catch (const StepAborted& e) {
    const double t = std::clamp(e.time(), 0.0, problem.T);
    return {{1e6 * (1.0 + (problem.T - t) / problem.T), true, t}, {}};
  }
}

struct CentralDifferences {
  std::vector<double> gradient;
  /// Columns ∂ρ(T)/∂c_i; empty when a probe aborted.
  std::vector<std::vector<double>> jacobian;
  int penalized = 0;
};

CentralDifferences central_differences(const MatchProblem& problem, const std::vector<double>& coeffs,
                                       double h, bool with_jacobian) {
  const std::size_t count = coeffs.size();
  CentralDifferences out;
  out.gradient.resize(count);
  std::vector<std::vector<double>> columns(with_jacobian ? count : 0);
  std::vector<int> penalized(count, 0);
  const auto component = [&](std::size_t i) {
    const double step = h * std::max(1.0, std::abs(coeffs[i]));
    std::vector<double> c = coeffs;
    c[i] = coeffs[i] + step;
    const Probe plus = probe(problem, c);
    c[i] = coeffs[i] - step;
    const Probe minus = probe(problem, c);
    out.gradient[i] = (plus.value.value - minus.value.value) / (2.0 * step);
    penalized[i] = int(plus.value.penalized) + int(minus.value.penalized);
    if (with_jacobian && penalized[i] == 0) {
      columns[i].resize(plus.endpoint.size());
      for (std::size_t q = 0; q < plus.endpoint.size(); ++q) {
        columns[i][q] = (plus.endpoint[q] - minus.endpoint[q]) / (2.0 * step);
      }
    }
  };
  const std::size_t workers =
      problem.opt.parallel
          ? std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count)
          : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) component(i);
  } else {
    // Worker w handles indices w, w + workers, ...
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < count; i += workers) component(i);
      }));
    }
    for (auto& job : jobs) job.get();
  }
  for (int p : penalized) out.penalized += p;
  if (with_jacobian && out.penalized == 0) out.jacobian = std::move(columns);
  return out;
}

// -(JᵀWJ + μD)⁻¹ g with W the quadrature weight and D the constant-density
// curvature; empty if the system is not usable.
std::vector<double> levenberg_direction(const std::vector<std::vector<double>>& jacobian,
                                        const std::vector<double>& g, double weight,
                                        const std::vector<double>& spectral, double mu) {
  const auto count = static_cast<Eigen::Index>(g.size());
  if (jacobian.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(jacobian.front().size());
  Eigen::MatrixXd J(rows, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    J.col(i) = Eigen::Map<const Eigen::VectorXd>(jacobian[i].data(), rows);
  }
  Eigen::MatrixXd H = weight * (J.transpose() * J);
  for (Eigen::Index i = 0; i < count; ++i) H(i, i) += mu / spectral[static_cast<std::size_t>(i)];
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success) return {};
  const Eigen::VectorXd d = -ldlt.solve(Eigen::Map<const Eigen::VectorXd>(g.data(), count));
  if (!d.allFinite()) return {};
  return std::vector<double>(d.data(), d.data() + d.size());
}

}  // namespace

ObjectiveValue evaluate_objective(const MatchProblem& problem, const std::vector<double>& coeffs) {
  return probe(problem, coeffs).value;
}

double objective(const MatchProblem& problem, const std::vector<double>& coeffs) {
  return evaluate_objective(problem, coeffs).value;
}

std::vector<double> gradient_fd(const MatchProblem& problem, const std::vector<double>& coeffs,
                                double h) {
  if (h <= 0.0) h = problem.opt.fd_step;
  return central_differences(problem, coeffs, h, false).gradient;
}

std::string to_string(MatchStatus status) {
  switch (status) {
    case MatchStatus::converged:
      return "converged";
    case MatchStatus::max_iter:
      return "max_iter";
    case MatchStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

MatchResult solve_match(const MatchProblem& problem) {
  validate(problem);
  const OptimizerSettings& opt = problem.opt;
  const std::size_t count = coefficient_count(problem.rho0.grid().dim(), problem.n_modes);
  const std::vector<double> spectral = preconditioner(problem);
  const bool gauss_newton = opt.preconditioner == MatchPreconditioner::gauss_newton;
  const double weight = problem.rho0.grid().weight();

  MatchResult result{ScalarField(problem.rho0.grid()), {}, {}, {}, 0.0, 0.0, {}, MatchStatus::stalled, 0, 0};
  const auto evaluate = [&](const std::vector<double>& c) {
    const ObjectiveValue v = evaluate_objective(problem, c);
    ++result.objective_evaluations;
    if (v.penalized) ++result.penalized_evaluations;
    return v;
  };
  const auto differentiate = [&](const std::vector<double>& c) {
    CentralDifferences fd = central_differences(problem, c, opt.fd_step, gauss_newton);
    result.objective_evaluations += static_cast<int>(2 * count);
    result.penalized_evaluations += fd.penalized;
    return fd;
  };

  std::vector<double> x(count, 0.0);
  double f = evaluate(x).value;
  CentralDifferences fd = differentiate(x);
  result.objective_history.push_back(f);
  result.history.push_back({0, f, max_norm(fd.gradient), 0.0});

  double bb_step = 1.0;
  double mu = opt.damping;
  result.status = MatchStatus::max_iter;
  for (int iter = 1;; ++iter) {
    const std::vector<double>& g = fd.gradient;
    if (f == 0.0 || max_norm(g) <= opt.gradient_tolerance) {
      result.status = MatchStatus::converged;
      break;
    }
    if (iter > opt.max_iterations) break;

    std::vector<double> d;
    if (gauss_newton) d = levenberg_direction(fd.jacobian, g, weight, spectral, mu);
    double alpha = 1.0;
    const bool levenberg = !d.empty() && dot(g, d) < 0.0;
    if (!levenberg) {
      d.assign(count, 0.0);
      for (std::size_t i = 0; i < count; ++i) d[i] = -spectral[i] * g[i];
      alpha = bb_step;
    }
    const double slope = dot(g, d);

    bool accepted = false;
    std::vector<double> trial(count);
    double f_trial = f;
    for (int b = 0; b < opt.max_backtracks; ++b) {
      for (std::size_t i = 0; i < count; ++i) trial[i] = x[i] + alpha * d[i];
      const ObjectiveValue v = evaluate(trial);
      if (!v.penalized && v.value <= f + opt.sufficient_decrease * alpha * slope) {
        f_trial = v.value;
        accepted = true;
        break;
      }
      alpha *= opt.backtrack;
    }
    if (!accepted) {
      result.status = MatchStatus::stalled;
      break;
    }
    if (levenberg) mu = alpha == 1.0 ? std::max(mu * 0.25, 1e-12) : std::min(mu * 4.0, 1e12);

    CentralDifferences next = differentiate(trial);
    // Barzilai–Borwein length in the spectral metric, used by the diagonal
    // fallback on the next iteration.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double s = trial[i] - x[i];
      ss += s * s / spectral[i];
      sy += s * (next.gradient[i] - g[i]);
    }
    bb_step = (sy > 0.0 && std::isfinite(ss / sy)) ? std::clamp(ss / sy, 1e-8, 1e8) : 1.0;

    const double step_length = alpha * std::sqrt(dot(d, d));
    x = std::move(trial);
    fd = std::move(next);
    f = f_trial;
    result.objective_history.push_back(f);
    result.history.push_back({iter, f, max_norm(fd.gradient), step_length});
  }

  result.coeffs = x;
  result.p0 = momentum_from_coefficients(problem.rho0.grid(), problem.n_modes, x);
  result.geodesic = shoot(problem.rho0, result.p0, problem.k, problem.T, problem.dt);
  result.final_l2_mismatch = l2_distance(result.geodesic.states.back().rho, problem.rho1);
  const double scale = l2_distance(problem.rho0, problem.rho1);
  result.relative_mismatch = scale > 0.0 ? result.final_l2_mismatch / scale : 0.0;
  return result;
}

}  // namespace geodens
