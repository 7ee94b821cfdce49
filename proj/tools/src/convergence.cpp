#include "geodens_app/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "geodens/density_geodesic.hpp"
#include "geodens/spectral.hpp"
#include "geodens_app/format.hpp"
#include "geodens_app/presets.hpp"

namespace geodens::app {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ConvergenceRun run_one(const ScalarField& rho0, const ScalarField& p0, const Grid& base, int k, double T,
                       double dt) {
  ConvergenceRun run;
  run.n = rho0.grid().n();
  run.dt = dt;
  const int steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  ShootOptions options;
  options.cg_diagnostics = false;
  options.save_every = std::max(1, steps / 100);

  const auto summarize = [&](const Trajectory& traj) {
    const Diagnostics& first = traj.diagnostics.front();
    const double e0 = std::abs(first.energy);
    for (const Diagnostics& d : traj.diagnostics) {
      run.mass_drift = std::max(run.mass_drift, std::abs(d.mass - first.mass));
      const double de = std::abs(d.energy - first.energy);
      run.energy_drift = std::max(run.energy_drift, e0 > 0.0 ? de / e0 : de);
      if (!run.tail_history.empty() && d.spectral_tail < run.tail_history.back()) run.tail_monotone = false;
      run.tail_times.push_back(d.t);
      run.tail_history.push_back(d.spectral_tail);
      run.spectral_tail_max = std::max(run.spectral_tail_max, d.spectral_tail);
    }
    run.min_rho = std::min_element(traj.diagnostics.begin(), traj.diagnostics.end(), [](const auto& a, const auto& b) {
                    return a.min_rho < b.min_rho;
                  })->min_rho;
    run.spectral_tail_final = traj.diagnostics.back().spectral_tail;
    run.t_end = traj.times.back();
  };

  try {
    const Trajectory traj = shoot(rho0, p0, k, T, dt, options);
    summarize(traj);
    run.completed = true;
    run.message = "completed";
    run.rho_final = resample(traj.states.back().rho, base).data();
  } catch (const ShootAborted& e) {
    if (!e.partial().states.empty()) summarize(e.partial());
    run.completed = false;
    run.t_end = e.time();
    run.message = e.what();
  }
  return run;
}

double order_of(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return kNaN;
  return std::log2(coarse / fine);
}

double distance(const ConvergenceRun& a, const ConvergenceRun& b) {
  if (a.rho_final.empty() || b.rho_final.empty()) return kNaN;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rho_final.size(); ++i) {
    const double d = a.rho_final[i] - b.rho_final[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.rho_final.size()));
}

nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ConvergenceStudy run_convergence(const RunConfig& config, double dt) {
  const Grid base(config.dim, config.n);
  const ScalarField rho0 = make_field(parse_density_spec(config.rho0, config.base_dir), base);
  const ScalarField p0 = make_field(parse_momentum_spec(config.p0, config.base_dir), base);

  ConvergenceStudy study;
  for (int refine : {1, 2}) {
    const Grid grid(config.dim, config.n * refine);
    const ScalarField rho = refine == 1 ? rho0 : resample(rho0, grid);
    const ScalarField p = refine == 1 ? p0 : project_mean_zero(resample(p0, grid));
    for (int halving : {1, 2, 4}) {
      study.runs.push_back(run_one(rho, p, base, config.k, config.T, dt / halving));
      if (!study.runs.back().completed) ++study.aborted_runs;
    }
  }
  const auto& r = study.runs;
  study.temporal_order = order_of(distance(r[0], r[1]), distance(r[1], r[2]));
  study.temporal_order_fine = order_of(distance(r[3], r[4]), distance(r[4], r[5]));
  study.energy_order =
      r[0].completed && r[1].completed ? order_of(r[0].energy_drift, r[1].energy_drift) : kNaN;
  study.spatial_change = distance(r[2], r[5]);
  return study;
}

void write_convergence(const ConvergenceStudy& study, const std::filesystem::path& dir) {
  {
    CsvWriter csv(dir / "convergence.csv",
                  {"n", "dt", "completed", "t_end", "mass_drift", "energy_drift", "min_rho",
                   "spectral_tail_final", "spectral_tail_max", "tail_monotone"});
    for (const ConvergenceRun& r : study.runs) {
      csv.row({static_cast<long long>(r.n), r.dt, static_cast<long long>(r.completed), r.t_end, r.mass_drift,
               r.energy_drift, r.min_rho, r.spectral_tail_final, r.spectral_tail_max,
               static_cast<long long>(r.tail_monotone)});
    }
  }
  {
    CsvWriter csv(dir / "tail_history.csv", {"n", "dt", "t", "spectral_tail"});
    for (const ConvergenceRun& r : study.runs) {
      for (std::size_t i = 0; i < r.tail_times.size(); ++i) {
        csv.row({static_cast<long long>(r.n), r.dt, r.tail_times[i], r.tail_history[i]});
      }
    }
  }
  nlohmann::ordered_json summary;
  summary["temporal_order"] = number(study.temporal_order);
  summary["temporal_order_fine"] = number(study.temporal_order_fine);
  summary["energy_order"] = number(study.energy_order);
  summary["spatial_change"] = number(study.spatial_change);
  summary["aborted_runs"] = study.aborted_runs;
  auto& runs = summary["runs"] = nlohmann::ordered_json::array();
  for (const ConvergenceRun& r : study.runs) {
    runs.push_back({{"n", r.n},
                    {"dt", r.dt},
                    {"completed", r.completed},
                    {"message", r.message},
                    {"t_end", r.t_end},
                    {"tail_monotone", r.tail_monotone}});
  }
  std::ofstream out(dir / "summary.json", std::ios::binary | std::ios::trunc);
  out << summary.dump(2) << "\n";
}

}  // namespace geodens::app
