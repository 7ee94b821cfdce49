#include "geodens_app/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "geodens/density_geodesic.hpp"
#include "geodens/epdiff.hpp"
#include "geodens/field_io.hpp"
#include "geodens/matching.hpp"
#include "geodens_app/convergence.hpp"
#include "geodens_app/format.hpp"
#include "geodens_app/presets.hpp"
#include "geodens_app/validate.hpp"

#ifndef GEODENS_VERSION
#define GEODENS_VERSION "unknown"
#endif

namespace geodens::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::shared_ptr<spdlog::logger> make_logger(const RunOptions& options) {
  static const auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
  auto log = std::make_shared<spdlog::logger>("geodens", sink);
  log->set_pattern("[%l] %v");
  log->set_level(options.silent  ? spdlog::level::off
                 : options.quiet ? spdlog::level::warn
                                 : spdlog::level::info);
  return log;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string snapshot_name(const char* stem, std::size_t index) {
  std::ostringstream os;
  os << stem << "_" << std::setw(5) << std::setfill('0') << index << ".field";
  return os.str();
}

std::vector<std::string> diagnostics_header() {
  return {"t", "mass", "energy", "min_rho", "max_abs_p", "cg_iterations", "spectral_tail"};
}

void diagnostics_row(CsvWriter& csv, const Diagnostics& d) {
  csv.row({d.t, d.mass, d.energy, d.min_rho, d.max_abs_p, static_cast<long long>(d.cg_iterations),
           d.spectral_tail});
}

struct Inputs {
  Grid grid;
  ScalarField rho0;
  ScalarField p0;
  std::optional<ScalarField> rho1;
};

Inputs load_inputs(const RunConfig& c) {
  const Grid grid(c.dim, c.n);
  Inputs in{grid, make_field(parse_density_spec(c.rho0, c.base_dir), grid),
            make_field(parse_momentum_spec(c.p0, c.base_dir), grid), std::nullopt};
  if (!c.rho1.empty()) in.rho1 = make_field(parse_density_spec(c.rho1, c.base_dir), grid);
  return in;
}

/// Artifact directory with single-owner manifest and status files.
class RunDirectory {
 public:
  RunDirectory(const RunConfig& config, double dt) : config_(config), dir_(config.output_dir), dt_(dt) {
    fs::create_directories(dir_);
    write_manifest();
  }

  const fs::path& path() const noexcept { return dir_; }

  void finish(bool ok, const std::string& message, double wall_time) const {
    json status;
    status["status"] = ok ? "ok" : "aborted";
    status["message"] = message;
    status["wall_time"] = wall_time;
    write_text(dir_ / "status.json", status.dump(2) + "\n");
  }

 private:
  void write_manifest() const {
    const std::string ini = to_ini(config_);
    json inputs = json::array();
    std::string digest_source = ini;
    for (const fs::path& f : config_.input_files()) {
      json entry;
      entry["path"] = f.string();
      entry["sha1"] = fs::is_regular_file(f) ? git_blob_sha1_file(f) : "";
      digest_source += entry["sha1"].get<std::string>();
      inputs.push_back(entry);
    }
    json m;
    m["tool"] = "geodens";
    m["version"] = GEODENS_VERSION;
    m["command"] = to_string(config_.command);
    m["grid"] = {{"dim", config_.dim}, {"n", config_.n}};
    m["k"] = config_.k;
    m["T"] = config_.T;
    m["dt"] = dt_;
    m["dt_requested"] = config_.dt ? json(*config_.dt) : json("auto");
    m["seed"] = config_.seed;
    m["tolerances"] = {{"cg", config_.cg_tolerance},
                       {"step_mass_drift", 1e-8},
                       {"match_gradient", config_.optimizer.gradient_tolerance},
                       {"map_inversion", 1e-12}};
    m["inputs"] = inputs;
    m["input_hash"] = git_blob_sha1(digest_source);
    m["config"] = ini;
    write_text(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  const RunConfig& config_;
  fs::path dir_;
  double dt_;
};

struct Outcome {
  bool ok = true;
  std::string message = "completed";
  int exit_code = kExitOk;
};

Outcome run_shoot(const RunConfig& c, const Inputs& in, double dt, const fs::path& dir, spdlog::logger& log) {
  fs::create_directories(dir / "fields");
  CsvWriter diagnostics(dir / "diagnostics.csv", diagnostics_header());
  CsvWriter snapshots(dir / "snapshots.csv", {"index", "t", "rho", "p"});
  std::size_t index = 0;
  ShootOptions options;
  options.save_every = c.save_every;
  options.backward = c.backward;
  options.cg_tolerance = c.cg_tolerance;
  options.on_record = [&](const DensityState& s, const Diagnostics& d) {
    const std::string rho_name = snapshot_name("rho", index);
    const std::string p_name = snapshot_name("p", index);
    write_field(dir / "fields" / rho_name, s.rho);
    write_field(dir / "fields" / p_name, s.p);
    snapshots.row({static_cast<long long>(index), d.t, "fields/" + rho_name, "fields/" + p_name});
    diagnostics_row(diagnostics, d);
    ++index;
  };
  try {
    const Trajectory traj = shoot(in.rho0, in.p0, c.k, c.T, dt, options);
    const auto& first = traj.diagnostics.front();
    const auto& last = traj.diagnostics.back();
    std::ostringstream os;
    os << "completed " << traj.times.size() << " snapshots; final min rho " << format_double(last.min_rho)
       << ", energy drift " << format_double(std::abs(last.energy - first.energy));
    log.info("{}", os.str());
    return {true, os.str(), kExitOk};
  } catch (const ShootAborted& e) {
    log.error("shoot aborted: {}", e.what());
    return {false, e.what(), kExitAborted};
  }
}

Outcome run_match(const RunConfig& c, const Inputs& in, double dt, const fs::path& dir, spdlog::logger& log) {
  MatchProblem problem{in.rho0, *in.rho1, c.k, c.T, dt, c.n_modes, c.optimizer};
  write_field(dir / "rho0.field", problem.rho0);
  write_field(dir / "rho1.field", problem.rho1);
  const MatchResult r = solve_match(problem);

  CsvWriter history(dir / "history.csv", {"iter", "objective", "grad_norm", "step"});
  for (const MatchIteration& h : r.history) {
    history.row({static_cast<long long>(h.iter), h.objective, h.grad_norm, h.step});
  }
  write_field(dir / "p0.field", r.p0);
  write_field(dir / "rho_T.field", r.geodesic.states.back().rho);
  CsvWriter diagnostics(dir / "diagnostics.csv", diagnostics_header());
  for (const Diagnostics& d : r.geodesic.diagnostics) diagnostics_row(diagnostics, d);

  json result;
  result["status"] = to_string(r.status);
  result["iterations"] = r.history.back().iter;
  result["objective"] = r.objective_history.back();
  result["final_l2_mismatch"] = r.final_l2_mismatch;
  result["relative_mismatch"] = r.relative_mismatch;
  result["objective_evaluations"] = r.objective_evaluations;
  result["penalized_evaluations"] = r.penalized_evaluations;
  result["n_modes"] = c.n_modes;
  result["coefficients"] = r.coeffs;
  write_text(dir / "result.json", result.dump(2) + "\n");

  std::ostringstream os;
  os << "optimizer " << to_string(r.status) << " after " << r.history.back().iter
     << " iterations; relative mismatch " << format_double(r.relative_mismatch);
  log.info("{}", os.str());
  return {true, os.str(), kExitOk};
}

Outcome run_epdiff_check(const RunConfig& c, const Inputs& in, double dt, const fs::path& dir,
                         spdlog::logger& log) {
  CrossValidationOptions options;
  options.refinement = c.refinement;
  options.snapshots = c.snapshots;
  try {
    const CrossValidationReport report = cross_validate(in.rho0, in.p0, c.k, c.T, dt, options);
    write_text(dir / "report.json", to_json(report) + "\n");
    CsvWriter csv(dir / "snapshots.csv", {"t", "l2_discrepancy", "horizontality_defect"});
    for (std::size_t i = 0; i < report.snapshot_times.size(); ++i) {
      csv.row({report.snapshot_times[i], report.discrepancies[i], report.defects[i]});
    }
    write_field(dir / "rho_density_T.field", ScalarField(in.grid, report.rho_density_final));
    write_field(dir / "rho_epdiff_T.field", ScalarField(in.grid, report.rho_epdiff_final));
    std::ostringstream os;
    os << "final L2 discrepancy " << format_double(report.l2_discrepancy_final) << ", max horizontality defect "
       << format_double(report.horizontality_defect_max);
    log.info("{}", os.str());
    return {true, os.str(), kExitOk};
  } catch (const StepAborted& e) {
    log.error("density side aborted: {}", e.what());
    return {false, std::string("density side aborted: ") + e.what(), kExitAborted};
  } catch (const EpdiffAborted& e) {
    log.error("EPDiff side aborted: {}", e.what());
    return {false, std::string("EPDiff side aborted: ") + e.what(), kExitAborted};
  }
}

Outcome run_validate(const RunConfig& c, const fs::path& dir, spdlog::logger& log) {
  const ValidationReport report = run_validation(c);
  write_text(dir / "report.json", to_json(report) + "\n");
  int failed = 0;
  for (const InvariantResult& r : report.results) {
    if (!r.pass) {
      ++failed;
      log.warn("invariant {}/{} failed: {}", r.module, r.name, r.detail);
    }
  }
  if (failed == 0) {
    log.info("all {} invariants pass", report.results.size());
    return {true, "all invariants pass", kExitOk};
  }
  return {false, std::to_string(failed) + " invariant(s) failed", kExitValidationFailed};
}

Outcome run_convergence_study(const RunConfig& c, double dt, const fs::path& dir, spdlog::logger& log) {
  const ConvergenceStudy study = run_convergence(c, dt);
  write_convergence(study, dir);
  std::ostringstream os;
  os << "temporal order " << format_double(study.temporal_order) << ", spatial change "
     << format_double(study.spatial_change) << ", aborted sub-runs " << study.aborted_runs;
  log.info("{}", os.str());
  return {true, os.str(), kExitOk};
}

}  // namespace

double resolve_time_step(const RunConfig& c) {
  if (c.dt) return *c.dt;
  const Inputs in = load_inputs(c);
  const DensityState s = make_density_state(in.rho0, in.p0, c.k);
  return default_time_step(s, c.T / 100.0);
}

int run(const RunConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  auto log = make_logger(options);

  // Everything that can reject the inputs happens before the manifest.
  std::optional<Inputs> inputs;
  double dt = 0.0;
  if (config.command != Command::validate) {
    try {
      inputs = load_inputs(config);
      (void)make_density_state(inputs->rho0, inputs->p0, config.k);
      if (inputs->rho1) (void)make_density_state(*inputs->rho1, inputs->p0, config.k);
      dt = resolve_time_step(config);
    } catch (const std::exception& e) {
      log->error("invalid initial data: {}", e.what());
      return kExitConfig;
    }
    if (!global_existence_guaranteed(config.k, config.dim)) {
      log->warn("k = {} <= d/2 = {}: global existence is not guaranteed; positivity loss may abort the run",
                config.k, config.dim / 2.0);
    }
  }

  RunDirectory dir(config, dt);
  Outcome outcome;
  try {
    switch (config.command) {
      case Command::shoot:
        outcome = run_shoot(config, *inputs, dt, dir.path(), *log);
        break;
      case Command::match:
        outcome = run_match(config, *inputs, dt, dir.path(), *log);
        break;
      case Command::epdiff_check:
        outcome = run_epdiff_check(config, *inputs, dt, dir.path(), *log);
        break;
      case Command::validate:
        outcome = run_validate(config, dir.path(), *log);
        break;
      case Command::convergence:
        outcome = run_convergence_study(config, dt, dir.path(), *log);
        break;
    }
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    outcome = {false, e.what(), kExitAborted};
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  dir.finish(outcome.ok, outcome.message, wall);
  return outcome.exit_code;
}

}  // namespace geodens::app
