#include "geodens_app/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geodens/grid.hpp"
#include "geodens_app/format.hpp"
#include "geodens_app/presets.hpp"

namespace geodens::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find_first_of("#;");
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string describe(const std::string& source, int line, const std::string& key, const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  if (!key.empty()) os << ": " << key;
  os << ": " << message;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string key, const std::string& message)
    : std::runtime_error(describe(source, line, key, message)),
      source_(std::move(source)),
      line_(line),
      key_(std::move(key)) {}

IniDocument IniDocument::parse(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source_ = source;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string content = trim(strip_comment(raw));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') throw ConfigError(source, line, "", "unterminated section header");
      section = trim(content.substr(1, content.size() - 2));
      if (section.empty()) throw ConfigError(source, line, "", "empty section name");
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "", "expected 'key = value'");
    const std::string name = trim(content.substr(0, eq));
    if (name.empty()) throw ConfigError(source, line, "", "missing key before '='");
    const std::string key = section.empty() ? name : section + "." + name;
    if (const auto it = doc.entries_.find(key); it != doc.entries_.end()) {
      throw ConfigError(source, line, key,
                        "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
    }
    doc.entries_[key] = IniEntry{trim(content.substr(eq + 1)), line};
  }
  return doc;
}

const IniEntry* IniDocument::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::shoot:
      return "shoot";
    case Command::match:
      return "match";
    case Command::epdiff_check:
      return "epdiff-check";
    case Command::validate:
      return "validate";
    case Command::convergence:
      return "convergence";
  }
  return {};
}

std::optional<Command> parse_command(const std::string& name) {
  for (Command c : {Command::shoot, Command::match, Command::epdiff_check, Command::validate,
                    Command::convergence}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "run.command",         "run.seed",              "run.output_dir",         "grid.dim",
      "grid.n",              "metric.k",              "time.T",                 "time.dt",
      "time.save_every",     "time.backward",         "solver.cg_tolerance",    "initial.rho",
      "initial.p",           "target.rho",            "match.n_modes",          "match.max_iterations",
      "match.gradient_tolerance", "match.sufficient_decrease", "match.backtrack", "match.max_backtracks",
      "match.fd_step",       "match.parallel",        "match.preconditioner",   "match.damping",
      "epdiff.refinement",   "epdiff.snapshots",
  };
  return keys;
}

std::vector<std::filesystem::path> RunConfig::input_files() const {
  std::vector<std::filesystem::path> files;
  const auto add = [&](const std::string& spec, bool density) {
    if (spec.empty()) return;
    const InitialSpec s = density ? parse_density_spec(spec, base_dir) : parse_momentum_spec(spec, base_dir);
    if (s.is_file()) files.push_back(s.file);
  };
  add(rho0, true);
  add(p0, false);
  add(rho1, true);
  return files;
}

namespace {

class Reader {
 public:
  explicit Reader(const IniDocument& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const IniEntry* e = doc_.find(key);
    throw ConfigError(doc_.source(), e ? e->line : 0, key, message);
  }

  bool has(const std::string& key) const { return doc_.find(key) != nullptr; }

  std::string text(const std::string& key, const std::string& fallback) const {
    const IniEntry* e = doc_.find(key);
    return e ? e->value : fallback;
  }

  double real(const std::string& key, double fallback) const {
    const IniEntry* e = doc_.find(key);
    if (!e) return fallback;
    double v = 0.0;
    if (!parse_double(e->value, v)) fail(key, "expected a number, got '" + e->value + "'");
    return v;
  }

  long long integer(const std::string& key, long long fallback) const {
    const IniEntry* e = doc_.find(key);
    if (!e) return fallback;
    long long v = 0;
    if (!parse_int(e->value, v)) fail(key, "expected an integer, got '" + e->value + "'");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const IniEntry* e = doc_.find(key);
    if (!e) return fallback;
    const std::string& v = e->value;
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

 private:
  const IniDocument& doc_;
};

bool power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

RunConfig make_run_config(const IniDocument& doc, std::optional<Command> command,
                          const std::filesystem::path& base_dir) {
  Reader r(doc);
  const auto& keys = known_keys();
  for (const auto& [key, entry] : doc.entries()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) r.fail(key, "unknown key");
  }

  RunConfig c;
  c.base_dir = base_dir;
  if (r.has("run.command")) {
    const auto named = parse_command(r.text("run.command", ""));
    if (!named) r.fail("run.command", "unknown command '" + r.text("run.command", "") + "'");
    if (command && *command != *named) {
      r.fail("run.command", "conflicts with the requested command '" + to_string(*command) + "'");
    }
    c.command = *named;
  } else if (command) {
    c.command = *command;
  } else {
    throw ConfigError(doc.source(), 0, "run.command", "no command given");
  }

  const long long seed = r.integer("run.seed", 0);
  if (seed < 0) r.fail("run.seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (r.has("run.output_dir")) {
    std::filesystem::path out = r.text("run.output_dir", "");
    if (out.empty()) r.fail("run.output_dir", "must not be empty");
    c.output_dir = out.is_relative() ? (base_dir / out).lexically_normal() : out;
  }

  const long long dim = r.integer("grid.dim", 1);
  if (dim != 1 && dim != 2) r.fail("grid.dim", "must be 1 or 2");
  const long long n = r.integer("grid.n", 64);
  if (n < 8 || n > 4096 || !power_of_two(n)) r.fail("grid.n", "must be a power of two in [8, 4096]");
  c.dim = static_cast<int>(dim);
  c.n = static_cast<int>(n);

  const long long k = r.integer("metric.k", 1);
  if (k < -1) r.fail("metric.k", "metric order must be >= -1");
  if (k > 8) r.fail("metric.k", "metric order must be <= 8");
  c.k = static_cast<int>(k);

  c.T = r.real("time.T", 1.0);
  if (!(c.T > 0.0)) r.fail("time.T", "must be positive");
  const std::string dt_text = r.text("time.dt", "auto");
  if (dt_text != "auto") {
    const double dt = r.real("time.dt", 0.0);
    if (!(dt > 0.0)) r.fail("time.dt", "must be positive or 'auto'");
    if (c.T / dt > 1e8) r.fail("time.dt", "T/dt exceeds 1e8 steps");
    c.dt = dt;
  }
  const long long save_every = r.integer("time.save_every", 1);
  if (save_every < 1) r.fail("time.save_every", "must be >= 1");
  c.save_every = static_cast<int>(save_every);
  c.backward = r.boolean("time.backward", false);

  c.cg_tolerance = r.real("solver.cg_tolerance", 1e-10);
  if (!(c.cg_tolerance > 0.0 && c.cg_tolerance < 1.0)) r.fail("solver.cg_tolerance", "must lie in (0, 1)");

  const Grid grid(c.dim, c.n);
  const auto check_spec = [&](const std::string& key, const std::string& fallback, bool density) {
    const std::string spec = r.text(key, fallback);
    InitialSpec s;
    try {
      s = density ? parse_density_spec(spec, base_dir) : parse_momentum_spec(spec, base_dir);
    } catch (const std::invalid_argument& e) {
      r.fail(key, e.what());
    }
    if (s.is_file()) {
      if (!std::filesystem::is_regular_file(s.file)) r.fail(key, "file not found: " + s.file.string());
    } else if (s.kind != InitialSpec::Kind::uniform && s.kind != InitialSpec::Kind::zero &&
               s.kind != InitialSpec::Kind::gauss && s.mode > grid.dealias_cutoff()) {
      r.fail(key, "mode exceeds the retained band n/3 = " + std::to_string(grid.dealias_cutoff()));
    }
    // validate reads field files itself.
    if (s.is_file() && c.command != Command::validate) {
      try {
        (void)make_field(s, grid);
      } catch (const std::exception& e) {
        r.fail(key, e.what());
      }
    }
    return to_string(s);
  };
  c.rho0 = check_spec("initial.rho", "uniform", true);
  c.p0 = check_spec("initial.p", "zero", false);
  if (r.has("target.rho")) c.rho1 = check_spec("target.rho", "uniform", true);
  if (c.command == Command::match && c.rho1.empty()) {
    throw ConfigError(doc.source(), 0, "target.rho", "match requires a target density");
  }

  const long long n_modes = r.integer("match.n_modes", std::min(8, grid.dealias_cutoff()));
  if (n_modes < 1 || n_modes > grid.dealias_cutoff()) {
    r.fail("match.n_modes", "must lie in [1, n/3 = " + std::to_string(grid.dealias_cutoff()) + "]");
  }
  c.n_modes = static_cast<int>(n_modes);
  OptimizerSettings& o = c.optimizer;
  const long long max_it = r.integer("match.max_iterations", o.max_iterations);
  if (max_it < 0 || max_it > 100000) r.fail("match.max_iterations", "must lie in [0, 100000]");
  o.max_iterations = static_cast<int>(max_it);
  o.gradient_tolerance = r.real("match.gradient_tolerance", o.gradient_tolerance);
  if (!(o.gradient_tolerance >= 0.0)) r.fail("match.gradient_tolerance", "must be non-negative");
  o.sufficient_decrease = r.real("match.sufficient_decrease", o.sufficient_decrease);
  if (!(o.sufficient_decrease > 0.0 && o.sufficient_decrease < 1.0)) {
    r.fail("match.sufficient_decrease", "must lie in (0, 1)");
  }
  o.backtrack = r.real("match.backtrack", o.backtrack);
  if (!(o.backtrack > 0.0 && o.backtrack < 1.0)) r.fail("match.backtrack", "must lie in (0, 1)");
  const long long max_bt = r.integer("match.max_backtracks", o.max_backtracks);
  if (max_bt < 1 || max_bt > 200) r.fail("match.max_backtracks", "must lie in [1, 200]");
  o.max_backtracks = static_cast<int>(max_bt);
  o.fd_step = r.real("match.fd_step", o.fd_step);
  if (!(o.fd_step > 0.0 && o.fd_step < 1.0)) r.fail("match.fd_step", "must lie in (0, 1)");
  o.parallel = r.boolean("match.parallel", o.parallel);
  const std::string pre = r.text("match.preconditioner", "gauss-newton");
  if (pre == "gauss-newton") {
    o.preconditioner = MatchPreconditioner::gauss_newton;
  } else if (pre == "spectral") {
    o.preconditioner = MatchPreconditioner::spectral;
  } else {
    r.fail("match.preconditioner", "must be 'gauss-newton' or 'spectral'");
  }
  o.damping = r.real("match.damping", o.damping);
  if (!(o.damping > 0.0)) r.fail("match.damping", "must be positive");

  const long long refinement = r.integer("epdiff.refinement", 4);
  if (!power_of_two(refinement) || refinement > 16) r.fail("epdiff.refinement", "must be a power of two <= 16");
  c.refinement = static_cast<int>(refinement);
  const long long snapshots = r.integer("epdiff.snapshots", 10);
  if (snapshots < 1 || snapshots > 100000) r.fail("epdiff.snapshots", "must lie in [1, 100000]");
  c.snapshots = static_cast<int>(snapshots);
  if (c.command == Command::epdiff_check && c.k < 0) {
    r.fail("metric.k", "epdiff-check requires k >= 0");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<Command> command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open configuration file");
  std::ostringstream os;
  os << in.rdbuf();
  std::string text = os.str();
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  if (path.extension() == ".json") {
    try {
      const auto manifest = nlohmann::json::parse(text);
      text = manifest.at("config").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string(), 0, "config", std::string("not a run manifest: ") + e.what());
    }
  }
  return make_run_config(IniDocument::parse(text, path.string()), command, base);
}

std::string to_ini(const RunConfig& c) {
  const auto& o = c.optimizer;
  std::ostringstream os;
  os << "[run]\n"
     << "command = " << to_string(c.command) << "\n"
     << "seed = " << c.seed << "\n"
     << "output_dir = " << std::filesystem::absolute(c.output_dir).lexically_normal().string() << "\n"
     << "\n[grid]\n"
     << "dim = " << c.dim << "\n"
     << "n = " << c.n << "\n"
     << "\n[metric]\n"
     << "k = " << c.k << "\n"
     << "\n[time]\n"
     << "T = " << format_double(c.T) << "\n"
     << "dt = " << (c.dt ? format_double(*c.dt) : std::string("auto")) << "\n"
     << "save_every = " << c.save_every << "\n"
     << "backward = " << (c.backward ? "true" : "false") << "\n"
     << "\n[solver]\n"
     << "cg_tolerance = " << format_double(c.cg_tolerance) << "\n"
     << "\n[initial]\n"
     << "rho = " << c.rho0 << "\n"
     << "p = " << c.p0 << "\n";
  if (!c.rho1.empty()) os << "\n[target]\nrho = " << c.rho1 << "\n";
  os << "\n[match]\n"
     << "n_modes = " << c.n_modes << "\n"
     << "max_iterations = " << o.max_iterations << "\n"
     << "gradient_tolerance = " << format_double(o.gradient_tolerance) << "\n"
     << "sufficient_decrease = " << format_double(o.sufficient_decrease) << "\n"
     << "backtrack = " << format_double(o.backtrack) << "\n"
     << "max_backtracks = " << o.max_backtracks << "\n"
     << "fd_step = " << format_double(o.fd_step) << "\n"
     << "parallel = " << (o.parallel ? "true" : "false") << "\n"
     << "preconditioner = "
     << (o.preconditioner == MatchPreconditioner::gauss_newton ? "gauss-newton" : "spectral") << "\n"
     << "damping = " << format_double(o.damping) << "\n"
     << "\n[epdiff]\n"
     << "refinement = " << c.refinement << "\n"
     << "snapshots = " << c.snapshots << "\n";
  return os.str();
}

}  // namespace geodens::app
