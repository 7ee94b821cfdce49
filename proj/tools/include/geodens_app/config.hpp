#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geodens/matching.hpp"

namespace geodens::app {

/// A configuration problem, located by line and key when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, std::string key, const std::string& message);

  const std::string& source() const noexcept { return source_; }
  /// 1-based line, 0 when the problem is not tied to a line.
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string source_;
  int line_;
  std::string key_;
};

struct IniEntry {
  std::string value;
  int line = 0;
};

/// Flat key = value document with [section] headers. Keys are addressed as
/// "section.key"; keys before the first header have no prefix. '#' and ';'
/// start comments.
class IniDocument {
 public:
  static IniDocument parse(const std::string& text, const std::string& source);

  const std::string& source() const noexcept { return source_; }
  const std::map<std::string, IniEntry>& entries() const noexcept { return entries_; }
  const IniEntry* find(const std::string& key) const;

 private:
  std::string source_;
  std::map<std::string, IniEntry> entries_;
};

enum class Command { shoot, match, epdiff_check, validate, convergence };

std::string to_string(Command command);
std::optional<Command> parse_command(const std::string& name);

struct RunConfig {
  Command command = Command::shoot;
  int dim = 1;
  int n = 64;
  int k = 1;
  double T = 1.0;
  /// Unset selects 0.5·Δx/max|u| at the initial state, capped at T/100.
  std::optional<double> dt;
  int save_every = 1;
  bool backward = false;
  double cg_tolerance = 1e-10;

  /// Preset or "file <path>" specifications.
  std::string rho0 = "uniform";
  std::string p0 = "zero";
  std::string rho1;

  int n_modes = 8;
  OptimizerSettings optimizer{};

  int refinement = 4;
  int snapshots = 10;

  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "geodens-out";

  /// Directory against which relative file paths are resolved.
  std::filesystem::path base_dir = ".";
  /// Files referenced by the initial-data specifications, resolved.
  std::vector<std::filesystem::path> input_files() const;
};

/// Keys recognized in configuration files, as "section.key".
const std::vector<std::string>& known_keys();

/// Builds a RunConfig from an INI document. `command` overrides any
/// run.command entry, which must otherwise agree with it.
RunConfig make_run_config(const IniDocument& doc, std::optional<Command> command,
                          const std::filesystem::path& base_dir);

/// Reads either an INI file or a run manifest (which embeds the normalized
/// configuration) from disk.
RunConfig load_run_config(const std::filesystem::path& path, std::optional<Command> command);

/// Canonical INI text of a configuration: every key, absolute file paths,
/// shortest round-trip numbers. Parsing it reproduces the configuration.
std::string to_ini(const RunConfig& config);

}  // namespace geodens::app
