#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "geodens_app/config.hpp"
#include "geodens_app/run.hpp"

namespace {

using geodens::app::Command;

struct Subcommand {
  const char* name;
  const char* help;
  Command command;
};

constexpr Subcommand kSubcommands[] = {
    {"shoot", "Integrate the density geodesic from (rho0, p0)", Command::shoot},
    {"match", "Fit an initial momentum that carries rho0 to the target density", Command::match},
    {"epdiff-check", "Cross-validate the density geodesic against the horizontal EPDiff geodesic",
     Command::epdiff_check},
    {"validate", "Run the invariant suites of every module", Command::validate},
    {"convergence", "Rerun the base scenario at dt/{1,2,4} and n x {1,2}", Command::convergence},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev-type optimal transport geodesics on the flat torus"};
  app.require_subcommand(1);
  std::string config_path;
  std::string output_dir;
  bool quiet = false;
  app.add_option("--config", config_path, "INI configuration file or run manifest (manifest.json)");
  app.add_option("--output-dir", output_dir, "Override the artifact directory");
  app.add_flag("--quiet", quiet, "Only report warnings and errors");

  std::optional<Command> chosen;
  for (const Subcommand& s : kSubcommands) {
    app.add_subcommand(s.name, s.help)->fallthrough()->callback([&chosen, c = s.command] { chosen = c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : geodens::app::kExitConfig;
  }

  geodens::app::RunConfig config;
  try {
    if (config_path.empty()) {
      config = geodens::app::make_run_config(geodens::app::IniDocument::parse("", "<defaults>"), chosen, ".");
    } else {
      config = geodens::app::load_run_config(config_path, chosen);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return geodens::app::kExitConfig;
  }
  if (!output_dir.empty()) config.output_dir = output_dir;
  return geodens::app::run(config, {quiet});
}
