#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "geodens/field_io.hpp"
#include "geodens_app/config.hpp"
#include "geodens_app/format.hpp"
#include "geodens_app/presets.hpp"
#include "test_support.hpp"

using namespace geodens;
using namespace geodens::app;
using geodens::testing::max_abs_diff;
namespace fs = std::filesystem;

namespace {

RunConfig from_text(const std::string& text, std::optional<Command> command = Command::shoot) {
  return make_run_config(IniDocument::parse(text, "test.ini"), command, "/tmp");
}

ConfigError config_error(const std::string& text, std::optional<Command> command = Command::shoot) {
  try {
    from_text(text, command);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError("", 0, "", "");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Ini, ParsesSectionsCommentsAndWhitespace) {
  const IniDocument doc = IniDocument::parse("# header\nseed = 3\n[grid]\n  n =  32 ; trailing\n\n[metric]\nk=0\n", "x");
  ASSERT_NE(doc.find("grid.n"), nullptr);
  EXPECT_EQ(doc.find("grid.n")->value, "32");
  EXPECT_EQ(doc.find("grid.n")->line, 4);
  EXPECT_EQ(doc.find("metric.k")->value, "0");
  EXPECT_EQ(doc.find("seed")->value, "3");
  EXPECT_EQ(doc.find("grid.dim"), nullptr);
}

TEST(Ini, SyntaxErrorsCarryLineNumbers) {
  const auto line_of = [](const std::string& text) {
    try {
      IniDocument::parse(text, "bad.ini");
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("[grid]\nn 32\n"), 2);
  EXPECT_EQ(line_of("[grid\n"), 1);
  EXPECT_EQ(line_of("[]\n"), 1);
  EXPECT_EQ(line_of("[grid]\n= 3\n"), 2);
  EXPECT_EQ(line_of("[grid]\nn = 8\n\nn = 16\n"), 4);
}

TEST(Config, DefaultsAreValid) {
  const RunConfig c = from_text("");
  EXPECT_EQ(c.command, Command::shoot);
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.n, 64);
  EXPECT_EQ(c.k, 1);
  EXPECT_FALSE(c.dt.has_value());
  EXPECT_EQ(c.rho0, "uniform");
  EXPECT_EQ(c.p0, "zero");
  EXPECT_EQ(c.n_modes, 8);
  EXPECT_EQ(from_text("[grid]\nn = 16\n").n_modes, 5);
}

TEST(Config, RejectsInvalidValuesWithLocation) {
  const ConfigError k = config_error("[metric]\nk = -2\n");
  EXPECT_EQ(k.line(), 2);
  EXPECT_EQ(k.key(), "metric.k");
  EXPECT_NE(std::string(k.what()).find("test.ini:2: metric.k"), std::string::npos);

  EXPECT_EQ(config_error("[grid]\nn = 48\n").key(), "grid.n");
  EXPECT_EQ(config_error("[grid]\ndim = 3\n").key(), "grid.dim");
  EXPECT_EQ(config_error("[time]\nT = -1\n").key(), "time.T");
  EXPECT_EQ(config_error("[time]\ndt = fast\n").key(), "time.dt");
  EXPECT_EQ(config_error("[grid]\nsize = 3\n").key(), "grid.size");
  EXPECT_EQ(config_error("[initial]\nrho = cos-bump 1.5 1\n").key(), "initial.rho");
  EXPECT_EQ(config_error("[initial]\np = sin 0.1 40\n").key(), "initial.p");
  EXPECT_EQ(config_error("[initial]\nrho = file missing.field\n").key(), "initial.rho");
  EXPECT_EQ(config_error("[match]\npreconditioner = newton\n").key(), "match.preconditioner");
  EXPECT_EQ(config_error("[time]\nbackward = maybe\n").key(), "time.backward");
  EXPECT_EQ(config_error("", Command::match).key(), "target.rho");
  EXPECT_EQ(config_error("[metric]\nk = -1\n", Command::epdiff_check).key(), "metric.k");
  EXPECT_EQ(config_error("[run]\ncommand = match\n", Command::shoot).key(), "run.command");
  EXPECT_EQ(config_error("", std::nullopt).key(), "run.command");
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_run_config("/nonexistent/run.ini", std::nullopt), ConfigError);
}

TEST(Config, CanonicalIniRoundTrips) {
  const RunConfig c = from_text(
      "[run]\ncommand = match\nseed = 7\n[grid]\nn = 32\n[metric]\nk = 0\n[time]\nT = 0.3\ndt = 0.1\n"
      "[initial]\nrho = gauss 2.5 0.7\np = sin 0.25 2\n[target]\nrho = cos-bump 0.2 1\n"
      "[match]\nn_modes = 5\nfd_step = 1e-6\npreconditioner = spectral\n",
      std::nullopt);
  EXPECT_EQ(c.command, Command::match);
  EXPECT_EQ(c.dt.value(), 0.1);
  const std::string ini = to_ini(c);
  const RunConfig again = make_run_config(IniDocument::parse(ini, "canonical"), std::nullopt, "/elsewhere");
  EXPECT_EQ(to_ini(again), ini);
  EXPECT_EQ(again.n_modes, 5);
  EXPECT_EQ(again.optimizer.fd_step, 1e-6);
  EXPECT_EQ(again.optimizer.preconditioner, MatchPreconditioner::spectral);
  for (const auto& key : known_keys()) {
    const auto dot = key.find('.');
    EXPECT_NE(ini.find(key.substr(dot + 1) + " = "), std::string::npos) << key;
  }
}

TEST(Config, ManifestAndRelativeFilesResolve) {
  std::string templ = (fs::temp_directory_path() / "geodens-cfg-XXXXXX").string();
  ASSERT_NE(mkdtemp(templ.data()), nullptr);
  const fs::path dir = templ;
  write_field(dir / "rho.field", ScalarField::constant(Grid(1, 16), 1.0));
  {
    std::ofstream(dir / "run.ini") << "[grid]\nn = 16\n[initial]\nrho = file rho.field\n";
  }
  const RunConfig c = load_run_config(dir / "run.ini", Command::shoot);
  ASSERT_EQ(c.input_files().size(), 1u);
  EXPECT_EQ(c.input_files()[0], dir / "rho.field");
  {
    std::ofstream(dir / "manifest.json") << nlohmann::json{{"tool", "geodens"}, {"config", to_ini(c)}}.dump();
  }
  const RunConfig from_manifest = load_run_config(dir / "manifest.json", std::nullopt);
  EXPECT_EQ(to_ini(from_manifest), to_ini(c));
  {
    std::ofstream(dir / "broken.json") << "{\"tool\": 1}";
  }
  EXPECT_THROW(load_run_config(dir / "broken.json", std::nullopt), ConfigError);
  fs::remove_all(dir);
}

TEST(Presets, ParseRangesAndCanonicalText) {
  EXPECT_EQ(to_string(parse_density_spec("  cos-bump   0.5  2 ", ".")), "cos-bump 0.5 2");
  EXPECT_EQ(parse_density_spec("gauss 1 0.7", ".").center_y, 1.0);
  EXPECT_EQ(to_string(parse_momentum_spec("cos -0.1 3", ".")), "cos -0.1 3");
  EXPECT_EQ(parse_density_spec("file a/b.field", "/base").file, fs::path("/base/a/b.field"));
  for (const char* bad : {"cos-bump 1 1", "cos-bump -1.2 1", "cos-bump 0.1 0", "gauss 1 0.01", "gauss 1 11",
                          "gauss x 1", "blob", "", "uniform 3", "file"}) {
    EXPECT_THROW(parse_density_spec(bad, "."), std::invalid_argument) << bad;
  }
  for (const char* bad : {"sin 0.1", "sin 0.1 1.5", "zero 1", "cosine 1 1"}) {
    EXPECT_THROW(parse_momentum_spec(bad, "."), std::invalid_argument) << bad;
  }
}

TEST(Presets, SampledFieldsHaveDocumentedFormulas) {
  const Grid g(2, 32);
  const ScalarField bump = make_field(parse_density_spec("cos-bump 0.3 2", "."), g);
  EXPECT_NEAR(bump.mean(), 1.0, 1e-15);
  EXPECT_LE(max_abs_diff(bump, ScalarField::sample(g, [](double x, double y) {
                           return 1.0 + 0.3 * std::cos(2 * x) * std::cos(2 * y);
                         })),
            1e-14);
  const ScalarField gauss = make_field(parse_density_spec("gauss 2 0.7 1", "."), Grid(1, 64));
  EXPECT_NEAR(gauss.mean(), 1.0, 1e-14);
  EXPECT_NEAR(gauss.values()[20] / gauss.values()[10],
              std::exp((std::cos(2 * M_PI * 20 / 64 - 2) - std::cos(2 * M_PI * 10 / 64 - 2)) / 0.49), 1e-12);
  const ScalarField p = make_field(parse_momentum_spec("sin 0.2 3", "."), g);
  EXPECT_LE(max_abs_diff(p, ScalarField::sample(g, [](double x, double y) {
                           return 0.2 * std::sin(3 * x) * std::cos(3 * y);
                         })),
            1e-15);
  EXPECT_THROW(make_field(parse_momentum_spec("sin 0.2 11", "."), g), std::invalid_argument);
}

TEST(Format, ShortestRoundTripDoubles) {
  for (double v : {0.1, 1e-300, -2.5, 1.0 / 3.0, 6.02214076e23, 0.0}) {
    double back = 0.0;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  double d = 0.0;
  EXPECT_FALSE(parse_double("1.5x", d));
  EXPECT_FALSE(parse_double("", d));
  EXPECT_FALSE(parse_double("inf", d));
  EXPECT_TRUE(parse_double("+2", d));
  long long i = 0;
  EXPECT_TRUE(parse_int("-12", i));
  EXPECT_EQ(i, -12);
  EXPECT_FALSE(parse_int("1.0", i));
}

TEST(Format, CsvWriterRows) {
  const fs::path path = fs::temp_directory_path() / ("geodens-csv-" + std::to_string(::getpid()) + ".csv");
  {
    CsvWriter csv(path, {"a", "b", "c"});
    csv.row({0.5, 3LL, std::string("x")});
    EXPECT_THROW(csv.row({1.0}), std::logic_error);
  }
  EXPECT_EQ(read_text(path), "a,b,c\n0.5,3,x\n");
  fs::remove(path);
}
