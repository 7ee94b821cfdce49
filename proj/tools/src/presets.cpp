#include "geodens_app/presets.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "geodens/field_io.hpp"
#include "geodens_app/format.hpp"

namespace geodens::app {

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> words;
  for (std::string w; is >> w;) words.push_back(w);
  return words;
}

double number(const std::string& word, const std::string& spec) {
  double v = 0.0;
  if (!parse_double(word, v)) throw std::invalid_argument("'" + word + "' is not a number in '" + spec + "'");
  return v;
}

int mode_number(const std::string& word, const std::string& spec) {
  long long v = 0;
  if (!parse_int(word, v) || v < 1 || v > 1024) {
    throw std::invalid_argument("mode must be an integer in [1, 1024] in '" + spec + "'");
  }
  return static_cast<int>(v);
}

void expect_arity(const std::vector<std::string>& w, std::size_t lo, std::size_t hi, const std::string& spec) {
  if (w.size() < lo || w.size() > hi) throw std::invalid_argument("wrong number of parameters in '" + spec + "'");
}

std::filesystem::path file_part(const std::string& text, const std::filesystem::path& base_dir) {
  const auto pos = text.find_first_not_of(" \t", text.find("file") + 4);
  if (pos == std::string::npos) throw std::invalid_argument("'file' needs a path");
  std::filesystem::path p = text.substr(pos);
  if (p.is_relative()) p = base_dir / p;
  return p.lexically_normal();
}

}  // namespace

InitialSpec parse_density_spec(const std::string& text, const std::filesystem::path& base_dir) {
  const auto w = split_words(text);
  if (w.empty()) throw std::invalid_argument("empty density specification");
  InitialSpec s;
  if (w[0] == "uniform") {
    expect_arity(w, 1, 1, text);
    s.kind = InitialSpec::Kind::uniform;
  } else if (w[0] == "cos-bump") {
    expect_arity(w, 3, 3, text);
    s.kind = InitialSpec::Kind::cos_bump;
    s.amplitude = number(w[1], text);
    s.mode = mode_number(w[2], text);
    if (!(std::abs(s.amplitude) < 1.0)) throw std::invalid_argument("cos-bump amplitude must satisfy |a| < 1");
  } else if (w[0] == "gauss") {
    expect_arity(w, 3, 4, text);
    s.kind = InitialSpec::Kind::gauss;
    s.center = number(w[1], text);
    s.width = number(w[2], text);
    s.center_y = w.size() == 4 ? number(w[3], text) : s.center;
    if (!(s.width >= 0.05 && s.width <= 10.0)) throw std::invalid_argument("gauss width must lie in [0.05, 10]");
  } else if (w[0] == "file") {
    s.kind = InitialSpec::Kind::file;
    s.file = file_part(text, base_dir);
  } else {
    throw std::invalid_argument("unknown density preset '" + w[0] + "'");
  }
  return s;
}

InitialSpec parse_momentum_spec(const std::string& text, const std::filesystem::path& base_dir) {
  const auto w = split_words(text);
  if (w.empty()) throw std::invalid_argument("empty momentum specification");
  InitialSpec s;
  if (w[0] == "zero") {
    expect_arity(w, 1, 1, text);
    s.kind = InitialSpec::Kind::zero;
  } else if (w[0] == "sin" || w[0] == "cos") {
    expect_arity(w, 3, 3, text);
    s.kind = w[0] == "sin" ? InitialSpec::Kind::sin : InitialSpec::Kind::cos;
    s.amplitude = number(w[1], text);
    s.mode = mode_number(w[2], text);
  } else if (w[0] == "file") {
    s.kind = InitialSpec::Kind::file;
    s.file = file_part(text, base_dir);
  } else {
    throw std::invalid_argument("unknown momentum preset '" + w[0] + "'");
  }
  return s;
}

std::string to_string(const InitialSpec& s) {
  using K = InitialSpec::Kind;
  switch (s.kind) {
    case K::uniform:
      return "uniform";
    case K::cos_bump:
      return "cos-bump " + format_double(s.amplitude) + " " + std::to_string(s.mode);
    case K::gauss:
      return "gauss " + format_double(s.center) + " " + format_double(s.width) + " " + format_double(s.center_y);
    case K::zero:
      return "zero";
    case K::sin:
      return "sin " + format_double(s.amplitude) + " " + std::to_string(s.mode);
    case K::cos:
      return "cos " + format_double(s.amplitude) + " " + std::to_string(s.mode);
    case K::file:
      return "file " + s.file.string();
  }
  return {};
}

ScalarField make_field(const InitialSpec& s, const Grid& grid) {
  using K = InitialSpec::Kind;
  const bool two = grid.dim() == 2;
  if (s.kind == K::file) {
    ScalarField f = read_scalar_field(s.file);
    if (!(f.grid() == grid)) {
      throw std::invalid_argument(s.file.string() + ": field grid does not match the configured grid");
    }
    return f;
  }
  if (s.kind != K::uniform && s.kind != K::gauss && s.kind != K::zero && s.mode > grid.dealias_cutoff()) {
    throw std::invalid_argument("preset mode exceeds the retained band n/3 in '" + to_string(s) + "'");
  }
  const double a = s.amplitude;
  const double m = s.mode;
  ScalarField f(grid);
  switch (s.kind) {
    case K::uniform:
      f = ScalarField::constant(grid, 1.0);
      break;
    case K::cos_bump:
      f = ScalarField::sample(grid, [&](double x, double y) {
        return 1.0 + a * std::cos(m * x) * (two ? std::cos(m * y) : 1.0);
      });
      break;
    case K::gauss: {
      const double iw2 = 1.0 / (s.width * s.width);
      f = ScalarField::sample(grid, [&](double x, double y) {
        double e = std::cos(x - s.center) - 1.0;
        if (two) e += std::cos(y - s.center_y) - 1.0;
        return std::exp(e * iw2);
      });
      break;
    }
    case K::zero:
      return ScalarField(grid);
    case K::sin:
    case K::cos: {
      const bool sine = s.kind == K::sin;
      return ScalarField::sample(grid, [&](double x, double y) {
        return a * (sine ? std::sin(m * x) : std::cos(m * x)) * (two ? std::cos(m * y) : 1.0);
      });
    }
    case K::file:
      break;
  }
  f *= 1.0 / f.mean();
  return f;
}

}  // namespace geodens::app
