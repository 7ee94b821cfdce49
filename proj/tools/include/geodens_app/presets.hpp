#pragma once

#include <filesystem>
#include <string>

#include "geodens/field.hpp"

namespace geodens::app {

/// Initial-data specification. Densities:
///   uniform               ρ = 1
///   cos-bump a m          ρ = 1 + a cos(m x)             (d = 2: 1 + a cos(m x) cos(m y))
///   gauss c w [c_y]       ρ ∝ exp((cos(x - c) - 1) / w²) (d = 2: product with the y factor, c_y defaults to c)
///   file <path>           field file
/// Momenta:
///   zero                  p = 0
///   sin a m / cos a m     p = a sin(m x)                  (d = 2: times cos(m y))
///   file <path>
struct InitialSpec {
  enum class Kind { uniform, cos_bump, gauss, zero, sin, cos, file };
  Kind kind = Kind::uniform;
  double amplitude = 0.0;
  int mode = 1;
  double center = 0.0;
  double center_y = 0.0;
  double width = 1.0;
  std::filesystem::path file;

  bool is_file() const noexcept { return kind == Kind::file; }
};

/// Throws std::invalid_argument with a readable message. Checks documented
/// ranges: |a| < 1 for cos-bump, m ≥ 1, 0.05 ≤ w ≤ 10. Relative file paths
/// are resolved against `base_dir`.
InitialSpec parse_density_spec(const std::string& text, const std::filesystem::path& base_dir);
InitialSpec parse_momentum_spec(const std::string& text, const std::filesystem::path& base_dir);

/// Canonical text form (parses back to the same spec).
std::string to_string(const InitialSpec& spec);

/// Samples the spec on `grid`. Analytic densities are normalized to unit
/// quadrature mass; file fields must live on `grid`.
ScalarField make_field(const InitialSpec& spec, const Grid& grid);

}  // namespace geodens::app
