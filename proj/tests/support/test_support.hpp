#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "geodens/field.hpp"
#include "geodens/grid.hpp"

namespace geodens::testing {

inline constexpr double kPi = std::numbers::pi;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

 private:
  std::mt19937_64 engine_;
};

/// Sum of a cos(ξ·x) + b sin(ξ·x) over 1 ≤ max|ξ_j| ≤ band from one half-plane,
/// built from explicit trigonometric sums.
inline ScalarField trig_field(const Grid& grid, Rng& rng, int band, double amplitude) {
  struct Mode {
    int a;
    int b;
    double c;
    double s;
  };
  std::vector<Mode> modes;
  const int ymax = grid.dim() == 2 ? band : 0;
  for (int a = 0; a <= band; ++a) {
    for (int b = -ymax; b <= ymax; ++b) {
      if (a == 0 && b <= 0) continue;
      const double w = amplitude / (1.0 + a * a + b * b);
      modes.push_back({a, b, w * rng.uniform(-1, 1), w * rng.uniform(-1, 1)});
    }
  }
  return ScalarField::sample(grid, [&](double x, double y) {
    double v = 0.0;
    for (const Mode& m : modes) {
      const double phase = m.a * x + m.b * y;
      v += m.c * std::cos(phase) + m.s * std::sin(phase);
    }
    return v;
  });
}

inline ScalarField positive_density(const Grid& grid, Rng& rng, int band, double depth = 0.3) {
  ScalarField f = trig_field(grid, rng, band, 1.0);
  const double scale = depth / f.max_abs();
  for (double& v : f.values()) v = 1.0 + scale * v;
  f *= 1.0 / f.mean();
  return f;
}

inline ScalarField bump(const Grid& grid, double a) {
  ScalarField f = ScalarField::sample(grid, [&](double x, double y) {
    return 1.0 + a * std::cos(x) * (grid.dim() == 2 ? std::cos(y) : 1.0);
  });
  f *= 1.0 / f.mean();
  return f;
}

inline ScalarField sine(const Grid& grid, double a) {
  return ScalarField::sample(grid, [&](double x, double y) {
    return a * std::sin(x) * (grid.dim() == 2 ? std::cos(y) : 1.0);
  });
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) { return max_abs_diff(a.values(), b.values()); }

inline double max_abs_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (int j = 0; j < a.dim(); ++j) m = std::max(m, max_abs_diff(a.component(j), b.component(j)));
  return m;
}

/// Naive 1-D DFT with the library's normalization: ĉ_ξ = (1/n) Σ f_j e^{-iξx_j}.
inline std::vector<std::complex<double>> naive_dft(std::span<const double> f) {
  const std::size_t n = f.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += f[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n));
    }
    out[k] = acc / static_cast<double>(n);
  }
  return out;
}

}  // namespace geodens::testing
