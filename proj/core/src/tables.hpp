#pragma once

// Per-grid lookup tables shared by the spectral kernels.

#include <complex>
#include <vector>

#include "geodens/grid.hpp"
#include "geodens/spectral.hpp"

namespace geodens::detail {

struct GridTables {
  std::vector<double> wave[2];
  std::vector<double> wave_squared;
  std::vector<unsigned char> retained;
};

const GridTables& tables(const Grid& grid);

/// (1 + |ξ|²)^{power} per flat spectral index, cached.
const std::vector<double>& inertia_power(const Grid& grid, int power);

/// ĝ = i ξ_axis · ŝ, restricted to the retained band when `truncate` is set.
Spectrum derivative(const Grid& grid, const Spectrum& s, int axis, bool truncate);

void dealias_in_place(const Grid& grid, Spectrum& s);

}  // namespace geodens::detail
