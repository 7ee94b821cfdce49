#include "tables.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace geodens::detail {

namespace {

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const GridTables& tables(const Grid& grid) {
  static std::map<std::pair<int, int>, std::unique_ptr<GridTables>> cache;
  std::lock_guard lock(cache_mutex());
  auto& slot = cache[{grid.dim(), grid.n()}];
  if (!slot) {
    auto t = std::make_unique<GridTables>();
    t->wave[0].resize(grid.size());
    t->wave[1].resize(grid.size());
    t->wave_squared.resize(grid.size());
    t->retained.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto xi = grid.wavevector(i);
      t->wave[0][i] = xi[0];
      t->wave[1][i] = xi[1];
      t->wave_squared[i] = grid.wavenumber_squared(i);
      t->retained[i] = is_retained(grid, i) ? 1 : 0;
    }
    slot = std::move(t);
  }
  return *slot;
}

const std::vector<double>& inertia_power(const Grid& grid, int power) {
  const GridTables& t = tables(grid);
  static std::map<std::tuple<int, int, int>, std::unique_ptr<std::vector<double>>> cache;
  std::lock_guard lock(cache_mutex());
  auto& slot = cache[{grid.dim(), grid.n(), power}];
  if (!slot) {
    auto v = std::make_unique<std::vector<double>>(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) (*v)[i] = std::pow(1.0 + t.wave_squared[i], power);
    slot = std::move(v);
  }
  return *slot;
}

Spectrum derivative(const Grid& grid, const Spectrum& s, int axis, bool truncate) {
  const GridTables& t = tables(grid);
  Spectrum d(s.size());
  const auto& w = t.wave[axis];
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (truncate && !t.retained[i]) continue;
    d[i] = std::complex<double>(-w[i] * s[i].imag(), w[i] * s[i].real());
  }
  return d;
}

void dealias_in_place(const Grid& grid, Spectrum& s) {
  const GridTables& t = tables(grid);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!t.retained[i]) s[i] = 0.0;
  }
}

}  // namespace geodens::detail
