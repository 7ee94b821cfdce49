#include "geodens/grid.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace geodens {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Grid::Grid(int dim, int n) : dim_(dim), n_(n), size_(0) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(dim));
  }
  if (n < 8 || !is_power_of_two(n)) {
    throw std::invalid_argument("points per axis must be a power of two >= 8, got " +
                                std::to_string(n));
  }
  size_ = dim == 1 ? static_cast<std::size_t>(n)
                   : static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
}

double Grid::spacing() const noexcept { return 2.0 * std::numbers::pi / n_; }

double Grid::coordinate(int index) const noexcept {
  return 2.0 * std::numbers::pi * index / n_;
}

std::array<int, 2> Grid::multi_index(std::size_t flat) const noexcept {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  const auto n = static_cast<std::size_t>(n_);
  return {static_cast<int>(flat / n), static_cast<int>(flat % n)};
}

std::array<int, 2> Grid::wavevector(std::size_t flat) const noexcept {
  const auto idx = multi_index(flat);
  if (dim_ == 1) return {wavenumber(idx[0]), 0};
  return {wavenumber(idx[0]), wavenumber(idx[1])};
}

double Grid::wavenumber_squared(std::size_t flat) const noexcept {
  const auto xi = wavevector(flat);
  return static_cast<double>(xi[0]) * xi[0] + static_cast<double>(xi[1]) * xi[1];
}

Grid make_grid(int dim, int n) { return Grid(dim, n); }

}  // namespace geodens
