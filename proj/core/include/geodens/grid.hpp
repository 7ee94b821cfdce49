#pragma once

#include <array>
#include <cstddef>

namespace geodens {

/// Uniform tensor grid on the flat torus T^d = [0, 2π)^d, d ∈ {1, 2}.
///
/// Points are stored row-major: flat index = i0 * n + i1 for d = 2, with
/// axis 0 the x coordinate. Wavenumbers follow the symmetric layout
/// {-n/2, ..., n/2 - 1}. The quadrature measure is normalized so that the
/// constant field 1 integrates to exactly 1.
class Grid {
 public:
  /// Throws std::invalid_argument unless dim ∈ {1,2} and n ≥ 8 is a power of two.
  Grid(int dim, int n);

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return size_; }

  double spacing() const noexcept;
  /// Normalized quadrature weight of one grid point, 1 / n^dim.
  double weight() const noexcept { return 1.0 / static_cast<double>(size_); }

  /// Integer frequency of storage slot `index` along one axis.
  int wavenumber(int index) const noexcept { return index < n_ / 2 ? index : index - n_; }
  /// Largest |wavenumber| kept by the 2/3 dealiasing rule.
  int dealias_cutoff() const noexcept { return n_ / 3; }

  double coordinate(int index) const noexcept;
  /// Per-axis indices of a flat point index (unused axes are 0).
  std::array<int, 2> multi_index(std::size_t flat) const noexcept;
  /// Wavenumber tuple of a flat spectral index (unused axes are 0).
  std::array<int, 2> wavevector(std::size_t flat) const noexcept;
  /// |ξ|² of a flat spectral index.
  double wavenumber_squared(std::size_t flat) const noexcept;

  bool operator==(const Grid& other) const noexcept = default;

 private:
  int dim_;
  int n_;
  std::size_t size_;
};

Grid make_grid(int dim, int n);

}  // namespace geodens
