#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "geodens/grid.hpp"

namespace geodens {

/// Real-valued function on a grid, stored by physical values.
class ScalarField {
 public:
  explicit ScalarField(Grid grid);
  /// Throws std::invalid_argument if values.size() != grid.size().
  ScalarField(Grid grid, std::vector<double> values, bool mean_zero = false);

  /// Samples f(x) (d = 1) or f(x, y) (d = 2) at the grid points; y is 0 in 1-D.
  static ScalarField sample(const Grid& grid, const std::function<double(double, double)>& f);
  static ScalarField constant(const Grid& grid, double value);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool mean_zero() const noexcept { return mean_zero_; }
  void set_mean_zero(bool tag) noexcept { mean_zero_ = tag; }

  /// Quadrature mean, which equals the integral under the normalized measure.
  double mean() const noexcept;
  double min() const noexcept;
  double max() const noexcept;
  double max_abs() const noexcept;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s) noexcept;
  /// this += s * other
  ScalarField& axpy(double s, const ScalarField& other);

 private:
  Grid grid_;
  std::vector<double> values_;
  bool mean_zero_ = false;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
ScalarField operator-(ScalarField a);

/// Pointwise product (no dealiasing).
ScalarField pointwise_product(const ScalarField& a, const ScalarField& b);

/// Subtracts the quadrature mean and sets the mean-zero tag. Constant input
/// maps to exact zeros.
ScalarField project_mean_zero(ScalarField f);

/// ⟨f, g⟩ under the normalized quadrature. Throws on grid mismatch.
double l2_inner(const ScalarField& f, const ScalarField& g);
double l2_norm(const ScalarField& f);
double l2_distance(const ScalarField& f, const ScalarField& g);

/// Cyclic shift by whole grid offsets: out(x) = f(x - offset * h).
ScalarField shift_by_grid(const ScalarField& f, std::array<int, 2> offset);

/// d real components on one grid.
class VectorField {
 public:
  explicit VectorField(Grid grid);
  VectorField(Grid grid, std::vector<std::vector<double>> components);
  static VectorField from_scalars(const std::vector<ScalarField>& components);
  static VectorField constant(const Grid& grid, std::array<double, 2> value);

  const Grid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }
  std::span<const double> component(int j) const noexcept { return components_[j]; }
  std::span<double> component(int j) noexcept { return components_[j]; }
  ScalarField scalar(int j) const;

  double max_abs() const noexcept;

  VectorField& operator+=(const VectorField& other);
  VectorField& operator*=(double s) noexcept;
  VectorField& axpy(double s, const VectorField& other);

 private:
  Grid grid_;
  std::vector<std::vector<double>> components_;
};

double l2_inner(const VectorField& v, const VectorField& w);
double l2_norm(const VectorField& v);
VectorField shift_by_grid(const VectorField& v, std::array<int, 2> offset);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace geodens
