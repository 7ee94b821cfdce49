#include "geodens/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace geodens {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": grid mismatch (" +
                                std::to_string(a.dim()) + "D/" + std::to_string(a.n()) + " vs " +
                                std::to_string(b.dim()) + "D/" + std::to_string(b.n()) + ")");
  }
}

ScalarField::ScalarField(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values, bool mean_zero)
    : grid_(grid), values_(std::move(values)), mean_zero_(mean_zero) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("scalar field has " + std::to_string(values_.size()) +
                                " values, grid needs " + std::to_string(grid_.size()));
  }
}

ScalarField ScalarField::sample(const Grid& grid,
                                const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.multi_index(i);
    const double x = grid.coordinate(idx[0]);
    const double y = grid.dim() == 2 ? grid.coordinate(idx[1]) : 0.0;
    out.values_[i] = f(x, y);
  }
  return out;
}

ScalarField ScalarField::constant(const Grid& grid, double value) {
  return ScalarField(grid, std::vector<double>(grid.size(), value));
}

double ScalarField::mean() const noexcept {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum * grid_.weight();
}

double ScalarField::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) { return axpy(1.0, other); }

ScalarField& ScalarField::operator-=(const ScalarField& other) { return axpy(-1.0, other); }

ScalarField& ScalarField::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& other) {
  require_same_grid(grid_, other.grid_, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
  mean_zero_ = mean_zero_ && other.mean_zero_;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
ScalarField operator-(ScalarField a) { return a *= -1.0; }

ScalarField pointwise_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "pointwise_product");
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

ScalarField project_mean_zero(ScalarField f) {
  if (f.min() == f.max()) {
    std::fill(f.values().begin(), f.values().end(), 0.0);
    f.set_mean_zero(true);
    return f;
  }
  const double m = f.mean();
  for (double& v : f.values()) v -= m;
  f.set_mean_zero(true);
  return f;
}

double l2_inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid(), g.grid(), "l2_inner");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * g[i];
  return sum * f.grid().weight();
}

double l2_norm(const ScalarField& f) { return std::sqrt(l2_inner(f, f)); }

double l2_distance(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid(), g.grid(), "l2_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f[i] - g[i];
    sum += d * d;
  }
  return std::sqrt(sum * f.grid().weight());
}

namespace {

std::size_t shifted_index(const Grid& grid, std::size_t flat, std::array<int, 2> offset) {
  const int n = grid.n();
  const auto idx = grid.multi_index(flat);
  const int i0 = ((idx[0] - offset[0]) % n + n) % n;
  if (grid.dim() == 1) return static_cast<std::size_t>(i0);
  const int i1 = ((idx[1] - offset[1]) % n + n) % n;
  return static_cast<std::size_t>(i0) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i1);
}

}  // namespace

ScalarField shift_by_grid(const ScalarField& f, std::array<int, 2> offset) {
  ScalarField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[shifted_index(f.grid(), i, offset)];
  out.set_mean_zero(f.mean_zero());
  return out;
}

VectorField::VectorField(Grid grid)
    : grid_(grid), components_(grid.dim(), std::vector<double>(grid.size(), 0.0)) {}

VectorField::VectorField(Grid grid, std::vector<std::vector<double>> components)
    : grid_(grid), components_(std::move(components)) {
  if (components_.size() != static_cast<std::size_t>(grid_.dim())) {
    throw std::invalid_argument("vector field needs one component per grid dimension");
  }
  for (const auto& c : components_) {
    if (c.size() != grid_.size()) {
      throw std::invalid_argument("vector field component length does not match grid");
    }
  }
}

VectorField VectorField::from_scalars(const std::vector<ScalarField>& components) {
  if (components.empty()) throw std::invalid_argument("vector field needs components");
  std::vector<std::vector<double>> data;
  for (const auto& c : components) {
    require_same_grid(components.front().grid(), c.grid(), "VectorField::from_scalars");
    data.push_back(c.data());
  }
  return VectorField(components.front().grid(), std::move(data));
}

VectorField VectorField::constant(const Grid& grid, std::array<double, 2> value) {
  VectorField out(grid);
  for (int j = 0; j < grid.dim(); ++j) {
    std::fill(out.components_[j].begin(), out.components_[j].end(), value[j]);
  }
  return out;
}

ScalarField VectorField::scalar(int j) const { return ScalarField(grid_, components_.at(j)); }

double VectorField::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& c : components_) {
    for (double v : c) m = std::max(m, std::abs(v));
  }
  return m;
}

VectorField& VectorField::operator+=(const VectorField& other) { return axpy(1.0, other); }

VectorField& VectorField::operator*=(double s) noexcept {
  for (auto& c : components_) {
    for (double& v : c) v *= s;
  }
  return *this;
}

VectorField& VectorField::axpy(double s, const VectorField& other) {
  require_same_grid(grid_, other.grid_, "VectorField::axpy");
  for (int j = 0; j < dim(); ++j) {
    for (std::size_t i = 0; i < grid_.size(); ++i) components_[j][i] += s * other.components_[j][i];
  }
  return *this;
}

double l2_inner(const VectorField& v, const VectorField& w) {
  require_same_grid(v.grid(), w.grid(), "l2_inner");
  double sum = 0.0;
  for (int j = 0; j < v.dim(); ++j) {
    const auto a = v.component(j);
    const auto b = w.component(j);
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  }
  return sum * v.grid().weight();
}

double l2_norm(const VectorField& v) { return std::sqrt(l2_inner(v, v)); }

VectorField shift_by_grid(const VectorField& v, std::array<int, 2> offset) {
  std::vector<ScalarField> parts;
  for (int j = 0; j < v.dim(); ++j) parts.push_back(shift_by_grid(v.scalar(j), offset));
  return VectorField::from_scalars(parts);
}

}  // namespace geodens
