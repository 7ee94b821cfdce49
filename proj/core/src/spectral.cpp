#include "geodens/spectral.hpp"

#include "tables.hpp"

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace geodens {

namespace {

// FFTW planning is not thread-safe; execution with new-array execute is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  std::pair<fftw_plan, fftw_plan> plans(const Grid& grid) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(grid.dim(), grid.n());
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(grid.size());
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    if (grid.dim() == 1) {
      fwd = fftw_plan_dft_1d(grid.n(), data, data, FFTW_FORWARD, flags);
      bwd = fftw_plan_dft_1d(grid.n(), data, data, FFTW_BACKWARD, flags);
    } else {
      fwd = fftw_plan_dft_2d(grid.n(), grid.n(), data, data, FFTW_FORWARD, flags);
      bwd = fftw_plan_dft_2d(grid.n(), grid.n(), data, data, FFTW_BACKWARD, flags);
    }
    if (fwd == nullptr || bwd == nullptr) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(key, std::make_pair(fwd, bwd));
    return {fwd, bwd};
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.first);
      fftw_destroy_plan(p.second);
    }
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, std::pair<fftw_plan, fftw_plan>> plans_;
};

fftw_complex* as_fftw(Spectrum& s) { return reinterpret_cast<fftw_complex*>(s.data()); }

}  // namespace

Spectrum forward(const Grid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("forward: size mismatch");
  Spectrum s(values.begin(), values.end());
  fftw_execute_dft(PlanCache::instance().plans(grid).first, as_fftw(s), as_fftw(s));
  const double scale = grid.weight();
  for (auto& c : s) c *= scale;
  return s;
}

std::vector<double> inverse(const Grid& grid, Spectrum spectrum) {
  if (spectrum.size() != grid.size()) throw std::invalid_argument("inverse: size mismatch");
  fftw_execute_dft(PlanCache::instance().plans(grid).second, as_fftw(spectrum),
                   as_fftw(spectrum));
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spectrum[i].real();
  return out;
}

ScalarField inverse_field(const Grid& grid, Spectrum spectrum, bool mean_zero) {
  return ScalarField(grid, inverse(grid, std::move(spectrum)), mean_zero);
}

bool is_retained(const Grid& grid, std::size_t flat) noexcept {
  const auto xi = grid.wavevector(flat);
  const int cutoff = grid.dealias_cutoff();
  return std::abs(xi[0]) <= cutoff && std::abs(xi[1]) <= cutoff;
}

void dealias(const Grid& grid, Spectrum& spectrum) { detail::dealias_in_place(grid, spectrum); }

FourierMultiplier::FourierMultiplier(Grid grid, std::vector<double> symbol)
    : grid_(grid), symbol_(std::move(symbol)) {
  if (symbol_.size() != grid_.size()) throw std::invalid_argument("symbol size mismatch");
}

double FourierMultiplier::at(std::array<int, 2> xi) const {
  const int n = grid_.n();
  const auto slot = [n](int w) { return ((w % n) + n) % n; };
  const std::size_t flat = grid_.dim() == 1
                               ? static_cast<std::size_t>(slot(xi[0]))
                               : static_cast<std::size_t>(slot(xi[0])) * n + slot(xi[1]);
  return symbol_.at(flat);
}

FourierMultiplier FourierMultiplier::reciprocal() const {
  std::vector<double> inv(symbol_.size());
  for (std::size_t i = 0; i < inv.size(); ++i) {
    if (symbol_[i] == 0.0) throw std::domain_error("reciprocal of a vanishing symbol");
    inv[i] = 1.0 / symbol_[i];
  }
  return FourierMultiplier(grid_, std::move(inv));
}

FourierMultiplier inertia_symbol(const Grid& grid, int k) {
  if (k < -1) throw std::invalid_argument("inertia order k must be >= -1");
  std::vector<double> symbol(grid.size());
  for (std::size_t i = 0; i < symbol.size(); ++i) {
    symbol[i] = std::pow(1.0 + grid.wavenumber_squared(i), k + 1);
  }
  return FourierMultiplier(grid, std::move(symbol));
}

ScalarField apply_multiplier(const FourierMultiplier& m, const ScalarField& f) {
  require_same_grid(m.grid(), f.grid(), "apply_multiplier");
  Spectrum s = forward(f);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= m[i];
  const bool mean_zero = f.mean_zero() || m[0] == 0.0;
  if (mean_zero) s[0] = 0.0;
  return inverse_field(f.grid(), std::move(s), mean_zero);
}

VectorField gradient(const ScalarField& f) {
  const Grid& grid = f.grid();
  const Spectrum s = forward(f);
  std::vector<std::vector<double>> parts;
  for (int j = 0; j < grid.dim(); ++j) {
    parts.push_back(inverse(grid, detail::derivative(grid, s, j, false)));
  }
  return VectorField(grid, std::move(parts));
}

ScalarField divergence(const VectorField& v) {
  const Grid& grid = v.grid();
  Spectrum total(grid.size());
  for (int j = 0; j < grid.dim(); ++j) {
    const Spectrum d = detail::derivative(grid, forward(grid, v.component(j)), j, false);
    for (std::size_t i = 0; i < d.size(); ++i) total[i] += d[i];
  }
  total[0] = 0.0;
  return inverse_field(grid, std::move(total), true);
}

namespace {

VectorField apply_symbol_power(int k, const VectorField& v, int sign) {
  if (k < -1) throw std::invalid_argument("inertia order k must be >= -1");
  if (k == -1) return v;
  const Grid& grid = v.grid();
  const auto& symbol = detail::inertia_power(grid, sign * (k + 1));
  std::vector<std::vector<double>> parts;
  for (int j = 0; j < grid.dim(); ++j) {
    Spectrum s = forward(grid, v.component(j));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= symbol[i];
    parts.push_back(inverse(grid, std::move(s)));
  }
  return VectorField(grid, std::move(parts));
}

}  // namespace

VectorField apply_A_inv(int k, const VectorField& v) { return apply_symbol_power(k, v, -1); }

VectorField apply_A(int k, const VectorField& v) { return apply_symbol_power(k, v, +1); }

ScalarField dealiased(const ScalarField& f) {
  Spectrum s = forward(f);
  dealias(f.grid(), s);
  if (f.mean_zero()) s[0] = 0.0;
  return inverse_field(f.grid(), std::move(s), f.mean_zero());
}

ScalarField multiply_dealiased(const ScalarField& a, const ScalarField& b) {
  return dealiased(pointwise_product(a, b));
}

double spectral_tail_fraction(const ScalarField& f) {
  const Grid& grid = f.grid();
  const Spectrum s = forward(f);
  const int cutoff = grid.dealias_cutoff();
  const double tail_start = 2.0 * cutoff / 3.0;
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto xi = grid.wavevector(i);
    const int m = std::max(std::abs(xi[0]), std::abs(xi[1]));
    if (m > cutoff) continue;
    const double e = std::norm(s[i]);
    total += e;
    if (m > tail_start) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

namespace {

// Per-axis interpolation basis: e^{iξx} for |ξ| < n/2, cos(n x / 2) at the Nyquist slot.
void axis_basis(const Grid& grid, double x, std::vector<std::complex<double>>& out) {
  const int n = grid.n();
  out.resize(static_cast<std::size_t>(n));
  const std::complex<double> z = std::polar(1.0, x);
  const std::complex<double> zc = std::conj(z);
  std::complex<double> pos = 1.0;
  std::complex<double> neg = 1.0;
  out[0] = 1.0;
  for (int k = 1; k < n / 2; ++k) {
    pos *= z;
    neg *= zc;
    out[static_cast<std::size_t>(k)] = pos;
    out[static_cast<std::size_t>(n - k)] = neg;
  }
  out[static_cast<std::size_t>(n / 2)] = std::cos(0.5 * n * x);
}

}  // namespace

std::vector<std::vector<double>> evaluate_many(const Grid& grid, std::span<const Spectrum> spectra,
                                               std::span<const double> x, std::span<const double> y) {
  for (const Spectrum& s : spectra) {
    if (s.size() != grid.size()) throw std::invalid_argument("evaluate_at: size mismatch");
  }
  if (grid.dim() == 2 && y.size() != x.size()) {
    throw std::invalid_argument("evaluate_at: coordinate arrays differ in length");
  }
  const auto n = static_cast<std::size_t>(grid.n());
  const std::size_t m = spectra.size();
  std::vector<std::vector<double>> out(m, std::vector<double>(x.size()));
  std::vector<std::complex<double>> bx;
  if (grid.dim() == 1) {
    for (std::size_t p = 0; p < x.size(); ++p) {
      axis_basis(grid, x[p], bx);
      for (std::size_t i = 0; i < m; ++i) {
        const Spectrum& s = spectra[i];
        double acc = s[0].real();
        for (std::size_t k = 1; k < n / 2; ++k) acc += 2.0 * (s[k] * bx[k]).real();
        acc += s[n / 2].real() * bx[n / 2].real();
        out[i][p] = acc;
      }
    }
    return out;
  }

  // f(x, y) = Re Σ_r bx_r Σ_c by_c C_rc: the inner sums for a block of points
  // and every spectrum form one complex matrix product.
  using CMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;
  const auto ni = static_cast<Eigen::Index>(n);
  CMatrix coeffs(ni, ni * static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        coeffs(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i * n + r)) = spectra[i][r * n + c];
      }
    }
  }
  constexpr std::size_t kBlock = 512;
  std::vector<std::complex<double>> by;
  for (std::size_t p0 = 0; p0 < x.size(); p0 += kBlock) {
    const std::size_t count = std::min(kBlock, x.size() - p0);
    const auto rows = static_cast<Eigen::Index>(count);
    CMatrix basis_y(rows, ni);
    CMatrix basis_x(rows, ni);
    for (std::size_t p = 0; p < count; ++p) {
      axis_basis(grid, x[p0 + p], bx);
      axis_basis(grid, y[p0 + p], by);
      for (std::size_t c = 0; c < n; ++c) {
        basis_x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = bx[c];
        basis_y(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = by[c];
      }
    }
    const CMatrix inner = basis_y * coeffs;
    for (std::size_t i = 0; i < m; ++i) {
      const auto block = inner.middleCols(static_cast<Eigen::Index>(i * n), ni);
      const Eigen::VectorXcd sums = basis_x.cwiseProduct(block).rowwise().sum();
      for (std::size_t p = 0; p < count; ++p) out[i][p0 + p] = sums(static_cast<Eigen::Index>(p)).real();
    }
  }
  return out;
}

std::vector<double> evaluate_at(const Grid& grid, const Spectrum& spectrum,
                                std::span<const double> x, std::span<const double> y) {
  return std::move(evaluate_many(grid, std::span<const Spectrum>(&spectrum, 1), x, y).front());
}

ScalarField resample(const ScalarField& f, const Grid& target) {
  const Grid& source = f.grid();
  if (source.dim() != target.dim()) throw std::invalid_argument("resample: dimension mismatch");
  if (source == target) return f;
  if (target.n() < source.n()) {
    const int stride = source.n() / target.n();
    ScalarField out(target);
    for (std::size_t i = 0; i < target.size(); ++i) {
      const auto idx = target.multi_index(i);
      const std::size_t src =
          target.dim() == 1 ? static_cast<std::size_t>(idx[0] * stride)
                            : static_cast<std::size_t>(idx[0] * stride) * source.n() + idx[1] * stride;
      out[i] = f[src];
    }
    out.set_mean_zero(f.mean_zero());
    return out;
  }
  const Spectrum s = forward(f);
  Spectrum t(target.size());
  const int ns = source.n();
  const int nt = target.n();
  const auto slot = [](int w, int n) { return ((w % n) + n) % n; };
  // Each source wavenumber maps to the same wavenumber on the finer grid; the
  // source Nyquist coefficient is split evenly between ±n/2 (cosine basis).
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto xi = source.wavevector(i);
    std::vector<std::pair<std::array<int, 2>, double>> images{{xi, 1.0}};
    for (int axis = 0; axis < source.dim(); ++axis) {
      if (xi[axis] == -ns / 2) {
        const std::size_t count = images.size();
        for (std::size_t c = 0; c < count; ++c) {
          images[c].second *= 0.5;
          auto mirrored = images[c];
          mirrored.first[axis] = ns / 2;
          images.push_back(mirrored);
        }
      }
    }
    for (const auto& [w, factor] : images) {
      const std::size_t flat = target.dim() == 1
                                   ? static_cast<std::size_t>(slot(w[0], nt))
                                   : static_cast<std::size_t>(slot(w[0], nt)) * nt + slot(w[1], nt);
      t[flat] += factor * s[i];
    }
  }
  return inverse_field(target, std::move(t), f.mean_zero());
}

ScalarField translate(const ScalarField& f, std::array<double, 2> delta) {
  const Grid& grid = f.grid();
  Spectrum s = forward(f);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto xi = grid.wavevector(i);
    const double phase = -(xi[0] * delta[0] + (grid.dim() == 2 ? xi[1] * delta[1] : 0.0));
    s[i] *= std::polar(1.0, phase);
  }
  return inverse_field(grid, std::move(s), f.mean_zero());
}

}  // namespace geodens
