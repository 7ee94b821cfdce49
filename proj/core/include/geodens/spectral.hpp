#pragma once

#include <complex>
#include <span>
#include <vector>

#include "geodens/field.hpp"
#include "geodens/grid.hpp"

namespace geodens {

/// Full complex Fourier coefficients, same flat layout as the grid.
/// Normalized so that f(x) = Σ_ξ ĉ_ξ e^{iξ·x}.
using Spectrum = std::vector<std::complex<double>>;

Spectrum forward(const Grid& grid, std::span<const double> values);
inline Spectrum forward(const ScalarField& f) { return forward(f.grid(), f.values()); }

/// Real part of the inverse transform; this is the projection onto
/// conjugate-symmetric spectra, so the Nyquist imaginary parts vanish.
std::vector<double> inverse(const Grid& grid, Spectrum spectrum);
ScalarField inverse_field(const Grid& grid, Spectrum spectrum, bool mean_zero = false);

/// Zeroes every mode with some |ξ_j| > n/3.
void dealias(const Grid& grid, Spectrum& spectrum);
bool is_retained(const Grid& grid, std::size_t flat) noexcept;

/// Real, even Fourier symbol.
class FourierMultiplier {
 public:
  FourierMultiplier(Grid grid, std::vector<double> symbol);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> symbol() const noexcept { return symbol_; }
  double operator[](std::size_t flat) const { return symbol_[flat]; }
  /// Symbol value at the wavenumber tuple ξ.
  double at(std::array<int, 2> xi) const;

  FourierMultiplier reciprocal() const;

 private:
  Grid grid_;
  std::vector<double> symbol_;
};

/// (1 + |ξ|²)^{k+1}, the symbol of (1 - Δ)^{k+1}; k = -1 gives the identity.
FourierMultiplier inertia_symbol(const Grid& grid, int k);

ScalarField apply_multiplier(const FourierMultiplier& m, const ScalarField& f);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
/// Componentwise (1 - Δ)^{-(k+1)}.
VectorField apply_A_inv(int k, const VectorField& v);
/// Componentwise (1 - Δ)^{k+1}.
VectorField apply_A(int k, const VectorField& v);

ScalarField dealiased(const ScalarField& f);
/// Pointwise product followed by 2/3-rule truncation.
ScalarField multiply_dealiased(const ScalarField& a, const ScalarField& b);

/// Fraction of the non-constant spectral energy that sits in the top third of
/// the retained band (max_j |ξ_j| > 2/3 of the dealiasing cutoff). Zero for
/// constant fields.
double spectral_tail_fraction(const ScalarField& f);

/// Evaluates the trigonometric interpolant of `spectrum` at arbitrary points
/// (x, y); y is ignored in 1-D. Nyquist modes use the cosine basis so the
/// interpolant is real and reproduces grid values exactly.
std::vector<double> evaluate_at(const Grid& grid, const Spectrum& spectrum,
                                std::span<const double> x, std::span<const double> y);

/// evaluate_at for several spectra sharing the same points.
std::vector<std::vector<double>> evaluate_many(const Grid& grid, std::span<const Spectrum> spectra,
                                               std::span<const double> x, std::span<const double> y);

/// Resampling onto another grid of the same dimension: spectral zero padding
/// onto finer grids, pointwise subsampling onto coarser (nested) grids.
ScalarField resample(const ScalarField& f, const Grid& target);

/// Band-limited translation out(x) = f(x - delta) via phase shift.
ScalarField translate(const ScalarField& f, std::array<double, 2> delta);

}  // namespace geodens
