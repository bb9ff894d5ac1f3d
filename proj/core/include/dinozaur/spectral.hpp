#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dinozaur/field.hpp"

namespace dinozaur::spectral {

using Complex = std::complex<double>;

/// Uniform periodic grid on the unit torus [0,1)^d.
class Grid {
 public:
  /// Every extent must be even and >= 4; throws ConfigError otherwise.
  explicit Grid(std::vector<int> extents);

  int dim() const { return static_cast<int>(extents_.size()); }
  int extent(int j) const { return extents_[j]; }
  const std::vector<int>& extents() const { return extents_; }
  std::size_t points() const { return points_; }

  /// Coordinate x_j = m_j / n_j of the point with row-major index `point`.
  double coordinate(std::size_t point, int j) const;

  bool operator==(const Grid& other) const { return extents_ == other.extents_; }

 private:
  std::vector<int> extents_;
  std::size_t points_ = 1;
};

/// Truncated half-spectrum mode set.
///
/// Retains k with |k_j| <= kmax_j - 1 for the leading dimensions and
/// 0 <= k_d <= kmax_d - 1 for the last one. Cheap to copy.
class ModeSet {
 public:
  explicit ModeSet(std::vector<int> kmax);
  /// kmax_j = n_j / 2: every mode except the Nyquist planes.
  static ModeSet full(const Grid& grid);

  int dim() const { return static_cast<int>(kmax_.size()); }
  const std::vector<int>& kmax() const { return kmax_; }
  std::size_t size() const { return data_->squared_norms.size(); }

  /// Wavenumber k_j of mode m.
  int wavenumber(std::size_t m, int j) const { return data_->wavenumbers[m * kmax_.size() + j]; }
  /// s(k) = sum_j k_j^2.
  int squared_norm(std::size_t m) const { return data_->squared_norms[m]; }
  /// True when k_d > 0, i.e. the conjugate partner is implied rather than stored.
  bool has_implicit_partner(std::size_t m) const { return data_->wavenumbers[m * kmax_.size() + kmax_.size() - 1] > 0; }

  /// Index of -k for modes in the k_d = 0 plane; m itself otherwise.
  std::size_t conjugate_partner(std::size_t m) const { return data_->partners[m]; }

  bool compatible_with(const Grid& grid) const;
  /// Throws ConfigError when 2*kmax_j > n_j or the dimensions disagree.
  void require_compatible(const Grid& grid) const;

  bool operator==(const ModeSet& other) const { return kmax_ == other.kmax_; }

 private:
  struct Data {
    std::vector<int> wavenumbers;
    std::vector<int> squared_norms;
    std::vector<std::size_t> partners;
  };
  std::vector<int> kmax_;
  std::shared_ptr<const Data> data_;
};

/// Squared norms s(k) of the retained modes; the Laplacian eigenvalue magnitude is 4 pi^2 s(k).
struct FrequencyLattice {
  std::vector<int> squared_norms;
  double eigenvalue_magnitude(std::size_t m) const;
};
FrequencyLattice frequency_lattice(const ModeSet& modes);

/// Complex coefficients on a mode set, mode-major with channels fastest.
class SpectralField {
 public:
  SpectralField(ModeSet modes, int channels);
  SpectralField(ModeSet modes, int channels, std::vector<Complex> coefficients);

  const ModeSet& modes() const { return modes_; }
  int channels() const { return channels_; }
  std::size_t size() const { return coefficients_.size(); }

  Complex& at(std::size_t mode, int c) { return coefficients_[mode * channels_ + c]; }
  const Complex& at(std::size_t mode, int c) const { return coefficients_[mode * channels_ + c]; }
  std::span<Complex> coefficients() { return coefficients_; }
  std::span<const Complex> coefficients() const { return coefficients_; }

  /// Index of the mode with wavenumber k, or size() if it is not retained.
  std::size_t find_mode(std::span<const int> k) const;

 private:
  ModeSet modes_;
  int channels_;
  std::vector<Complex> coefficients_;
};

/// F(k) = (1 / prod n_j) * sum_x f(x) exp(-i 2 pi k.x), restricted to `modes`.
SpectralField forward_fft(const Field& f, const ModeSet& modes);

/// Real field from half-spectrum coefficients; leading-dimension partners in
/// the k_d = 0 plane are Hermitian-completed, unretained modes are zero.
Field inverse_fft(const SpectralField& coefficients, const Grid& grid);

/// Heat semigroup: coefficient (k, c) scaled by exp(-4 pi^2 s(k) tau_c).
SpectralField diffuse(const SpectralField& coefficients, std::span<const double> tau);

/// Multiplier exp(-4 pi^2 s(k) tau_c) laid out like a SpectralField (mode-major).
std::vector<double> diffusion_multiplier(const ModeSet& modes, std::span<const double> tau);

/// Gradient field with c*d channels ordered (c, j): channel c*d + j is d v^c / d x_j.
Field spectral_gradient(const SpectralField& coefficients, const Grid& grid);

/// Adjoint of forward_fft with respect to the real inner products
/// <f, g> = sum f g and <F, G> = sum Re(conj(F) G).
Field forward_fft_adjoint(const SpectralField& g, const Grid& grid);

/// Adjoint of inverse_fft under the same inner products.
SpectralField inverse_fft_adjoint(const Field& g, const ModeSet& modes);

/// Real inner product sum Re(conj(a) b) over all coefficients.
double real_inner(const SpectralField& a, const SpectralField& b);

/// f minus its projection onto `modes`: the unretained (e.g. Nyquist) content.
Field unretained_part(const Field& f, const ModeSet& modes);

}  // namespace dinozaur::spectral
