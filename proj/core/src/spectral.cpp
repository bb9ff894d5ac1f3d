#include "dinozaur/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "dinozaur/errors.hpp"

namespace dinozaur::spectral {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

std::size_t half_spectrum_size(const std::vector<int>& n) {
  std::size_t s = 1;
  for (std::size_t j = 0; j + 1 < n.size(); ++j) s *= static_cast<std::size_t>(n[j]);
  return s * static_cast<std::size_t>(n.back() / 2 + 1);
}

// Plans are created once per (extents, channels, direction) and shared.
// fftw's planner is not thread-safe; execution on distinct arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const std::vector<int>& n, int channels, bool inverse) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(n, channels, inverse);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    std::size_t points = 1;
    for (int e : n) points *= static_cast<std::size_t>(e);
    const std::size_t half = half_spectrum_size(n);
    double* real = fftw_alloc_real(points * channels);
    fftw_complex* cplx = fftw_alloc_complex(half * channels);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = inverse
        ? fftw_plan_many_dft_c2r(static_cast<int>(n.size()), n.data(), channels, cplx, nullptr,
                                 channels, 1, real, nullptr, channels, 1, flags)
        : fftw_plan_many_dft_r2c(static_cast<int>(n.size()), n.data(), channels, real, nullptr,
                                 channels, 1, cplx, nullptr, channels, 1, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (plan == nullptr) throw ConfigError("spectral: FFT planning failed");
    plans_.emplace(std::move(key), plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::vector<int>, int, bool>, fftw_plan> plans_;
};

// Row-major offset of each retained mode inside the half-spectrum array.
std::vector<std::size_t> half_indices(const ModeSet& modes, const std::vector<int>& n) {
  const int d = modes.dim();
  std::vector<std::size_t> idx(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::size_t off = 0;
    for (int j = 0; j < d; ++j) {
      const int k = modes.wavenumber(m, j);
      const std::size_t len = (j + 1 < d) ? static_cast<std::size_t>(n[j]) : static_cast<std::size_t>(n[j] / 2 + 1);
      const std::size_t pos = static_cast<std::size_t>(k < 0 ? k + n[j] : k);
      off = off * len + pos;
    }
    idx[m] = off;
  }
  return idx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<int> extents) : extents_(std::move(extents)) {
  if (extents_.empty()) throw ConfigError("Grid: dimension must be >= 1");
  for (int e : extents_) {
    if (e < 4 || e % 2 != 0)
      throw ConfigError("Grid: extents must be even and >= 4, got " + std::to_string(e));
    points_ *= static_cast<std::size_t>(e);
  }
}

double Grid::coordinate(std::size_t point, int j) const {
  std::size_t stride = 1;
  for (int i = dim() - 1; i > j; --i) stride *= static_cast<std::size_t>(extents_[i]);
  const std::size_t m = (point / stride) % static_cast<std::size_t>(extents_[j]);
  return static_cast<double>(m) / extents_[j];
}

// ---------------------------------------------------------------------------
// ModeSet

ModeSet::ModeSet(std::vector<int> kmax) : kmax_(std::move(kmax)) {
  if (kmax_.empty()) throw ConfigError("ModeSet: dimension must be >= 1");
  for (int k : kmax_)
    if (k < 1) throw ConfigError("ModeSet: kmax entries must be >= 1");

  const int d = dim();
  auto data = std::make_shared<Data>();
  std::vector<int> k(d);
  for (int j = 0; j + 1 < d; ++j) k[j] = -(kmax_[j] - 1);
  k[d - 1] = 0;
  // Odometer over the box; leading dims run -(kmax-1)..kmax-1, the last 0..kmax-1.
  while (true) {
    int s = 0;
    for (int j = 0; j < d; ++j) {
      data->wavenumbers.push_back(k[j]);
      s += k[j] * k[j];
    }
    data->squared_norms.push_back(s);

    // Index of -k in the same enumeration; only meaningful in the k_d = 0 plane.
    std::size_t partner = 0;
    for (int j = 0; j < d; ++j) {
      const int len = (j + 1 < d) ? 2 * kmax_[j] - 1 : kmax_[j];
      const int digit = (j + 1 < d) ? -k[j] + kmax_[j] - 1 : k[j];
      partner = partner * static_cast<std::size_t>(len) + static_cast<std::size_t>(digit);
    }
    data->partners.push_back(k[d - 1] == 0 ? partner : data->partners.size());

    int j = d - 1;
    for (; j >= 0; --j) {
      if (++k[j] <= kmax_[j] - 1) break;
      k[j] = (j + 1 < d) ? -(kmax_[j] - 1) : 0;
    }
    if (j < 0) break;
  }
  data_ = std::move(data);
}

ModeSet ModeSet::full(const Grid& grid) {
  std::vector<int> kmax(grid.extents());
  for (int& k : kmax) k /= 2;
  return ModeSet(std::move(kmax));
}

bool ModeSet::compatible_with(const Grid& grid) const {
  if (grid.dim() != dim()) return false;
  for (int j = 0; j < dim(); ++j)
    if (2 * kmax_[j] > grid.extent(j)) return false;
  return true;
}

void ModeSet::require_compatible(const Grid& grid) const {
  if (grid.dim() != dim())
    throw ConfigError("ModeSet: dimension " + std::to_string(dim()) + " does not match grid dimension " +
                      std::to_string(grid.dim()));
  for (int j = 0; j < dim(); ++j) {
    if (2 * kmax_[j] > grid.extent(j))
      throw ConfigError("ModeSet: kmax " + std::to_string(kmax_[j]) + " aliases on grid extent " +
                        std::to_string(grid.extent(j)) + " (need 2*kmax <= n)");
  }
}

double FrequencyLattice::eigenvalue_magnitude(std::size_t m) const {
  return kFourPiSq * static_cast<double>(squared_norms[m]);
}

FrequencyLattice frequency_lattice(const ModeSet& modes) {
  FrequencyLattice lattice;
  lattice.squared_norms.resize(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) lattice.squared_norms[m] = modes.squared_norm(m);
  return lattice;
}

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(ModeSet modes, int channels)
    : modes_(std::move(modes)), channels_(channels), coefficients_(modes_.size() * channels) {
  if (channels < 1) throw ShapeError("SpectralField: channel count must be >= 1");
}

SpectralField::SpectralField(ModeSet modes, int channels, std::vector<Complex> coefficients)
    : modes_(std::move(modes)), channels_(channels), coefficients_(std::move(coefficients)) {
  if (channels < 1) throw ShapeError("SpectralField: channel count must be >= 1");
  if (coefficients_.size() != modes_.size() * static_cast<std::size_t>(channels))
    throw ShapeError("SpectralField: coefficient count does not match modes x channels");
}

std::size_t SpectralField::find_mode(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != modes_.dim()) return modes_.size();
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    bool match = true;
    for (int j = 0; j < modes_.dim() && match; ++j) match = modes_.wavenumber(m, j) == k[j];
    if (match) return m;
  }
  return modes_.size();
}

// ---------------------------------------------------------------------------
// Transforms

SpectralField forward_fft(const Field& f, const ModeSet& modes) {
  const Grid grid(f.extents());
  modes.require_compatible(grid);
  const int c = f.channels();
  const auto& n = grid.extents();

  std::vector<double> in(f.data());
  std::vector<Complex> half(half_spectrum_size(n) * c);
  fftw_execute_dft_r2c(PlanCache::instance().get(n, c, false), in.data(),
                       reinterpret_cast<fftw_complex*>(half.data()));

  const double scale = 1.0 / static_cast<double>(grid.points());
  const auto idx = half_indices(modes, n);
  SpectralField out(modes, c);
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (int ch = 0; ch < c; ++ch) out.at(m, ch) = half[idx[m] * c + ch] * scale;
  return out;
}

Field inverse_fft(const SpectralField& coefficients, const Grid& grid) {
  const ModeSet& modes = coefficients.modes();
  modes.require_compatible(grid);
  const int c = coefficients.channels();
  const int d = grid.dim();
  const auto& n = grid.extents();

  std::vector<Complex> half(half_spectrum_size(n) * c);
  const auto idx = half_indices(modes, n);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (modes.has_implicit_partner(m)) {
      for (int ch = 0; ch < c; ++ch) half[idx[m] * c + ch] = coefficients.at(m, ch);
      continue;
    }
    // k_d = 0 plane: store (F(k) + conj F(-k)) / 2 so the array is Hermitian;
    // the real part of the synthesis is unchanged by this.
    const std::size_t partner = modes.conjugate_partner(m);
    for (int ch = 0; ch < c; ++ch)
      half[idx[m] * c + ch] = 0.5 * (coefficients.at(m, ch) + std::conj(coefficients.at(partner, ch)));
  }

  Field out(n, c);
  fftw_execute_dft_c2r(PlanCache::instance().get(n, c, true), reinterpret_cast<fftw_complex*>(half.data()),
                       out.data().data());
  return out;
}

std::vector<double> diffusion_multiplier(const ModeSet& modes, std::span<const double> tau) {
  const std::size_t c = tau.size();
  std::vector<double> mult(modes.size() * c);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double lambda = kFourPiSq * static_cast<double>(modes.squared_norm(m));
    for (std::size_t ch = 0; ch < c; ++ch)
      mult[m * c + ch] = modes.squared_norm(m) == 0 ? 1.0 : std::exp(-lambda * tau[ch]);
  }
  return mult;
}

SpectralField diffuse(const SpectralField& coefficients, std::span<const double> tau) {
  if (static_cast<int>(tau.size()) != coefficients.channels())
    throw ShapeError("diffuse: need one time per channel");
  for (double t : tau) {
    if (!(t >= 0.0)) throw DomainError("diffuse: diffusion times must be nonnegative");
  }
  const auto mult = diffusion_multiplier(coefficients.modes(), tau);
  SpectralField out = coefficients;
  auto coeffs = out.coefficients();
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= mult[i];
  return out;
}

Field spectral_gradient(const SpectralField& coefficients, const Grid& grid) {
  const ModeSet& modes = coefficients.modes();
  const int c = coefficients.channels();
  const int d = modes.dim();
  SpectralField deriv(modes, c * d);
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (int ch = 0; ch < c; ++ch)
      for (int j = 0; j < d; ++j)
        deriv.at(m, ch * d + j) = Complex(0.0, kTwoPi * modes.wavenumber(m, j)) * coefficients.at(m, ch);
  return inverse_fft(deriv, grid);
}

Field forward_fft_adjoint(const SpectralField& g, const Grid& grid) {
  const ModeSet& modes = g.modes();
  SpectralField halved = g;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (!modes.has_implicit_partner(m)) continue;
    for (int ch = 0; ch < g.channels(); ++ch) halved.at(m, ch) *= 0.5;
  }
  Field out = inverse_fft(halved, grid);
  const double scale = 1.0 / static_cast<double>(grid.points());
  for (double& v : out.data()) v *= scale;
  return out;
}

SpectralField inverse_fft_adjoint(const Field& g, const ModeSet& modes) {
  SpectralField out = forward_fft(g, modes);
  const double points = static_cast<double>(g.points());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double w = modes.has_implicit_partner(m) ? 2.0 * points : points;
    for (int ch = 0; ch < out.channels(); ++ch) out.at(m, ch) *= w;
  }
  return out;
}

double real_inner(const SpectralField& a, const SpectralField& b) {
  if (a.size() != b.size()) throw ShapeError("real_inner: size mismatch");
  double s = 0.0;
  auto ca = a.coefficients();
  auto cb = b.coefficients();
  for (std::size_t i = 0; i < ca.size(); ++i) s += ca[i].real() * cb[i].real() + ca[i].imag() * cb[i].imag();
  return s;
}

Field unretained_part(const Field& f, const ModeSet& modes) {
  const Grid grid(f.extents());
  Field projected = inverse_fft(forward_fft(f, modes), grid);
  Field out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= projected[i];
  return out;
}

}  // namespace dinozaur::spectral
