#include <cmath>

#include "dinozaur/data.hpp"
#include "dinozaur/errors.hpp"
#include "dinozaur/rng.hpp"

namespace dinozaur::data {

using spectral::Grid;
using spectral::ModeSet;
using spectral::SpectralField;

void RandomFieldSpec::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ConfigError("random field: amplitude must be >= 0");
  if (!std::isfinite(alpha)) throw ConfigError("random field: alpha must be finite");
  if (kmax < 0) throw ConfigError("random field: kmax must be >= 0");
}

Field sample_random_field(const RandomFieldSpec& spec, const Grid& grid, int channels) {
  spec.validate();
  if (channels < 1) throw ConfigError("random field: channels must be >= 1");
  std::vector<int> kmax(grid.dim());
  for (int j = 0; j < grid.dim(); ++j) {
    const int cap = grid.extent(j) / 2;
    kmax[j] = spec.kmax > 0 ? std::min(spec.kmax, cap) : std::max(1, grid.extent(j) / 4);
  }
  const ModeSet modes(kmax);
  SpectralField coeffs(modes, channels);
  Rng rng(spec.seed);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double scale = spec.amplitude * std::pow(1.0 + modes.squared_norm(m), -0.5 * spec.alpha);
    for (int c = 0; c < channels; ++c) {
      const double re = rng.normal();
      const double im = rng.normal();
      coeffs.at(m, c) = scale * spectral::Complex(re, im);
    }
  }
  if (spec.zero_mean) {
    const std::vector<int> zero(grid.dim(), 0);
    const std::size_t m0 = coeffs.find_mode(zero);
    for (int c = 0; c < channels; ++c) coeffs.at(m0, c) = 0.0;
  }
  return spectral::inverse_fft(coeffs, grid);
}

}  // namespace dinozaur::data
