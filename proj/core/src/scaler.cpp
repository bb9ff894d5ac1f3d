#include <cmath>

#include "dinozaur/data.hpp"
#include "dinozaur/errors.hpp"

namespace dinozaur::data {

StandardScaler StandardScaler::fit(std::span<const Field> fields) {
  if (fields.empty()) throw ConfigError("StandardScaler::fit: no training fields");
  const int c = fields.front().channels();
  StandardScaler s;
  s.mean.assign(c, 0.0);
  s.stddev.assign(c, 0.0);
  s.constant.assign(c, false);
  std::size_t count = 0;
  for (const Field& f : fields) {
    if (f.channels() != c) throw ShapeError("StandardScaler::fit: channel counts differ");
    for (std::size_t p = 0; p < f.points(); ++p)
      for (int k = 0; k < c; ++k) s.mean[k] += f.at(p, k);
    count += f.points();
  }
  for (double& m : s.mean) m /= static_cast<double>(count);
  for (const Field& f : fields)
    for (std::size_t p = 0; p < f.points(); ++p)
      for (int k = 0; k < c; ++k) {
        const double r = f.at(p, k) - s.mean[k];
        s.stddev[k] += r * r;
      }
  for (int k = 0; k < c; ++k) {
    s.stddev[k] = std::sqrt(s.stddev[k] / static_cast<double>(count));
    // Spread at rounding level of the mean counts as constant.
    if (!(s.stddev[k] > 1e-14 * std::max(1.0, std::abs(s.mean[k])))) {
      s.constant[k] = true;
      s.stddev[k] = 0.0;
    }
  }
  return s;
}

Field StandardScaler::apply(const Field& x) const {
  if (x.channels() != channels()) throw ShapeError("StandardScaler::apply: channel mismatch");
  Field z = x;
  for (std::size_t p = 0; p < z.points(); ++p)
    for (int k = 0; k < channels(); ++k)
      if (!constant[k]) z.at(p, k) = (x.at(p, k) - mean[k]) / stddev[k];
  return z;
}

Field StandardScaler::invert(const Field& z) const {
  if (z.channels() != channels()) throw ShapeError("StandardScaler::invert: channel mismatch");
  Field x = z;
  for (std::size_t p = 0; p < x.points(); ++p)
    for (int k = 0; k < channels(); ++k)
      if (!constant[k]) x.at(p, k) = z.at(p, k) * stddev[k] + mean[k];
  return x;
}

Field StandardScaler::invert_spread(const Field& s) const {
  if (s.channels() != channels()) throw ShapeError("StandardScaler::invert_spread: channel mismatch");
  Field x = s;
  for (std::size_t p = 0; p < x.points(); ++p)
    for (int k = 0; k < channels(); ++k)
      if (!constant[k]) x.at(p, k) = s.at(p, k) * stddev[k];
  return x;
}

}  // namespace dinozaur::data
