#include "dinozaur/field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "dinozaur/errors.hpp"

namespace dinozaur {

namespace {

std::size_t count_points(const std::vector<int>& extents) {
  std::size_t n = 1;
  for (int e : extents) {
    if (e < 1) throw ShapeError("Field: extents must be positive, got " + std::to_string(e));
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

}  // namespace

Field::Field(std::vector<int> extents, int channels)
    : extents_(std::move(extents)), channels_(channels), points_(count_points(extents_)) {
  if (channels_ < 1) throw ShapeError("Field: channel count must be >= 1");
  values_.assign(points_ * static_cast<std::size_t>(channels_), 0.0);
}

Field::Field(std::vector<int> extents, int channels, std::vector<double> values)
    : extents_(std::move(extents)),
      channels_(channels),
      points_(count_points(extents_)),
      values_(std::move(values)) {
  if (channels_ < 1) throw ShapeError("Field: channel count must be >= 1");
  if (values_.size() != points_ * static_cast<std::size_t>(channels_)) {
    throw ShapeError("Field: expected " + std::to_string(points_ * channels_) + " values, got " +
                     std::to_string(values_.size()));
  }
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field Field::channel(int c) const {
  if (c < 0 || c >= channels_) throw ShapeError("Field::channel: index out of range");
  Field out(extents_, 1);
  for (std::size_t p = 0; p < points_; ++p) out[p] = at(p, c);
  return out;
}

std::vector<double> Field::channel_means() const {
  std::vector<double> mean(static_cast<std::size_t>(channels_), 0.0);
  for (std::size_t p = 0; p < points_; ++p)
    for (int c = 0; c < channels_; ++c) mean[c] += at(p, c);
  for (double& m : mean) m /= static_cast<double>(points_);
  return mean;
}

double l2_norm(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Field& a, const Field& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dinozaur
