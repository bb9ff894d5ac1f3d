#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dinozaur {

/// Real multi-channel samples on a uniform grid.
///
/// Values are row-major over the spatial extents with the channel index
/// fastest: value(point, c) lives at values[point * channels + c]. A field with
/// no extents has a single point and doubles as a plain vector.
class Field {
 public:
  Field() = default;
  Field(std::vector<int> extents, int channels);
  Field(std::vector<int> extents, int channels, std::vector<double> values);

  const std::vector<int>& extents() const { return extents_; }
  int dim() const { return static_cast<int>(extents_.size()); }
  int channels() const { return channels_; }
  std::size_t points() const { return points_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double& at(std::size_t point, int c) { return values_[point * channels_ + c]; }
  double at(std::size_t point, int c) const { return values_[point * channels_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool same_shape(const Field& other) const {
    return extents_ == other.extents_ && channels_ == other.channels_;
  }
  bool all_finite() const;

  /// Single channel c as a one-channel field.
  Field channel(int c) const;
  /// Per-channel spatial mean.
  std::vector<double> channel_means() const;

 private:
  std::vector<int> extents_;
  int channels_ = 0;
  std::size_t points_ = 0;
  std::vector<double> values_;
};

/// Euclidean norm over all values.
double l2_norm(const Field& f);
/// max |a - b| over all values; shapes must agree.
double max_abs_diff(const Field& a, const Field& b);

}  // namespace dinozaur
