#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ldw {

/// Thrown when a map's spatial dimensions do not support the requested operation
/// (odd sizes for stride-2 work, mismatched shapes).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A C x H x W tensor of finite 64-bit reals, stored channel-major then row-major.
///
/// Construction validates the element count and rejects NaN/Inf, so every
/// FeatureMap in circulation is well formed. Instances are plain values.
class FeatureMap {
 public:
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
             std::vector<double> data);

  static FeatureMap zeros(std::size_t channels, std::size_t height, std::size_t width);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const FeatureMap& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  // Used by zeros() and internal producers that guarantee finiteness.
  struct Unchecked {};
  FeatureMap(Unchecked, std::size_t channels, std::size_t height, std::size_t width,
             std::vector<double> data);

  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

/// Validating factory; equivalent to the FeatureMap constructor.
FeatureMap make_feature_map(std::size_t channels, std::size_t height, std::size_t width,
                            std::vector<double> data);

FeatureMap avg_pool_2x2(const FeatureMap& map);
FeatureMap max_pool_2x2(const FeatureMap& map);

/// Per-channel spatial standardization: (x - mean) / sqrt(var + epsilon), using
/// the population variance. Constant channels become all zeros when epsilon > 0.
FeatureMap channel_normalize(const FeatureMap& map, double epsilon = 1e-5);

/// Returned by psnr() when the two maps are identical (zero MSE).
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Peak signal-to-noise ratio in dB, 10 log10(peak^2 / MSE).
double psnr(const FeatureMap& reference, const FeatureMap& test, double peak);

inline bool psnr_is_identical(double value) { return value == kPsnrIdentical; }

}  // namespace ldw
