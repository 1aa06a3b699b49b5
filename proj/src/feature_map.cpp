#include "ldw/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ldw {

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                       std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (channels == 0 || height == 0 || width == 0) {
    throw DimensionError("feature map dimensions must be positive, got " +
                         std::to_string(channels) + "x" + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  const std::size_t expected = channels * height * width;
  if (data_.size() != expected) {
    throw std::invalid_argument("feature map length mismatch: expected " +
                                std::to_string(expected) + " values for " +
                                std::to_string(channels) + "x" + std::to_string(height) +
                                "x" + std::to_string(width) + ", got " +
                                std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::invalid_argument("feature map contains non-finite value at index " +
                                  std::to_string(i));
    }
  }
}

FeatureMap::FeatureMap(Unchecked, std::size_t channels, std::size_t height,
                       std::size_t width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {}

FeatureMap FeatureMap::zeros(std::size_t channels, std::size_t height, std::size_t width) {
  if (channels == 0 || height == 0 || width == 0) {
    throw DimensionError("feature map dimensions must be positive");
  }
  return FeatureMap(Unchecked{}, channels, height, width,
                    std::vector<double>(channels * height * width, 0.0));
}

FeatureMap make_feature_map(std::size_t channels, std::size_t height, std::size_t width,
                            std::vector<double> data) {
  return FeatureMap(channels, height, width, std::move(data));
}

namespace {

void require_even(const FeatureMap& map, const char* op) {
  if (map.height() % 2 != 0 || map.width() % 2 != 0) {
    throw DimensionError(std::string(op) + " requires even height and width, got " +
                         std::to_string(map.height()) + "x" + std::to_string(map.width()));
  }
}

template <typename Reduce>
FeatureMap pool_2x2(const FeatureMap& map, const char* op, Reduce reduce) {
  require_even(map, op);
  const std::size_t oh = map.height() / 2;
  const std::size_t ow = map.width() / 2;
  std::vector<double> out;
  out.reserve(map.channels() * oh * ow);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        out.push_back(reduce(map.at(c, 2 * y, 2 * x), map.at(c, 2 * y, 2 * x + 1),
                             map.at(c, 2 * y + 1, 2 * x), map.at(c, 2 * y + 1, 2 * x + 1)));
      }
    }
  }
  return FeatureMap(map.channels(), oh, ow, std::move(out));
}

}  // namespace

FeatureMap avg_pool_2x2(const FeatureMap& map) {
  return pool_2x2(map, "avg_pool_2x2",
                  [](double a, double b, double c, double d) { return (a + b + c + d) / 4.0; });
}

FeatureMap max_pool_2x2(const FeatureMap& map) {
  return pool_2x2(map, "max_pool_2x2", [](double a, double b, double c, double d) {
    return std::max({a, b, c, d});
  });
}

FeatureMap channel_normalize(const FeatureMap& map, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("channel_normalize: epsilon must be finite and >= 0");
  }
  std::vector<double> out(map.data().begin(), map.data().end());
  const std::size_t n = map.plane_size();
  for (std::size_t c = 0; c < map.channels(); ++c) {
    auto plane = std::span<double>(out).subspan(c * n, n);
    double mean = 0.0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : plane) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double denom = std::sqrt(var + epsilon);
    for (double& v : plane) v = denom > 0.0 ? (v - mean) / denom : 0.0;
  }
  return FeatureMap(map.channels(), map.height(), map.width(), std::move(out));
}

double psnr(const FeatureMap& reference, const FeatureMap& test, double peak) {
  if (!reference.same_shape(test)) {
    throw DimensionError("psnr: shape mismatch");
  }
  if (!(peak > 0.0)) {
    throw std::invalid_argument("psnr: peak must be positive");
  }
  double sse = 0.0;
  auto a = reference.data();
  auto b = test.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrIdentical;
  const double mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace ldw
