#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ldw/feature_map.hpp"

namespace ldw {

/// Two-layer squeeze-and-excitation weights: C -> C/r (relu) -> C (sigmoid).
/// Matrices are row-major; w1 is (C/r) x C and w2 is C x (C/r).
class AttentionParams {
 public:
  AttentionParams(std::size_t channels, std::size_t reduction, std::vector<double> w1,
                  std::vector<double> b1, std::vector<double> w2, std::vector<double> b2);

  static AttentionParams zeros(std::size_t channels, std::size_t reduction = 4);
  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static AttentionParams random(std::size_t channels, std::size_t reduction,
                                std::uint64_t seed);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t reduction() const noexcept { return reduction_; }
  std::size_t hidden() const noexcept { return channels_ / reduction_; }

  std::span<const double> w1() const noexcept { return w1_; }
  std::span<const double> b1() const noexcept { return b1_; }
  std::span<const double> w2() const noexcept { return w2_; }
  std::span<const double> b2() const noexcept { return b2_; }

 private:
  std::size_t channels_;
  std::size_t reduction_;
  std::vector<double> w1_, b1_, w2_, b2_;
};

/// Sum of squared values per channel, optionally after channel_normalize().
/// With the default epsilon of 0, normalized energies do not depend on the
/// input's scale; constant channels still normalize to zeros.
std::vector<double> channel_energy(const FeatureMap& map, bool normalize_first,
                                   double epsilon = 0.0);

/// Zero-mean, unit-variance rescaling across channels; all zeros when the
/// energies are constant.
std::vector<double> standardize_energies(std::span<const double> energies,
                                         double epsilon = 1e-5);

/// sigmoid(w2 * relu(w1 * e + b1) + b2). Every gate is strictly inside (0, 1).
std::vector<double> se_gate(std::span<const double> energies, const AttentionParams& params);

/// Scales channel c by gates[c].
FeatureMap apply_attention(const FeatureMap& map, std::span<const double> gates);

struct EnergyAttention {
  std::vector<double> energies;  // raw per-channel energies
  std::vector<double> gates;
  FeatureMap output;
};

/// Full energy-attention block: energies, standardized across channels, gated
/// through the SE mapping and applied to the input.
EnergyAttention energy_attention(const FeatureMap& map, const AttentionParams& params,
                                 bool normalize_first);

}  // namespace ldw
