#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ldw/feature_map.hpp"
#include "ldw/filters.hpp"
#include "ldw/transform.hpp"

namespace ldw {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 400;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  WaveletWeights wavelet_weights{};
  double task_weight = 1.0;
  std::uint64_t seed = 0;
  /// Start from random_constrained() taps; otherwise unprojected uniform taps.
  bool pretrain = true;
  /// Multiply the learning rate by 0.1 every 100 epochs.
  bool step_decay = false;
  PaddingMode padding = PaddingMode::circular;

  void validate() const;
  /// Learning rate in effect during `epoch` (0-based).
  double learning_rate_at(std::size_t epoch) const;
};

/// Binary negative log-likelihood, summed over the batch. Probabilities are
/// clamped to [1e-12, 1 - 1e-12].
double cross_entropy(std::span<const double> labels, std::span<const double> probabilities);

/// task_weight * task_loss + loss_wavelet(pair, wavelet_weights).
double total_loss(double task_loss, const WaveletFilterPair& pair, const TrainConfig& config);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

/// One bias-corrected Adam update with decoupled weight decay:
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config, double learning_rate);
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, const TrainConfig& config) {
  adam_step(params, grads, state, config, config.learning_rate);
}

/// Mean squared roundtrip error of reconstruct(decompose(x)) over all images.
double reconstruction_loss(std::span<const FeatureMap> images, const WaveletFilterPair& pair,
                           PaddingMode padding = PaddingMode::circular);

struct Objective {
  double task;
  double wavelet;
  double total;
};

Objective evaluate_objective(std::span<const FeatureMap> images,
                             const WaveletFilterPair& pair, const TrainConfig& config);

/// Gradient of Objective::total with respect to the taps.
FilterGradient objective_gradient(std::span<const FeatureMap> images,
                                  const WaveletFilterPair& pair, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch;
  double task_loss;
  double wavelet_loss;
  double total_loss;
  ConstraintResiduals residuals;
};

struct TrainReport {
  std::vector<EpochRecord> history;
  WaveletFilterPair final_pair;
};

/// Learns filter taps by full-batch Adam on the reconstruction objective plus
/// the wavelet constraint losses. Each record holds the losses of the taps the
/// epoch started from, so record 0 describes the initialization.
TrainReport train_filters(std::span<const FeatureMap> images, std::size_t taps,
                          const TrainConfig& config);

/// As above, starting from the given taps instead of a seeded draw.
TrainReport train_filters(std::span<const FeatureMap> images,
                          const WaveletFilterPair& initial, const TrainConfig& config);

}  // namespace ldw
