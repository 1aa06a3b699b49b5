#include "ldw/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ldw {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
  if (!(task_weight >= 0.0)) throw std::invalid_argument("task weight must be >= 0");
  wavelet_weights.validate();
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  if (!step_decay) return learning_rate;
  return learning_rate * std::pow(0.1, static_cast<double>(epoch / 100));
}

double cross_entropy(std::span<const double> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size()) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                " labels vs " + std::to_string(probabilities.size()) +
                                " probabilities");
  }
  constexpr double kClamp = 1e-12;
  double loss = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double y = labels[b];
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("cross_entropy: labels must be 0 or 1");
    const double p = std::clamp(probabilities[b], kClamp, 1.0 - kClamp);
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return loss;
}

double total_loss(double task_loss, const WaveletFilterPair& pair, const TrainConfig& config) {
  return config.task_weight * task_loss + loss_wavelet(pair, config.wavelet_weights);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config, double learning_rate) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
  }
  state.step += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= learning_rate * (m_hat / (std::sqrt(v_hat) + config.adam_epsilon) +
                                  config.weight_decay * params[i]);
  }
}

namespace {

void check_images(std::span<const FeatureMap> images) {
  if (images.empty()) throw std::invalid_argument("training needs at least one image");
  for (const auto& img : images) {
    if (img.height() % 2 != 0 || img.width() % 2 != 0) {
      throw DimensionError("training images must have even height and width");
    }
  }
}

std::vector<double> residual(const FeatureMap& image, const WaveletFilterPair& pair,
                             PaddingMode padding) {
  const FeatureMap rec = reconstruct(decompose(image, pair, padding), pair, padding);
  std::vector<double> r(image.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rec.data()[i] - image.data()[i];
  return r;
}

}  // namespace

double reconstruction_loss(std::span<const FeatureMap> images, const WaveletFilterPair& pair,
                           PaddingMode padding) {
  check_images(images);
  double loss = 0.0;
  for (const auto& img : images) {
    double sse = 0.0;
    for (double d : residual(img, pair, padding)) sse += d * d;
    loss += sse / static_cast<double>(img.size());
  }
  return loss / static_cast<double>(images.size());
}

Objective evaluate_objective(std::span<const FeatureMap> images,
                             const WaveletFilterPair& pair, const TrainConfig& config) {
  const double task = reconstruction_loss(images, pair, config.padding);
  const double wavelet = loss_wavelet(pair, config.wavelet_weights);
  return {task, wavelet, config.task_weight * task + wavelet};
}

// The roundtrip R_p(D_p(x)) depends on the taps through both stages:
//   d<g, R_p(s)>/dp at s = D_p(x)  plus  d<R_p^T g, D_p(x)>/dp = d<D_p(g), D_p(x)>/dp
// with the second factor held fixed.
FilterGradient objective_gradient(std::span<const FeatureMap> images,
                                  const WaveletFilterPair& pair, const TrainConfig& config) {
  check_images(images);
  const PaddingMode padding = config.padding;
  FilterGradient grad(pair.taps());
  if (config.task_weight != 0.0) {
    for (const auto& img : images) {
      const SubbandSet bands = decompose(img, pair, padding);
      const FeatureMap rec = reconstruct(bands, pair, padding);
      const double scale = config.task_weight * 2.0 /
                           (static_cast<double>(img.size()) * static_cast<double>(images.size()));
      std::vector<double> g(img.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = scale * (rec.data()[i] - img.data()[i]);
      }
      const FeatureMap upstream(img.channels(), img.height(), img.width(), std::move(g));
      grad += reconstruct_filter_jvp(bands, pair, upstream, padding);
      grad += decompose_filter_jvp(img, pair, decompose(upstream, pair, padding), padding);
    }
  }
  grad += grad_loss_wavelet(pair, config.wavelet_weights);
  return grad;
}

TrainReport train_filters(std::span<const FeatureMap> images, std::size_t taps,
                          const TrainConfig& config) {
  const WaveletFilterPair initial = config.pretrain ? random_constrained(taps, config.seed)
                                                    : random_unconstrained(taps, config.seed);
  return train_filters(images, initial, config);
}

TrainReport train_filters(std::span<const FeatureMap> images,
                          const WaveletFilterPair& initial, const TrainConfig& config) {
  config.validate();
  check_images(images);
  std::vector<double> params = initial.flatten();
  AdamState state(params.size());
  TrainReport report{{}, initial};
  report.history.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const WaveletFilterPair pair = WaveletFilterPair::unflatten(params);
    const Objective obj = evaluate_objective(images, pair, config);
    report.history.push_back(
        {epoch, obj.task, obj.wavelet, obj.total, constraint_residuals(pair)});

    const FilterGradient grad = objective_gradient(images, pair, config);
    std::vector<double> flat(grad.low);
    flat.insert(flat.end(), grad.high.begin(), grad.high.end());
    adam_step(params, flat, state, config, config.learning_rate_at(epoch));
  }
  report.final_pair = WaveletFilterPair::unflatten(params);
  return report;
}

}  // namespace ldw
