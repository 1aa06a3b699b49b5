#include "ldw/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ldw/random.hpp"

namespace ldw {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double energy(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_taps(std::size_t taps) {
  if (taps < 2 || taps > WaveletFilterPair::kMaxTaps) {
    throw std::invalid_argument("filter tap count must be in [2, " +
                                std::to_string(WaveletFilterPair::kMaxTaps) + "], got " +
                                std::to_string(taps));
  }
}

double mirror_penalty(std::span<const double> v) {
  const std::size_t k = v.size();
  double s = 0.0;
  for (std::size_t i = 0; i < k / 2; ++i) {
    const double d = v[i] - v[k - 1 - i];
    s += d * d;
  }
  return s;
}

void add_mirror_gradient(std::span<const double> v, double weight, std::vector<double>& g) {
  const std::size_t k = v.size();
  for (std::size_t i = 0; i < k / 2; ++i) {
    const double d = 2.0 * weight * (v[i] - v[k - 1 - i]);
    g[i] += d;
    g[k - 1 - i] -= d;
  }
}

// Zero-mean unit vector from a random draw; redraws the (measure-zero) constant case.
std::vector<double> random_zero_mean_unit(std::size_t taps, Rng& rng) {
  for (;;) {
    std::vector<double> v(taps);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    const double mean = sum(v) / static_cast<double>(taps);
    for (double& x : v) x -= mean;
    const double norm = std::sqrt(energy(v));
    if (norm > 1e-6) {
      for (double& x : v) x /= norm;
      return v;
    }
  }
}

}  // namespace

WaveletFilterPair::WaveletFilterPair(std::vector<double> low, std::vector<double> high)
    : low_(std::move(low)), high_(std::move(high)) {
  check_taps(low_.size());
  if (high_.size() != low_.size()) {
    throw std::invalid_argument("low and high filters must have the same length (" +
                                std::to_string(low_.size()) + " vs " +
                                std::to_string(high_.size()) + ")");
  }
  auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(low_.begin(), low_.end(), finite) ||
      !std::all_of(high_.begin(), high_.end(), finite)) {
    throw std::invalid_argument("filter taps must be finite");
  }
}

std::vector<double> WaveletFilterPair::flatten() const {
  std::vector<double> out(low_);
  out.insert(out.end(), high_.begin(), high_.end());
  return out;
}

WaveletFilterPair WaveletFilterPair::unflatten(std::span<const double> params) {
  if (params.size() % 2 != 0) {
    throw std::invalid_argument("flattened filter pair must have even length");
  }
  const std::size_t k = params.size() / 2;
  return WaveletFilterPair(std::vector<double>(params.begin(), params.begin() + k),
                           std::vector<double>(params.begin() + k, params.end()));
}

WaveletFilterPair haar() {
  const double h = kSqrt2 / 2.0;
  return WaveletFilterPair({h, h}, {h, -h});
}

// The low filter is sqrt2/K * ones plus a zero-mean component scaled so the total
// energy is 2/K + t^2 = 1; the high filter is a zero-mean unit vector.
WaveletFilterPair random_constrained(std::size_t taps, std::uint64_t seed) {
  check_taps(taps);
  Rng rng(seed);
  const double k = static_cast<double>(taps);
  const double t = std::sqrt(std::max(0.0, 1.0 - 2.0 / k));
  std::vector<double> low = random_zero_mean_unit(taps, rng);
  for (double& x : low) x = kSqrt2 / k + t * x;
  std::vector<double> high = random_zero_mean_unit(taps, rng);
  return WaveletFilterPair(std::move(low), std::move(high));
}

WaveletFilterPair random_unconstrained(std::size_t taps, std::uint64_t seed) {
  check_taps(taps);
  Rng rng(seed);
  std::vector<double> low(taps), high(taps);
  for (double& x : low) x = rng.uniform(-1.0, 1.0);
  for (double& x : high) x = rng.uniform(-1.0, 1.0);
  return WaveletFilterPair(std::move(low), std::move(high));
}

double ConstraintResiduals::max_abs() const {
  return std::max({std::abs(low_energy), std::abs(low_sum), std::abs(high_sum),
                   std::abs(high_energy)});
}

ConstraintResiduals constraint_residuals(const WaveletFilterPair& pair) {
  return {energy(pair.low()) - 1.0, sum(pair.low()) - kSqrt2, sum(pair.high()),
          energy(pair.high()) - 1.0};
}

void WaveletWeights::validate() const {
  for (double w : {low, high, reverse, sym}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("wavelet loss weights must be finite and non-negative");
    }
  }
}

double loss_low(const WaveletFilterPair& pair) {
  const double e = energy(pair.low()) - 1.0;
  const double s = sum(pair.low()) - kSqrt2;
  return e * e + s * s;
}

double loss_high(const WaveletFilterPair& pair) {
  const double e = energy(pair.high()) - 1.0;
  const double s = sum(pair.high());
  return e * e + s * s;
}

double loss_reverse(const WaveletFilterPair& pair) {
  const double r = energy(pair.low()) + energy(pair.high()) - 2.0;
  return r * r;
}

double loss_sym(const WaveletFilterPair& pair) {
  return mirror_penalty(pair.low()) + mirror_penalty(pair.high());
}

double loss_wavelet(const WaveletFilterPair& pair, const WaveletWeights& weights) {
  weights.validate();
  return weights.low * loss_low(pair) + weights.high * loss_high(pair) +
         weights.reverse * loss_reverse(pair) + weights.sym * loss_sym(pair);
}

FilterGradient& FilterGradient::operator+=(const FilterGradient& other) {
  if (other.low.size() != low.size()) {
    throw std::invalid_argument("filter gradient size mismatch");
  }
  for (std::size_t i = 0; i < low.size(); ++i) {
    low[i] += other.low[i];
    high[i] += other.high[i];
  }
  return *this;
}

FilterGradient& FilterGradient::operator*=(double scale) {
  for (double& g : low) g *= scale;
  for (double& g : high) g *= scale;
  return *this;
}

FilterGradient grad_loss_wavelet(const WaveletFilterPair& pair, const WaveletWeights& weights) {
  weights.validate();
  const auto low = pair.low();
  const auto high = pair.high();
  const double low_energy = energy(low) - 1.0;
  const double low_sum = sum(low) - kSqrt2;
  const double high_energy = energy(high) - 1.0;
  const double high_sum = sum(high);
  const double total_energy = energy(low) + energy(high) - 2.0;

  FilterGradient g(pair.taps());
  for (std::size_t i = 0; i < pair.taps(); ++i) {
    g.low[i] = weights.low * (4.0 * low_energy * low[i] + 2.0 * low_sum) +
               weights.reverse * 4.0 * total_energy * low[i];
    g.high[i] = weights.high * (4.0 * high_energy * high[i] + 2.0 * high_sum) +
                weights.reverse * 4.0 * total_energy * high[i];
  }
  add_mirror_gradient(low, weights.sym, g.low);
  add_mirror_gradient(high, weights.sym, g.high);
  return g;
}

}  // namespace ldw
