#include "ldw/attention.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "ldw/random.hpp"

namespace ldw {

namespace {

void require_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) +
                                " values, got " + std::to_string(v.size()));
  }
}

// Saturates to the nearest representable value inside (0, 1) so the open
// interval holds even for extreme logits.
double sigmoid(double z) {
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

}  // namespace

AttentionParams::AttentionParams(std::size_t channels, std::size_t reduction,
                                 std::vector<double> w1, std::vector<double> b1,
                                 std::vector<double> w2, std::vector<double> b2)
    : channels_(channels), reduction_(reduction), w1_(std::move(w1)), b1_(std::move(b1)),
      w2_(std::move(w2)), b2_(std::move(b2)) {
  if (channels == 0 || reduction == 0 || channels % reduction != 0) {
    throw std::invalid_argument("attention reduction " + std::to_string(reduction) +
                                " must divide channel count " + std::to_string(channels));
  }
  const std::size_t h = channels / reduction;
  require_size(w1_, h * channels, "attention w1");
  require_size(b1_, h, "attention b1");
  require_size(w2_, channels * h, "attention w2");
  require_size(b2_, channels, "attention b2");
  for (const auto* v : {&w1_, &b1_, &w2_, &b2_}) {
    if (!std::all_of(v->begin(), v->end(), [](double x) { return std::isfinite(x); })) {
      throw std::invalid_argument("attention parameters must be finite");
    }
  }
}

AttentionParams AttentionParams::zeros(std::size_t channels, std::size_t reduction) {
  if (reduction == 0 || channels % reduction != 0) {
    throw std::invalid_argument("attention reduction must divide channel count");
  }
  const std::size_t h = channels / reduction;
  return AttentionParams(channels, reduction, std::vector<double>(h * channels, 0.0),
                         std::vector<double>(h, 0.0), std::vector<double>(channels * h, 0.0),
                         std::vector<double>(channels, 0.0));
}

AttentionParams AttentionParams::random(std::size_t channels, std::size_t reduction,
                                        std::uint64_t seed) {
  AttentionParams p = zeros(channels, reduction);
  Rng rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(channels));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(p.hidden()));
  for (double& w : p.w1_) w = rng.uniform(-a1, a1);
  for (double& w : p.w2_) w = rng.uniform(-a2, a2);
  return p;
}

std::vector<double> channel_energy(const FeatureMap& map, bool normalize_first,
                                   double epsilon) {
  std::optional<FeatureMap> normalized;
  if (normalize_first) normalized = channel_normalize(map, epsilon);
  const FeatureMap& src = normalized ? *normalized : map;
  std::vector<double> e(map.channels(), 0.0);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    for (double v : src.channel(c)) e[c] += v * v;
  }
  return e;
}

std::vector<double> standardize_energies(std::span<const double> energies, double epsilon) {
  std::vector<double> out(energies.begin(), energies.end());
  if (out.empty()) return out;
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  var /= static_cast<double>(out.size());
  const double denom = std::sqrt(var + epsilon);
  for (double& v : out) v = denom > 0.0 ? (v - mean) / denom : 0.0;
  return out;
}

std::vector<double> se_gate(std::span<const double> energies, const AttentionParams& params) {
  const std::size_t c = params.channels();
  const std::size_t h = params.hidden();
  require_size(energies, c, "se_gate energies");
  std::vector<double> hidden(h);
  for (std::size_t r = 0; r < h; ++r) {
    double s = params.b1()[r];
    for (std::size_t k = 0; k < c; ++k) s += params.w1()[r * c + k] * energies[k];
    hidden[r] = std::max(0.0, s);
  }
  std::vector<double> gates(c);
  for (std::size_t r = 0; r < c; ++r) {
    double s = params.b2()[r];
    for (std::size_t k = 0; k < h; ++k) s += params.w2()[r * h + k] * hidden[k];
    gates[r] = sigmoid(s);
  }
  return gates;
}

FeatureMap apply_attention(const FeatureMap& map, std::span<const double> gates) {
  require_size(gates, map.channels(), "apply_attention gates");
  std::vector<double> out(map.data().begin(), map.data().end());
  const std::size_t n = map.plane_size();
  for (std::size_t c = 0; c < map.channels(); ++c) {
    for (std::size_t i = 0; i < n; ++i) out[c * n + i] *= gates[c];
  }
  return FeatureMap(map.channels(), map.height(), map.width(), std::move(out));
}

EnergyAttention energy_attention(const FeatureMap& map, const AttentionParams& params,
                                 bool normalize_first) {
  auto energies = channel_energy(map, normalize_first);
  auto gates = se_gate(standardize_energies(energies), params);
  auto output = apply_attention(map, gates);
  return {std::move(energies), std::move(gates), std::move(output)};
}

}  // namespace ldw
