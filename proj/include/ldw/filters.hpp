#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ldw {

/// Learnable 1-D analysis filters: a low-pass and a high-pass sequence of K taps.
///
/// Taps must be finite and 2 <= K <= kMaxTaps. The wavelet constraints
/// (unit low-pass energy, sum sqrt(2); zero-sum, unit-energy high-pass) are
/// soft targets, measured by constraint_residuals() and the loss terms below.
class WaveletFilterPair {
 public:
  static constexpr std::size_t kMaxTaps = 16;

  WaveletFilterPair(std::vector<double> low, std::vector<double> high);

  std::size_t taps() const noexcept { return low_.size(); }
  std::span<const double> low() const noexcept { return low_; }
  std::span<const double> high() const noexcept { return high_; }

  /// Concatenated [low..., high...], the layout used by the optimizer.
  std::vector<double> flatten() const;
  static WaveletFilterPair unflatten(std::span<const double> params);

  friend bool operator==(const WaveletFilterPair&, const WaveletFilterPair&) = default;

 private:
  std::vector<double> low_;
  std::vector<double> high_;
};

/// Orthonormal Haar pair {1/sqrt2, 1/sqrt2} / {1/sqrt2, -1/sqrt2}.
WaveletFilterPair haar();

/// Random pair that satisfies sum(low) = sqrt2, |low| = 1, sum(high) = 0,
/// |high| = 1. Deterministic in (taps, seed).
WaveletFilterPair random_constrained(std::size_t taps, std::uint64_t seed);

/// Taps drawn uniformly from [-1, 1] with no projection.
WaveletFilterPair random_unconstrained(std::size_t taps, std::uint64_t seed);

struct ConstraintResiduals {
  double low_energy;  // sum(low^2) - 1
  double low_sum;     // sum(low) - sqrt2
  double high_sum;    // sum(high)
  double high_energy; // sum(high^2) - 1

  double max_abs() const;
};

ConstraintResiduals constraint_residuals(const WaveletFilterPair& pair);

/// Per-term weights of the combined wavelet loss; all default to 1.
struct WaveletWeights {
  double low = 1.0;
  double high = 1.0;
  double reverse = 1.0;
  double sym = 1.0;

  /// Throws std::invalid_argument on a negative or non-finite weight.
  void validate() const;
};

double loss_low(const WaveletFilterPair& pair);
double loss_high(const WaveletFilterPair& pair);
double loss_reverse(const WaveletFilterPair& pair);
/// Palindrome penalty; tap i is paired with tap K-1-i.
double loss_sym(const WaveletFilterPair& pair);
double loss_wavelet(const WaveletFilterPair& pair, const WaveletWeights& weights = {});

/// Gradient with respect to the low and high taps.
struct FilterGradient {
  std::vector<double> low;
  std::vector<double> high;

  explicit FilterGradient(std::size_t taps = 0) : low(taps, 0.0), high(taps, 0.0) {}

  FilterGradient& operator+=(const FilterGradient& other);
  FilterGradient& operator*=(double scale);
};

FilterGradient grad_loss_wavelet(const WaveletFilterPair& pair,
                                 const WaveletWeights& weights = {});

}  // namespace ldw
