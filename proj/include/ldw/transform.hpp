#pragma once

#include <cstddef>
#include <cstdint>

#include "ldw/feature_map.hpp"
#include "ldw/filters.hpp"

namespace ldw {

/// Boundary rule for taps that run past the edge of the map.
///   circular: index wraps modulo the length. The filter bank is an exact
///             orthogonal operator for orthonormal taps under this rule.
///   reflect:  mirror about the edge samples without repeating them
///             (... x2 x1 | x0 x1 ... xn-1 | xn-2 xn-3 ...).
enum class PaddingMode { circular, reflect };

/// Four half-resolution subbands. The first letter names the horizontal filter
/// and the second the vertical one.
struct SubbandSet {
  FeatureMap ll;
  FeatureMap lh;
  FeatureMap hl;
  FeatureMap hh;
  std::size_t source_height;
  std::size_t source_width;

  /// Builds a set from four equally shaped maps; source dims are twice theirs.
  static SubbandSet from_maps(FeatureMap ll, FeatureMap lh, FeatureMap hl, FeatureMap hh);
  static SubbandSet zeros(std::size_t channels, std::size_t source_height,
                          std::size_t source_width);

  /// Sum over the four bands of the elementwise products.
  double dot(const SubbandSet& other) const;
};

/// Running count of multiply-accumulates executed by a transform call.
struct MacCounter {
  std::uint64_t macs = 0;
};

/// Separable single-level decomposition. Each output sample (x', y') draws on
/// input columns 2x'+i and rows 2y'+j for taps i, j = 0..K-1.
SubbandSet decompose(const FeatureMap& map, const WaveletFilterPair& pair,
                     PaddingMode padding = PaddingMode::circular,
                     MacCounter* counter = nullptr);

/// Adjoint of decompose: zero-insertion upsampling and correlation with the
/// same taps, vertical stage first, summing the four branches. This is the
/// exact inverse when the filter bank is orthonormal under circular padding.
FeatureMap reconstruct(const SubbandSet& subbands, const WaveletFilterPair& pair,
                       PaddingMode padding = PaddingMode::circular);

/// Reference decomposition with one stride-2 K x K correlation per subband,
/// using the outer-product kernels. Costs K^2 W H MACs per channel.
SubbandSet decompose_dense2d(const FeatureMap& map, const WaveletFilterPair& pair,
                             PaddingMode padding = PaddingMode::circular,
                             MacCounter* counter = nullptr);

/// Gradient of <upstream, decompose(map, pair)> with respect to the taps.
FilterGradient decompose_filter_jvp(const FeatureMap& map, const WaveletFilterPair& pair,
                                    const SubbandSet& upstream,
                                    PaddingMode padding = PaddingMode::circular);

/// Gradient of <upstream, reconstruct(subbands, pair)> with respect to the taps.
FilterGradient reconstruct_filter_jvp(const SubbandSet& subbands,
                                      const WaveletFilterPair& pair,
                                      const FeatureMap& upstream,
                                      PaddingMode padding = PaddingMode::circular);

struct FlopReport {
  std::uint64_t separable_macs;
  std::uint64_t dense_macs;
  double ratio;  // dense / separable == K / 2
};

FlopReport flop_report(std::size_t taps, std::size_t channels, std::size_t height,
                       std::size_t width);

}  // namespace ldw
