#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldw/attention.hpp"
#include "ldw/feature_map.hpp"
#include "ldw/filters.hpp"
#include "ldw/training.hpp"
#include "ldw/transform.hpp"

namespace ldw::io {

/// Malformed or unreadable input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Tensor container
//
//   "LDWT" | version u8 (1) | dtype u8 (0 = f32, 1 = f64) | count u32
//   count x { name_len u8 | name | C u32 | H u32 | W u32 | C*H*W values }
//
// Integers and values are little-endian; values are channel-major, row-major.
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

struct NamedTensor {
  std::string name;
  FeatureMap map;
};

struct TensorContainer {
  DType dtype = DType::f64;
  std::vector<NamedTensor> tensors;

  /// Tensor by name, or nullptr.
  const FeatureMap* find(std::string_view name) const;
  /// Tensor by name; throws FormatError naming the missing tensor.
  const FeatureMap& get(std::string_view name) const;
};

std::vector<std::uint8_t> encode_container(const TensorContainer& container);
TensorContainer decode_container(std::span<const std::uint8_t> bytes);

TensorContainer read_container(const std::filesystem::path& path);
void write_container(const std::filesystem::path& path, const TensorContainer& container);

/// Subbands as tensors named LL, LH, HL, HH.
TensorContainer subbands_to_container(const SubbandSet& subbands, DType dtype = DType::f64);
SubbandSet subbands_from_container(const TensorContainer& container);

/// Attention weights as tensors w1 (1 x C/r x C), b1 (1 x 1 x C/r),
/// w2 (1 x C x C/r), b2 (1 x 1 x C).
TensorContainer attention_to_container(const AttentionParams& params,
                                       DType dtype = DType::f64);
AttentionParams attention_from_container(const TensorContainer& container);

// ---------------------------------------------------------------------------
// PGM (P2 ASCII / P5 binary, maxval up to 65535). Pixels map to [0, 1].
// ---------------------------------------------------------------------------

FeatureMap decode_pgm(std::span<const std::uint8_t> bytes);
FeatureMap read_pgm(const std::filesystem::path& path);
/// Writes an 8-bit P5 image of channel 0, clamped to [0, 1] and rounded.
void write_pgm(const std::filesystem::path& path, const FeatureMap& map);
/// The map a PGM round trip produces: clamped to [0, 1] and quantized to 1/255.
FeatureMap quantize_8bit(const FeatureMap& map);

bool looks_like_pgm(std::span<const std::uint8_t> bytes);

/// Reads a PGM or a single-tensor container, detected from the file header.
FeatureMap read_map(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Filter text format: "K", then K low taps, then K high taps, one line each.
// ---------------------------------------------------------------------------

std::string format_filters(const WaveletFilterPair& pair);
WaveletFilterPair parse_filters(const std::string& text);
WaveletFilterPair read_filters(const std::filesystem::path& path);
void write_filters(const std::filesystem::path& path, const WaveletFilterPair& pair);

/// One tab-separated line per epoch: epoch, task, wavelet, total, four residuals.
std::string format_train_log(const TrainReport& report);
std::vector<EpochRecord> parse_train_log(const std::string& text);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ldw::io
