#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "dmd/core_model.hpp"

namespace dmd {

inline constexpr int kDescriptorGrid = 8;
inline constexpr int kGridCells = kDescriptorGrid * kDescriptorGrid;
inline constexpr int kOverlapGrid = 64;

struct DescriptorConfig {
  int channels = 6;  // C, per branch
  int grid = kDescriptorGrid;
};

// Channel-major, then row, then column. Every flattening in the library
// (inner products, bit packing, file payloads) uses this order.
inline std::size_t FlatIndex(int channel, int row, int col) {
  return static_cast<std::size_t>(channel) * kGridCells + static_cast<std::size_t>(row) * kDescriptorGrid + col;
}

// Bits of the 64x64 bilinear upsampling of an 8x8 mask that reach 0.5,
// one 64-bit word per fine row.
using OverlapBitmap = std::array<std::uint64_t, kOverlapGrid>;

OverlapBitmap UpsampledMaskBits(std::span<const float, kGridCells> mask);

inline int OverlapCount(const OverlapBitmap& a, const OverlapBitmap& b) {
  int count = 0;
  for (int i = 0; i < kOverlapGrid; ++i) count += std::popcount(a[i] & b[i]);
  return count;
}

// f = (f_t ⊕ f_m) ⊙ h, stored pre-masked in single precision so that template
// files round-trip exactly.
class DenseDescriptor {
 public:
  DenseDescriptor() = default;
  /// `features` has 2C*64 entries; `mask` has values in [0,1].
  DenseDescriptor(int channels, std::vector<float> features, std::array<float, kGridCells> mask, Minutia anchor);

  int channels() const { return channels_; }  // C
  int depth() const { return 2 * channels_; }  // 2C
  std::span<const float> features() const { return features_; }
  const std::array<float, kGridCells>& mask() const { return mask_; }
  const Minutia& anchor() const { return anchor_; }
  const OverlapBitmap& overlap_bits() const { return overlap_; }

  float feature(int channel, int row, int col) const { return features_[FlatIndex(channel, row, col)]; }

 private:
  int channels_ = 0;
  std::vector<float> features_;
  std::array<float, kGridCells> mask_{};
  Minutia anchor_;
  OverlapBitmap overlap_{};
};

// One 64-bit word per feature channel: bit (row*8+col) holds the sign bit of
// that cell. With C = 6 the feature payload is 12 words = 96 bytes.
class BinaryDescriptor {
 public:
  BinaryDescriptor() = default;
  BinaryDescriptor(int channels, std::vector<std::uint64_t> feature_words, std::uint64_t mask_bits, Minutia anchor);

  int channels() const { return channels_; }
  int depth() const { return 2 * channels_; }
  std::span<const std::uint64_t> feature_words() const { return words_; }
  std::uint64_t mask_bits() const { return mask_; }
  const Minutia& anchor() const { return anchor_; }
  const OverlapBitmap& overlap_bits() const { return overlap_; }

  std::size_t FeatureBits() const { return words_.size() * 64; }
  std::size_t FeatureBytes() const { return words_.size() * sizeof(std::uint64_t); }
  bool IsValid() const { return mask_ != 0; }

 private:
  int channels_ = 0;
  std::vector<std::uint64_t> words_;
  std::uint64_t mask_ = 0;
  Minutia anchor_;
  OverlapBitmap overlap_{};
};

/// Tensor of C*8*8 values, channel-major.
using BranchFeatures = std::vector<float>;

DenseDescriptor AssembleDmd(std::span<const float> texture, std::span<const float> minutiae,
                            std::span<const float> mask, const Minutia& anchor, const DescriptorConfig& cfg = {});

/// Feature bit = value >= 0; mask bit = value >= 0.5.
BinaryDescriptor Binarize(const DenseDescriptor& d);

}  // namespace dmd
