#include "dmd/descriptor.hpp"

#include <algorithm>

namespace dmd {

OverlapBitmap UpsampledMaskBits(std::span<const float, kGridCells> mask) {
  constexpr int kRatio = kOverlapGrid / kDescriptorGrid;
  OverlapBitmap bits{};
  for (int fy = 0; fy < kOverlapGrid; ++fy) {
    // Fine sample centers expressed in coarse cell coordinates.
    const double v = std::clamp((fy + 0.5) / kRatio - 0.5, 0.0, kDescriptorGrid - 1.0);
    const int y0 = std::min(static_cast<int>(v), kDescriptorGrid - 1);
    const int y1 = std::min(y0 + 1, kDescriptorGrid - 1);
    const double wy = v - y0;
    for (int fx = 0; fx < kOverlapGrid; ++fx) {
      const double u = std::clamp((fx + 0.5) / kRatio - 0.5, 0.0, kDescriptorGrid - 1.0);
      const int x0 = std::min(static_cast<int>(u), kDescriptorGrid - 1);
      const int x1 = std::min(x0 + 1, kDescriptorGrid - 1);
      const double wx = u - x0;
      const double top = mask[y0 * kDescriptorGrid + x0] * (1.0 - wx) + mask[y0 * kDescriptorGrid + x1] * wx;
      const double bottom = mask[y1 * kDescriptorGrid + x0] * (1.0 - wx) + mask[y1 * kDescriptorGrid + x1] * wx;
      if (top * (1.0 - wy) + bottom * wy >= 0.5) bits[fy] |= std::uint64_t{1} << fx;
    }
  }
  return bits;
}

DenseDescriptor::DenseDescriptor(int channels, std::vector<float> features, std::array<float, kGridCells> mask,
                                 Minutia anchor)
    : channels_(channels), features_(std::move(features)), mask_(mask), anchor_(anchor) {
  if (channels < 1) throw Error(Errc::kInvalidArgument, "descriptor channel depth must be >= 1");
  if (features_.size() != static_cast<std::size_t>(2 * channels) * kGridCells) {
    throw Error(Errc::kShapeMismatch, "descriptor needs 2C*64 feature values");
  }
  for (float v : mask_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(Errc::kInvalidArgument, "mask values must lie in [0,1]");
  }
  for (float v : features_) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "descriptor features must be finite");
  }
  overlap_ = UpsampledMaskBits(mask_);
}

BinaryDescriptor::BinaryDescriptor(int channels, std::vector<std::uint64_t> feature_words, std::uint64_t mask_bits,
                                   Minutia anchor)
    : channels_(channels), words_(std::move(feature_words)), mask_(mask_bits), anchor_(anchor) {
  if (channels < 1) throw Error(Errc::kInvalidArgument, "descriptor channel depth must be >= 1");
  if (words_.size() != static_cast<std::size_t>(2 * channels)) {
    throw Error(Errc::kShapeMismatch, "binary descriptor needs one word per feature channel");
  }
  std::array<float, kGridCells> as_values{};
  for (int i = 0; i < kGridCells; ++i) as_values[i] = ((mask_ >> i) & 1u) ? 1.0f : 0.0f;
  overlap_ = UpsampledMaskBits(as_values);
}

DenseDescriptor AssembleDmd(std::span<const float> texture, std::span<const float> minutiae,
                            std::span<const float> mask, const Minutia& anchor, const DescriptorConfig& cfg) {
  if (cfg.channels < 1 || cfg.grid != kDescriptorGrid) {
    throw Error(Errc::kInvalidArgument, "descriptor config needs C >= 1 and an 8x8 grid");
  }
  const std::size_t branch = static_cast<std::size_t>(cfg.channels) * kGridCells;
  if (texture.size() != branch || minutiae.size() != branch || mask.size() != kGridCells) {
    throw Error(Errc::kShapeMismatch, "branch tensors must be Cx8x8 and the mask 8x8");
  }
  std::array<float, kGridCells> h{};
  for (int i = 0; i < kGridCells; ++i) {
    if (!(mask[i] >= 0.0f && mask[i] <= 1.0f)) throw Error(Errc::kInvalidArgument, "mask values must lie in [0,1]");
    h[i] = mask[i];
  }
  std::vector<float> features(2 * branch);
  for (std::size_t i = 0; i < branch; ++i) {
    const float w = h[i % kGridCells];
    features[i] = texture[i] * w;
    features[branch + i] = minutiae[i] * w;
  }
  return DenseDescriptor(cfg.channels, std::move(features), h, anchor);
}

BinaryDescriptor Binarize(const DenseDescriptor& d) {
  std::vector<std::uint64_t> words(static_cast<std::size_t>(d.depth()), 0);
  const auto f = d.features();
  for (int c = 0; c < d.depth(); ++c) {
    for (int cell = 0; cell < kGridCells; ++cell) {
      if (f[static_cast<std::size_t>(c) * kGridCells + cell] >= 0.0f) words[c] |= std::uint64_t{1} << cell;
    }
  }
  std::uint64_t mask = 0;
  for (int cell = 0; cell < kGridCells; ++cell) {
    if (d.mask()[cell] >= 0.5f) mask |= std::uint64_t{1} << cell;
  }
  return BinaryDescriptor(d.channels(), std::move(words), mask, d.anchor());
}

}  // namespace dmd
