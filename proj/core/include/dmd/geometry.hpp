#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dmd/core_model.hpp"

namespace dmd {

struct Patch {
  GrayImage image;
  Minutia anchor;  // position in the source image

  int size() const { return image.width(); }
};

inline constexpr double kBackgroundValue = 1.0;

/// Resamples `img` so that `m` lands on the patch center and its direction
/// points along +x. The center is at (size/2, size/2).
Patch AlignToMinutia(const GrayImage& img, const Minutia& m, int patch_size = 128);

/// Frame mapping patch coordinates to source coordinates for an aligned patch.
Affine2D PatchToSource(const Minutia& anchor, int patch_size);

struct RansacConfig {
  int iterations = 500;
  double inlier_residual_px = 8.0;
  double inlier_angle_rad = 0.35;
  int min_inliers = 4;
  std::uint64_t seed = 0x5eed;
};

struct RansacResult {
  Affine2D transform;
  std::vector<bool> inliers;

  std::size_t InlierCount() const;
};

using MinutiaPair = std::pair<Minutia, Minutia>;

/// Robust affine fit mapping pair.first onto pair.second.
RansacResult EstimateAffineRansac(const std::vector<MinutiaPair>& pairs, const RansacConfig& cfg);

/// Least-squares affine fit over all given pairs (needs ≥ 3 non-collinear).
Affine2D FitAffineLeastSquares(const std::vector<MinutiaPair>& pairs);

/// Greedy max-min selection; ties go to the lowest index.
std::vector<std::size_t> FarthestPointSampling(const std::vector<Vec2>& points, std::size_t k, std::size_t start);

/// Erosion by a Euclidean disc; cells outside the raster count as 0.
SegMask ErodeMask(const SegMask& mask, int radius);

/// Squared Euclidean distance from every cell to the nearest unset cell (the
/// region outside the raster is unset). Row-major, same shape as `mask`.
std::vector<double> SquaredDistanceToZero(const SegMask& mask);

}  // namespace dmd
