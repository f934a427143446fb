#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dmd/core_model.hpp"
#include "dmd/descriptor.hpp"
#include "dmd/geometry.hpp"

namespace dmd {

// Procedural ridge pattern. The phase at a model-space point p is
//   2π g(p) / period + Σ_i s_i · atan2(v_i, u_i)
// where g is a smooth ridge-distance field and (u_i, v_i) are the coordinates
// of p in the tangent/normal frame of planted minutia i. Each spiral term
// terminates or splits exactly one ridge at the minutia.
struct RidgeModel {
  int width = 0;
  int height = 0;
  double period = 9.0;

  // g(p) = sqrt((p-c)^T M (p-c)) + Σ a_k sin(ω_k·p + φ_k)
  Vec2 center;
  std::array<double, 3> metric{1.0, 0.0, 1.0};  // M as (m00, m01, m11)
  struct Wave {
    double amplitude;
    Vec2 frequency;
    double phase;
  };
  std::vector<Wave> waves;

  // Superellipse-like foreground with a wobbly boundary.
  Vec2 fg_center;
  Vec2 fg_radii;
  std::vector<std::array<double, 3>> fg_wobble;  // (order, amplitude, phase)

  struct Spiral {
    Vec2 position;
    Vec2 tangent;  // unit, ridge direction at the minutia
    int sign;      // +1 / -1
  };
  std::vector<Spiral> spirals;

  double Distance(Vec2 p) const;  // g
  Vec2 DistanceGradient(Vec2 p) const;
  double ContinuousPhase(Vec2 p) const;
  double Phase(Vec2 p) const;
  /// Soft foreground weight in [0,1], 0.5 on the boundary.
  double Foreground(Vec2 p) const;
};

using PointMap = std::function<Vec2(Vec2)>;

struct SynthFingerprint {
  GrayImage image;
  MinutiaSet minutiae;
  Raster orientation;    // ridge angle in [0, π) per pixel
  Raster local_period;   // ridge period per pixel, px
  double frequency = 9.0;  // nominal ridge period, px
  SegMask mask;          // hard foreground
  SegMask crop;          // hard region kept by plain-impression crops

  std::shared_ptr<const RidgeModel> model;
  PointMap to_model;  // canvas -> model coordinates
};

struct SynthConfig {
  int size = 256;
  double min_period = 8.5;
  double max_period = 10.0;
  double minutia_spacing = 20.0;
  double minutia_area = 1500.0;  // px² of foreground per planted minutia
  int border_margin = 8;         // minutiae stay this far inside the mask
};

SynthFingerprint SynthesizeFingerprint(std::uint64_t seed, const SynthConfig& cfg = {});
inline SynthFingerprint SynthesizeFingerprint(std::uint64_t seed, int size) {
  SynthConfig cfg;
  cfg.size = size;
  return SynthesizeFingerprint(seed, cfg);
}

struct DistortionConfig {
  double magnitude = 8.0;  // px, bound on the displacement norm
  int grid = 4;            // interior control nodes per axis
  std::uint64_t seed = 1;
};

// Smooth displacement field: cubic B-spline over a control grid of random
// offsets (zero on the border ring), tapered to exactly zero at the canvas edge.
class DistortionField {
 public:
  DistortionField(int width, int height, const DistortionConfig& cfg);

  Vec2 Displacement(Vec2 p) const;
  Vec2 Forward(Vec2 p) const { return p + Displacement(p); }
  /// Solves Forward(x) = y by fixed-point iteration.
  Vec2 Inverse(Vec2 y) const;

 private:
  int width_;
  int height_;
  int nodes_;  // per axis, including the zero border ring
  double spacing_x_;
  double spacing_y_;
  std::vector<Vec2> offsets_;
};

/// Re-renders `fp` under an arbitrary smooth forward map with known inverse.
/// Minutiae move by `forward`; their directions follow its Jacobian.
SynthFingerprint WarpFingerprint(const SynthFingerprint& fp, const PointMap& forward, const PointMap& inverse);

SynthFingerprint ApplyDistortion(const SynthFingerprint& fp, const DistortionConfig& cfg);
SynthFingerprint ApplyRigidMotion(const SynthFingerprint& fp, const Affine2D& motion);

/// Keeps only the part of the fingerprint inside `crop_mask`.
SynthFingerprint SimulatePlain(const SynthFingerprint& fp, const SegMask& crop_mask);

/// Elliptical crop whose intersection with the foreground keeps roughly
/// `fraction` of the foreground area.
SegMask RandomCropMask(const SynthFingerprint& fp, double fraction, std::uint64_t seed);

/// Appends minutiae that do not correspond to any ridge feature; they are
/// placed inside the mask at least `min_separation` px from all others.
SynthFingerprint InjectSpuriousMinutiae(const SynthFingerprint& fp, std::size_t count, std::uint64_t seed,
                                        double min_separation = 12.0);

// Recipe for a second impression of a master print: distortion, then a rigid
// motion about the canvas center, then a plain-style crop, then spurious
// minutiae.
struct ImpressionRecipe {
  DistortionConfig distortion{0.0, 4, 1};
  double rotation = 0.0;  // radians
  Vec2 shift;
  double crop = 1.0;  // fraction of foreground kept; 1 keeps everything
  std::size_t spurious = 0;
  std::uint64_t seed = 0;  // drives the crop and the spurious minutiae
};

SynthFingerprint MakeImpression(const SynthFingerprint& master, const ImpressionRecipe& recipe);

struct AugmentConfig {
  double max_translation = 10.0;  // px
  double max_rotation = 5.0 * kPi / 180.0;
  double noise_sigma = 0.05;
  double min_gamma = 0.7;
  double max_gamma = 1.4;
  double distortion = 2.0;  // px, bound of the smooth warp

  static AugmentConfig None();
};

// One drawn realization of the augmentation ranges.
struct AugmentParams {
  double tx = 0.0;
  double ty = 0.0;
  double rotation = 0.0;
  double gamma = 1.0;
  double noise_sigma = 0.0;
  double distortion = 0.0;
  std::uint64_t seed = 0;
};

AugmentParams DrawAugmentation(const AugmentConfig& cfg, std::uint64_t seed);
Patch ApplyAugmentation(const Patch& patch, const AugmentParams& params);
Patch Augment(const Patch& patch, const AugmentConfig& cfg, std::uint64_t seed);

// Canvas-space ground truth the oracle extractor reads from.
struct GroundTruth {
  Raster orientation;
  Raster local_period;
  MinutiaSet minutiae;
  SegMask mask;
};

GroundTruth GroundTruthOf(const SynthFingerprint& fp);

/// Ground truth for an external image: orientation from the gradient structure
/// tensor, constant period, caller-provided minutiae and mask.
GroundTruth EstimateGroundTruth(const GrayImage& image, const MinutiaSet& minutiae, const SegMask& mask,
                                double period = 9.0);

struct OracleFeatures {
  std::vector<float> texture;   // C x 8 x 8
  std::vector<float> minutiae;  // C x 8 x 8
  std::array<float, kGridCells> mask{};
};

inline constexpr int kOracleChannels = 6;

/// Handcrafted stand-in for the learned extractor: six texture channels and
/// six minutia channels per 16x16 cell, z-normalized over the foreground.
OracleFeatures OracleExtract(const Patch& patch, const GroundTruth& gt);

/// Aligns, extracts and assembles one descriptor per minutia.
std::vector<DenseDescriptor> ExtractDescriptors(const GrayImage& image, const GroundTruth& gt, int patch_size = 128);

}  // namespace dmd
