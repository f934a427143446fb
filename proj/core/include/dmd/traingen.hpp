#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dmd/core_model.hpp"
#include "dmd/geometry.hpp"
#include "dmd/mcc.hpp"

namespace dmd {

struct TrainGenConfig {
  int top_n = 12;  // N, candidate pairs kept by MCC score
  int fps_k = 5;   // K, cap after farthest point sampling
  int erosion_radius = 16;
  RansacConfig ransac;
  int patch_size = 128;
  MccParams mcc;

  void Validate() const;
};

struct MatedPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double mcc_score = 0.0;
};

// One impression as the pipeline sees it.
struct Impression {
  GrayImage image;
  MinutiaSet minutiae;
  SegMask mask;
};

/// MCC top-N, erosion filter, RANSAC consensus, FPS subset. Returns the pairs
/// in FPS order, or nothing when fewer than 3 pairs reach the RANSAC stage.
std::vector<MatedPair> SelectMatedMinutiae(const Impression& a, const Impression& b, const TrainGenConfig& cfg = {});

struct PatchPair {
  Patch a;
  Patch b;
  int class_id = 0;
};

/// Aligned 128x128 crops around each mated pair; class ids count up from
/// `first_class_id`.
std::vector<PatchPair> GeneratePatchPairs(const Impression& a, const Impression& b,
                                          const std::vector<MatedPair>& pairs, const TrainGenConfig& cfg = {},
                                          int first_class_id = 0);

/// `class_id  pathA  pathB  ax ay atheta  bx by btheta`
std::string ManifestLine(int class_id, const std::string& path_a, const std::string& path_b, const Minutia& anchor_a,
                         const Minutia& anchor_b);

}  // namespace dmd
