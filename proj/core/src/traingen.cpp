#include "dmd/traingen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace dmd {

void TrainGenConfig::Validate() const {
  if (fps_k < 1 || top_n < fps_k) throw Error(Errc::kInvalidArgument, "need top_n >= fps_k >= 1");
  if (erosion_radius < 0) throw Error(Errc::kInvalidArgument, "erosion radius must be non-negative");
  if (patch_size <= 0 || patch_size % 8 != 0) throw Error(Errc::kInvalidArgument, "patch size must be a multiple of 8");
}

namespace {

bool Inside(const SegMask& mask, const Minutia& m) {
  return mask.IsSet(static_cast<int>(std::lround(m.x())), static_cast<int>(std::lround(m.y())));
}

}  // namespace

std::vector<MatedPair> SelectMatedMinutiae(const Impression& a, const Impression& b, const TrainGenConfig& cfg) {
  cfg.Validate();
  if (a.minutiae.size() < 3 || b.minutiae.size() < 3) {
    throw Error(Errc::kUnderdetermined, "both impressions need at least 3 minutiae");
  }

  const std::vector<MccCylinder> ca = BuildCylinders(a.minutiae, cfg.mcc);
  const std::vector<MccCylinder> cb = BuildCylinders(b.minutiae, cfg.mcc);
  std::vector<MatedPair> scored;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!ca[i].valid()) continue;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      if (!cb[j].valid()) continue;
      const double s = MccLocalSimilarity(ca[i], cb[j], cfg.mcc);
      if (s > 0.0) scored.push_back({i, j, s});
    }
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const MatedPair& x, const MatedPair& y) { return x.mcc_score > y.mcc_score; });

  // (1) greedy one-to-one top N
  std::vector<bool> used_a(a.minutiae.size(), false);
  std::vector<bool> used_b(b.minutiae.size(), false);
  std::vector<MatedPair> top;
  for (const MatedPair& p : scored) {
    if (static_cast<int>(top.size()) == cfg.top_n) break;
    if (used_a[p.a] || used_b[p.b]) continue;
    used_a[p.a] = used_b[p.b] = true;
    top.push_back(p);
  }

  // (2) erosion filter
  const SegMask ea = ErodeMask(a.mask.Thresholded(), cfg.erosion_radius);
  const SegMask eb = ErodeMask(b.mask.Thresholded(), cfg.erosion_radius);
  std::vector<MatedPair> kept;
  for (const MatedPair& p : top) {
    if (Inside(ea, a.minutiae[p.a]) && Inside(eb, b.minutiae[p.b])) kept.push_back(p);
  }
  if (kept.size() < 3) return {};

  // (3) RANSAC consensus
  std::vector<MinutiaPair> correspondences;
  for (const MatedPair& p : kept) correspondences.emplace_back(a.minutiae[p.a], b.minutiae[p.b]);
  RansacResult fit;
  try {
    fit = EstimateAffineRansac(correspondences, cfg.ransac);
  } catch (const Error& e) {
    if (e.code() == Errc::kNoConsensus || e.code() == Errc::kUnderdetermined) return {};
    throw;
  }
  std::vector<MatedPair> inliers;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (fit.inliers[i]) inliers.push_back(kept[i]);
  }
  if (inliers.empty()) return {};

  // (4) FPS from the best-scoring survivor
  std::vector<Vec2> points;
  for (const MatedPair& p : inliers) points.push_back(a.minutiae[p.a].position());
  const std::size_t k = std::min<std::size_t>(cfg.fps_k, inliers.size());
  std::vector<MatedPair> out;
  for (std::size_t idx : FarthestPointSampling(points, k, 0)) out.push_back(inliers[idx]);
  return out;
}

std::vector<PatchPair> GeneratePatchPairs(const Impression& a, const Impression& b,
                                          const std::vector<MatedPair>& pairs, const TrainGenConfig& cfg,
                                          int first_class_id) {
  cfg.Validate();
  std::vector<PatchPair> out;
  out.reserve(pairs.size());
  int class_id = first_class_id;
  for (const MatedPair& p : pairs) {
    if (p.a >= a.minutiae.size() || p.b >= b.minutiae.size()) {
      throw Error(Errc::kOutOfBounds, "mated pair index out of range");
    }
    out.push_back({AlignToMinutia(a.image, a.minutiae[p.a], cfg.patch_size),
                   AlignToMinutia(b.image, b.minutiae[p.b], cfg.patch_size), class_id++});
  }
  return out;
}

std::string ManifestLine(int class_id, const std::string& path_a, const std::string& path_b, const Minutia& anchor_a,
                         const Minutia& anchor_b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "  %.3f %.3f %.6f  %.3f %.3f %.6f", anchor_a.x(), anchor_a.y(), anchor_a.theta(),
                anchor_b.x(), anchor_b.y(), anchor_b.theta());
  return std::to_string(class_id) + "  " + path_a + "  " + path_b + buf;
}

}  // namespace dmd
