#include <gtest/gtest.h>

#include <cmath>

#include "dmd/geometry.hpp"
#include "oracles.hpp"

namespace dmd {
namespace {

using testing::Rng;
using testing::UniformInt;
using testing::UniformReal;

GrayImage RandomImage(Rng& rng, int w, int h) {
  GrayImage img(w, h, 0.0);
  for (double& v : img.values()) v = UniformReal(rng, 0, 1);
  return img;
}

TEST(AlignToMinutia, ZeroAngleIsCenteredCrop) {
  Rng rng(1);
  const GrayImage img = RandomImage(rng, 200, 180);
  const Patch p = AlignToMinutia(img, Minutia(100, 90, 0), 128);
  ASSERT_EQ(p.size(), 128);
  for (int v = 0; v < 128; ++v)
    for (int u = 0; u < 128; ++u) ASSERT_EQ(p.image.at(u, v), img.at(100 - 64 + u, 90 - 64 + v)) << u << "," << v;
}

TEST(AlignToMinutia, HalfTurnMatchesRotateThenCrop) {
  Rng rng(2);
  const GrayImage img = RandomImage(rng, 256, 256);
  const Patch p = AlignToMinutia(img, Minutia(128, 128, kPi), 128);
  // Rotating the image by 180° about (128,128) maps (x,y) to (256-x, 256-y).
  for (int v = 1; v < 128; ++v)
    for (int u = 1; u < 128; ++u) ASSERT_NEAR(p.image.at(u, v), img.at(128 + 64 - u, 128 + 64 - v), 1e-9);
}

TEST(AlignToMinutia, BorderPadsWithWhite) {
  Rng rng(3);
  const GrayImage img = RandomImage(rng, 100, 100);
  const Patch p = AlignToMinutia(img, Minutia(5, 50, 0), 128);
  EXPECT_EQ(p.image.at(0, 64), kBackgroundValue);
  EXPECT_EQ(p.image.at(10, 64), kBackgroundValue);
  EXPECT_EQ(p.image.at(64, 64), img.at(5, 50));
  try {
    AlignToMinutia(img, Minutia(120, 50, 0), 128);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kOutOfBounds);
  }
}

TEST(AlignToMinutia, CenterPixelIsBilinearSample) {
  Rng rng(4);
  const GrayImage img = RandomImage(rng, 150, 150);
  for (int i = 0; i < 100; ++i) {
    const Minutia m(UniformReal(rng, 0, 149), UniformReal(rng, 0, 149), UniformReal(rng, 0, 6.28));
    const Patch p = AlignToMinutia(img, m, 64);
    ASSERT_NEAR(p.image.at(32, 32), img.SampleBilinear(m.x(), m.y(), 1.0), 1e-6);
  }
}

std::vector<MinutiaPair> PlantedPairs(Rng& rng, const Affine2D& t, int inliers, int outliers) {
  std::vector<MinutiaPair> pairs;
  for (int i = 0; i < inliers; ++i) {
    const Minutia a(UniformReal(rng, 0, 300), UniformReal(rng, 0, 300), UniformReal(rng, 0, 6.28));
    pairs.emplace_back(a, TransformMinutia(a, t));
  }
  for (int i = 0; i < outliers; ++i) {
    pairs.emplace_back(Minutia(UniformReal(rng, 0, 300), UniformReal(rng, 0, 300), UniformReal(rng, 0, 6.28)),
                       Minutia(UniformReal(rng, 0, 300), UniformReal(rng, 0, 300), UniformReal(rng, 0, 6.28)));
  }
  return pairs;
}

TEST(Ransac, ExactSimilarityRecovered) {
  Rng rng(5);
  const double s = 1.1, a = 0.4;
  const Affine2D truth({s * std::cos(a), -s * std::sin(a), s * std::sin(a), s * std::cos(a)}, {12, -30});
  const auto pairs = PlantedPairs(rng, truth, 10, 0);
  const RansacResult r = EstimateAffineRansac(pairs, {});
  EXPECT_EQ(r.InlierCount(), 10u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.transform.linear()[i], truth.linear()[i], 1e-6);
  EXPECT_NEAR(r.transform.translation().x, 12, 1e-6);
  EXPECT_NEAR(r.transform.translation().y, -30, 1e-6);
}

TEST(Ransac, PlantedOutliersFlagged) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Affine2D truth = Affine2D::Rigid(UniformReal(rng, -1, 1), {150, 150}, {UniformReal(rng, -20, 20), 5});
    auto pairs = PlantedPairs(rng, truth, 14, 6);
    RansacConfig cfg;
    cfg.seed = trial;
    const RansacResult r = EstimateAffineRansac(pairs, cfg);
    double residual = 0;
    for (int i = 0; i < 14; ++i) residual += Distance(r.transform.Apply(pairs[i].first.position()), pairs[i].second.position());
    EXPECT_LT(residual / 14, 0.5);
    for (int i = 0; i < 14; ++i) EXPECT_TRUE(r.inliers[i]);
    // random outliers almost never land within tolerance; check the ones that do truly fit
    for (int i = 14; i < 20; ++i) {
      if (!r.inliers[i]) continue;
      EXPECT_LT(Distance(truth.Apply(pairs[i].first.position()), pairs[i].second.position()), 8.0);
    }
  }
}

TEST(Ransac, Errors) {
  std::vector<MinutiaPair> two{{Minutia(0, 0, 0), Minutia(1, 1, 0)}, {Minutia(5, 0, 0), Minutia(6, 1, 0)}};
  try {
    EstimateAffineRansac(two, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnderdetermined);
  }
  Rng rng(7);
  auto noise = PlantedPairs(rng, Affine2D::Identity(), 0, 6);
  RansacConfig cfg;
  cfg.min_inliers = 5;
  try {
    EstimateAffineRansac(noise, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoConsensus);
  }
}

TEST(Ransac, DeterministicForSeed) {
  Rng rng(8);
  const auto pairs = PlantedPairs(rng, Affine2D::Rigid(0.3, {}, {5, 5}), 12, 8);
  const RansacResult a = EstimateAffineRansac(pairs, {});
  const RansacResult b = EstimateAffineRansac(pairs, {});
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.transform.linear(), b.transform.linear());
}

TEST(Fps, SpecExamples) {
  std::vector<Vec2> line;
  for (int x = 0; x <= 10; ++x) line.push_back({double(x), 0});
  EXPECT_EQ(FarthestPointSampling(line, 1, 4), (std::vector<std::size_t>{4}));
  EXPECT_EQ(FarthestPointSampling(line, 3, 0), (std::vector<std::size_t>{0, 10, 5}));
  auto all = FarthestPointSampling(line, 20, 3);
  ASSERT_EQ(all.size(), line.size());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(FarthestPointSampling({}, 2, 0), Error);
}

TEST(Fps, HandDerivedConfigurations) {
  // square plus centre, start at the centre: all corners tie, then the
  // opposite corner is strictly farthest from both picks
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}};
  EXPECT_EQ(FarthestPointSampling(square, 3, 4), (std::vector<std::size_t>{4, 0, 1}));
  EXPECT_EQ(FarthestPointSampling(square, 3, 0), (std::vector<std::size_t>{0, 3, 1}));
  // two clusters: the second pick jumps to the far cluster, the third returns
  const std::vector<Vec2> clusters{{0, 0}, {1, 0}, {0, 3}, {100, 100}, {101, 100}};
  EXPECT_EQ(FarthestPointSampling(clusters, 3, 0), (std::vector<std::size_t>{0, 4, 2}));
}

TEST(Fps, MinSpacingNonIncreasing) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({UniformReal(rng, 0, 100), UniformReal(rng, 0, 100)});
    const auto pick = FarthestPointSampling(pts, pts.size(), 0);
    double prev = INFINITY;
    for (std::size_t j = 1; j < pick.size(); ++j) {
      double best = INFINITY;
      for (std::size_t q = 0; q < j; ++q) best = std::min(best, Distance(pts[pick[j]], pts[pick[q]]));
      ASSERT_LE(best, prev + 1e-12);
      prev = best;
    }
  }
}

TEST(Erode, SpecExamples) {
  const SegMask ones(32, 32, 1.0);
  EXPECT_EQ(ErodeMask(ones, 0), ones);
  const SegMask e = ErodeMask(ones, 3);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool border = x < 3 || y < 3 || x > 28 || y > 28;
      ASSERT_EQ(e.at(x, y), border ? 0.0 : 1.0) << x << "," << y;
    }
  EXPECT_EQ(ErodeMask(ones, 3), testing::BruteForceErode(ones, 3));
  const SegMask zeros(16, 16, 0.0);
  EXPECT_EQ(ErodeMask(zeros, 2), zeros);
}

TEST(Erode, MatchesBruteForceOnRandomMasks) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = UniformInt(rng, 5, 40), h = UniformInt(rng, 5, 40);
    SegMask m(w, h, 0.0);
    const double p = UniformReal(rng, 0.5, 0.95);
    for (double& v : m.values()) v = UniformReal(rng, 0, 1) < p ? 1.0 : 0.0;
    const int r = UniformInt(rng, 0, 6);
    ASSERT_EQ(ErodeMask(m, r), testing::BruteForceErode(m, r)) << "trial " << trial;
    // nested erosion shrinks
    const SegMask once = ErodeMask(m, r);
    const SegMask twice = ErodeMask(once, UniformInt(rng, 0, 3));
    for (std::size_t i = 0; i < once.size(); ++i) ASSERT_LE(twice.values()[i], once.values()[i]);
  }
}

}  // namespace
}  // namespace dmd
