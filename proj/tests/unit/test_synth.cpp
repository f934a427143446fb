#include <gtest/gtest.h>

#include <cmath>

#include "dmd/matcher.hpp"
#include "dmd/synth.hpp"
#include "oracles.hpp"

namespace dmd {
namespace {

using testing::Rng;
using testing::UniformReal;

int RoundPx(double v) { return static_cast<int>(std::lround(v)); }

// Fraction of minutiae where the rendered ridge phase winds once.
double PhaseConsistency(const SynthFingerprint& fp) {
  int pass = 0;
  for (const Minutia& m : fp.minutiae) {
    const double ridge = fp.orientation.at(RoundPx(m.x()), RoundPx(m.y()));
    pass += std::abs(testing::PhaseWinding(fp.image, ridge, fp.frequency, m.position())) == 1;
  }
  return fp.minutiae.size() ? double(pass) / fp.minutiae.size() : 0.0;
}

bool AllInsideMask(const SynthFingerprint& fp) {
  for (const Minutia& m : fp.minutiae)
    if (!fp.mask.IsSet(RoundPx(m.x()), RoundPx(m.y()))) return false;
  return true;
}

TEST(Synth, DeterministicPerSeed) {
  const SynthFingerprint a = SynthesizeFingerprint(11), b = SynthesizeFingerprint(11);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.minutiae.size(), b.minutiae.size());
  for (std::size_t i = 0; i < a.minutiae.size(); ++i) EXPECT_EQ(a.minutiae[i], b.minutiae[i]);
  const SynthFingerprint c = SynthesizeFingerprint(12);
  EXPECT_NE(a.image, c.image);
  EXPECT_THROW(SynthesizeFingerprint(1, 100), Error);
}

TEST(Synth, MinutiaeSitOnRidgeSingularities) {
  int pass = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const SynthFingerprint fp = SynthesizeFingerprint(seed);
    EXPECT_TRUE(AllInsideMask(fp));
    EXPECT_GT(fp.minutiae.size(), 10u);
    pass += RoundPx(PhaseConsistency(fp) * fp.minutiae.size());
    total += fp.minutiae.size();
  }
  EXPECT_GE(pass, 0.95 * total);
}

TEST(Synth, MaskCoverageRange) {
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
    const double cov = SynthesizeFingerprint(seed).mask.Coverage();
    ASSERT_GE(cov, 0.40) << seed;
    ASSERT_LE(cov, 0.95) << seed;
  }
}

TEST(Distortion, ZeroMagnitudeIsIdentity) {
  const SynthFingerprint fp = SynthesizeFingerprint(3);
  const SynthFingerprint w = ApplyDistortion(fp, {0.0, 4, 9});
  EXPECT_EQ(w.image, fp.image);
  EXPECT_EQ(w.mask, fp.mask);
  EXPECT_EQ(w.orientation, fp.orientation);
  ASSERT_EQ(w.minutiae.size(), fp.minutiae.size());
  const DistortionField field(256, 256, {0.0, 4, 9});
  EXPECT_EQ(field.Displacement({100, 37}).Norm(), 0.0);
}

TEST(Distortion, BoundedConsistentWarp) {
  int pass = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const SynthFingerprint fp = SynthesizeFingerprint(seed);
    const DistortionConfig cfg{8.0, 4, seed + 50};
    const DistortionField field(256, 256, cfg);
    for (int y = 0; y < 256; y += 5)
      for (int x = 0; x < 256; x += 5) {
        const Vec2 p{double(x), double(y)};
        ASSERT_LE(field.Displacement(p).Norm(), 10.0);
        ASSERT_LT(Distance(field.Inverse(field.Forward(p)), p), 1e-6);
      }
    EXPECT_EQ(field.Displacement({0, 100}).Norm(), 0.0);
    const SynthFingerprint w = ApplyDistortion(fp, cfg);
    EXPECT_TRUE(AllInsideMask(w));
    for (const Minutia& m : w.minutiae) {
      const Vec2 src = field.Inverse(m.position());
      ASSERT_LE(Distance(src, m.position()), 10.0);
    }
    pass += RoundPx(PhaseConsistency(w) * w.minutiae.size());
    total += w.minutiae.size();
  }
  EXPECT_GE(pass, 0.90 * total);
}

TEST(Distortion, SeedsDiffer) {
  const DistortionField a(256, 256, {8.0, 4, 1}), b(256, 256, {8.0, 4, 2});
  double worst = 0;
  for (int y = 0; y < 256; y += 4)
    for (int x = 0; x < 256; x += 4) worst = std::max(worst, Distance(a.Displacement({double(x), double(y)}), b.Displacement({double(x), double(y)})));
  EXPECT_GT(worst, 1.0);
  EXPECT_THROW(DistortionField(256, 256, {40.0, 4, 1}), Error);
}

TEST(SimulatePlain, Examples) {
  const SynthFingerprint fp = SynthesizeFingerprint(4);
  const SynthFingerprint same = SimulatePlain(fp, SegMask(256, 256, 1.0));
  EXPECT_EQ(same.image, fp.image);
  EXPECT_EQ(same.minutiae.size(), fp.minutiae.size());

  SegMask left(256, 256, 0.0);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 128; ++x) left.at(x, y) = 1.0;
  const SynthFingerprint half = SimulatePlain(fp, left);
  std::size_t expect = 0;
  for (const Minutia& m : fp.minutiae) expect += RoundPx(m.x()) < 128;
  EXPECT_EQ(half.minutiae.size(), expect);
  for (const Minutia& m : half.minutiae) EXPECT_LT(RoundPx(m.x()), 128);
  for (int y = 0; y < 256; ++y) ASSERT_EQ(half.image.at(200, y), kBackgroundValue);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SegMask crop = RandomCropMask(fp, 0.6, seed);
    const SynthFingerprint plain = SimulatePlain(fp, crop);
    std::size_t count = 0;
    for (const Minutia& m : fp.minutiae) {
      const int x = RoundPx(m.x()), y = RoundPx(m.y());
      count += crop.at(x, y) >= 0.5 && fp.mask.at(x, y) >= 0.5;
    }
    EXPECT_EQ(plain.minutiae.size(), count);
    const double kept = plain.mask.Coverage() / fp.mask.Coverage();
    EXPECT_NEAR(kept, 0.6, 0.02);
  }
}

TEST(Spurious, InjectedInsideAndSeparated) {
  const SynthFingerprint fp = SynthesizeFingerprint(5);
  const SynthFingerprint s = InjectSpuriousMinutiae(fp, 6, 77);
  ASSERT_EQ(s.minutiae.size(), fp.minutiae.size() + 6);
  for (std::size_t i = 0; i < fp.minutiae.size(); ++i) EXPECT_EQ(s.minutiae[i], fp.minutiae[i]);
  EXPECT_TRUE(AllInsideMask(s));
  for (std::size_t i = fp.minutiae.size(); i < s.minutiae.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) ASSERT_GE(Distance(s.minutiae[i].position(), s.minutiae[j].position()), 12.0);
}

Patch RandomPatch(Rng& rng, int n) {
  GrayImage img(n, n, 0.0);
  for (double& v : img.values()) v = UniformReal(rng, 0.1, 0.9);
  return Patch{img, Minutia(n / 2.0, n / 2.0, 0)};
}

TEST(Augment, NoneIsIdentity) {
  Rng rng(1);
  const Patch p = RandomPatch(rng, 64);
  EXPECT_EQ(Augment(p, AugmentConfig::None(), 5).image, p.image);
}

TEST(Augment, TranslationOnly) {
  Rng rng(2);
  const Patch p = RandomPatch(rng, 64);
  AugmentParams params;
  params.tx = 5;
  const Patch out = ApplyAugmentation(p, params);
  for (int y = 0; y < 64; ++y)
    for (int x = 5; x < 64; ++x) ASSERT_NEAR(out.image.at(x, y), p.image.at(x - 5, y), 1e-6);
  for (int y = 0; y < 64; ++y) ASSERT_EQ(out.image.at(0, y), kBackgroundValue);
}

TEST(Augment, NoiseStatistics) {
  const Patch flat{GrayImage(1000, 1000, 0.5), Minutia(500, 500, 0)};
  AugmentParams params;
  params.noise_sigma = 0.05;
  params.seed = 3;
  const Patch out = ApplyAugmentation(flat, params);
  double sum = 0, sum2 = 0;
  for (double v : out.image.values()) {
    sum += v - 0.5;
    sum2 += (v - 0.5) * (v - 0.5);
  }
  const double n = 1e6;
  const double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1));
  EXPECT_GE(sd, 0.045);
  EXPECT_LE(sd, 0.055);
}

TEST(Augment, DeterministicAndInRange) {
  Rng rng(4);
  const Patch p = RandomPatch(rng, 96);
  const Patch a = Augment(p, {}, 8), b = Augment(p, {}, 8), c = Augment(p, {}, 9);
  EXPECT_EQ(a.image, b.image);
  EXPECT_NE(a.image, c.image);
  for (double v : a.image.values()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  const AugmentParams d = DrawAugmentation({}, 8);
  EXPECT_LE(std::abs(d.tx), 10.0);
  EXPECT_LE(std::abs(d.rotation), 5.0 * kPi / 180 + 1e-12);
  EXPECT_GE(d.gamma, 0.7);
  EXPECT_LE(d.gamma, 1.4);
}

DenseDescriptor ExtractAt(const SynthFingerprint& fp, const Minutia& m) {
  GroundTruth gt = GroundTruthOf(fp);
  const Patch patch = AlignToMinutia(fp.image, m, 128);
  const OracleFeatures f = OracleExtract(patch, gt);
  return AssembleDmd(f.texture, f.minutiae, f.mask, m);
}

TEST(Oracle, DeterministicAndSelfScore) {
  const SynthFingerprint fp = SynthesizeFingerprint(6);
  const GroundTruth gt = GroundTruthOf(fp);
  const auto a = ExtractDescriptors(fp.image, gt), b = ExtractDescriptors(fp.image, gt);
  ASSERT_EQ(a.size(), fp.minutiae.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(std::equal(a[i].features().begin(), a[i].features().end(), b[i].features().begin()));
    ASSERT_NEAR(LocalSimilarity(a[i], a[i]), testing::NaiveLocalSimilarity(a[i], a[i]), 1e-6);
  }

  // full foreground: self-score is the full-grid value
  SynthFingerprint big = fp;
  big.mask = SegMask(256, 256, 1.0);
  const DenseDescriptor d = ExtractAt(big, Minutia(128, 128, 0.3));
  EXPECT_NEAR(LocalSimilarity(d, d), std::sqrt(4096.0 / 1326.0), 1e-6);
}

TEST(Oracle, BlankPatchIsZero) {
  GroundTruth gt{Raster(256, 256), Raster(256, 256, 9.0), MinutiaSet(), SegMask(256, 256, 0.0)};
  const Patch blank{GrayImage(128, 128, kBackgroundValue), Minutia(64, 64, 0)};
  const OracleFeatures f = OracleExtract(blank, gt);
  for (float v : f.mask) ASSERT_EQ(v, 0.0f);
  const DenseDescriptor d = AssembleDmd(f.texture, f.minutiae, f.mask, blank.anchor);
  for (float v : d.features()) ASSERT_EQ(v, 0.0f);
}

// Index of the minutia in `set` nearest to p, if within tol.
std::optional<std::size_t> Nearest(const MinutiaSet& set, Vec2 p, double tol) {
  std::optional<std::size_t> best;
  double bd = tol;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (Distance(set[i].position(), p) < bd) bd = Distance(set[i].position(), p), best = i;
  return best;
}

TEST(Oracle, GenuineBeatsImpostor) {
  double genuine = 0, impostor = 0;
  int ng = 0, ni = 0;
  for (std::uint64_t seed = 20; ng < 200; ++seed) {
    const SynthFingerprint fp = SynthesizeFingerprint(seed);
    const DistortionConfig cfg{8.0, 4, seed};
    const DistortionField field(256, 256, cfg);
    const SynthFingerprint w = ApplyDistortion(fp, cfg);
    const auto da = ExtractDescriptors(fp.image, GroundTruthOf(fp));
    const auto db = ExtractDescriptors(w.image, GroundTruthOf(w));
    for (std::size_t i = 0; i < fp.minutiae.size() && ng < 200; ++i) {
      const auto j = Nearest(w.minutiae, field.Forward(fp.minutiae[i].position()), 1e-6);
      if (!j) continue;
      genuine += LocalSimilarity(da[i], db[*j]);
      ++ng;
      const std::size_t k = (*j + 1 + seed % (db.size() - 1)) % db.size();
      impostor += LocalSimilarity(da[i], db[k]);
      ++ni;
    }
  }
  genuine /= ng;
  impostor /= ni;
  EXPECT_GE(genuine - impostor, 0.3) << genuine << " vs " << impostor;
}

TEST(Oracle, RotationCovariant) {
  int checked = 0;
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    const SynthFingerprint fp = SynthesizeFingerprint(seed);
    const Affine2D motion = Affine2D::Rigid(0.4 * (seed - 33.0) + 0.3, {128, 128}, {4, -3});
    const SynthFingerprint moved = ApplyRigidMotion(fp, motion);
    const auto da = ExtractDescriptors(fp.image, GroundTruthOf(fp));
    const auto db = ExtractDescriptors(moved.image, GroundTruthOf(moved));
    for (std::size_t i = 0; i < fp.minutiae.size(); ++i) {
      const auto j = Nearest(moved.minutiae, motion.Apply(fp.minutiae[i].position()), 1e-6);
      if (!j) continue;
      // only anchors whose neighbourhood stays on the canvas
      if (OverlapCount(da[i].overlap_bits(), da[i].overlap_bits()) !=
          OverlapCount(db[*j].overlap_bits(), db[*j].overlap_bits()))
        continue;
      EXPECT_GT(LocalSimilarity(da[i], db[*j]), 0.8 * LocalSimilarity(da[i], da[i])) << seed << ":" << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 30);
}

}  // namespace
}  // namespace dmd
