#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmd/matcher.hpp"
#include "oracles.hpp"

namespace dmd {
namespace {

using testing::MaskKind;
using testing::RandomDense;
using testing::Rng;
using testing::UniformInt;
using testing::UniformReal;

const double kFullOverlap = std::sqrt(4096.0 / 1326.0);

DenseDescriptor WithFeatures(const std::vector<float>& t, const std::vector<float>& m, const std::vector<float>& h) {
  return AssembleDmd(t, m, h, Minutia(10, 10, 0));
}

TEST(LocalSimilarity, SelfWithFullMask) {
  Rng rng(1);
  const DenseDescriptor d = RandomDense(rng, 6, MaskKind::kFull);
  EXPECT_NEAR(LocalSimilarity(d, d), kFullOverlap, 1e-6);
  EXPECT_NEAR(kFullOverlap, 1.7576, 1e-4);
}

TEST(LocalSimilarity, OrthogonalAndDisjoint) {
  std::vector<float> t1(384, 0), t2(384, 0), z(384, 0);
  t1[0] = 1;
  t2[1] = 1;
  const std::vector<float> full(64, 1.0f);
  EXPECT_EQ(LocalSimilarity(WithFeatures(t1, z, full), WithFeatures(t2, z, full)), 0.0);
  std::vector<float> left(64, 0), right(64, 0);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) (c < 4 ? left : right)[r * 8 + c] = 1;
  const std::vector<float> ones(384, 1.0f);
  EXPECT_EQ(LocalSimilarity(WithFeatures(ones, ones, left), WithFeatures(ones, ones, right)), 0.0);
  // zero features give a zero denominator
  EXPECT_EQ(LocalSimilarity(WithFeatures(z, z, full), WithFeatures(ones, ones, full)), 0.0);
}

TEST(LocalSimilarity, MatchesNaiveOracleAndIsSymmetric) {
  Rng rng(2);
  for (int trial = 0; trial < 400; ++trial) {
    const auto kind = static_cast<MaskKind>(trial % 4);
    const DenseDescriptor a = RandomDense(rng, 6, kind), b = RandomDense(rng, 6, kind);
    const double s = LocalSimilarity(a, b);
    ASSERT_NEAR(s, testing::NaiveLocalSimilarity(a, b), 1e-9) << trial;
    ASSERT_NEAR(s, LocalSimilarity(b, a), 1e-12);
    MatchConfig coarse;
    coarse.overlap_grid = 32;
    ASSERT_NEAR(LocalSimilarity(a, b, coarse), testing::NaiveLocalSimilarity(a, b, 1326.0, 32), 1e-9);
  }
}

TEST(LocalSimilarity, IdenticalFeaturesGiveOverlapFactor) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseDescriptor a = RandomDense(rng, 6, MaskKind::kHard);
    std::vector<float> f(a.features().begin(), a.features().end());
    const DenseDescriptor b(6, f, a.mask(), a.anchor());
    const int ho = testing::NaiveOverlapCount(a.mask(), a.mask());
    if (ho == 0) continue;
    ASSERT_NEAR(LocalSimilarity(a, b), std::sqrt(ho / 1326.0), 1e-6);
  }
}

TEST(LocalSimilarity, ShrinkingOverlapNeverRaisesFactor) {
  Rng rng(4);
  std::array<float, 64> mask;
  mask.fill(1.0f);
  int prev = 4096;
  for (int step = 0; step < 64; ++step) {
    mask[UniformInt(rng, 0, 63)] = 0.0f;
    const int now = testing::NaiveOverlapCount(mask, mask);
    ASSERT_LE(now, prev);
    prev = now;
  }
}

TEST(BinaryLocalSimilarity, Examples) {
  Rng rng(5);
  const DenseDescriptor d = RandomDense(rng, 6, MaskKind::kFull, true);
  const BinaryDescriptor b = Binarize(d);
  EXPECT_NEAR(BinaryLocalSimilarity(b, b), kFullOverlap, 1e-6);
  std::vector<std::uint64_t> flipped(b.feature_words().begin(), b.feature_words().end());
  for (auto& w : flipped) w = ~w;
  const BinaryDescriptor c(6, flipped, b.mask_bits(), b.anchor());
  EXPECT_NEAR(BinaryLocalSimilarity(b, c), -kFullOverlap, 1e-6);
  const BinaryDescriptor left(6, flipped, 0x0F0F0F0F0F0F0F0Full, b.anchor());
  const BinaryDescriptor right(6, flipped, 0xF0F0F0F0F0F0F0F0ull, b.anchor());
  EXPECT_EQ(BinaryLocalSimilarity(left, right), 0.0);
}

TEST(BinaryLocalSimilarity, AgreesWithFloatOnSignFeatures) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto kind = trial % 2 ? MaskKind::kHard : MaskKind::kBlock;
    const DenseDescriptor a = RandomDense(rng, 6, kind, true), b = RandomDense(rng, 6, kind, true);
    ASSERT_NEAR(BinaryLocalSimilarity(Binarize(a), Binarize(b)), LocalSimilarity(a, b), 1e-6) << trial;
  }
}

TEST(BinaryLocalSimilarity, MatchesBitCountOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const BinaryDescriptor a = Binarize(RandomDense(rng, 6, MaskKind::kSoft));
    const BinaryDescriptor b = Binarize(RandomDense(rng, 6, MaskKind::kSoft));
    const auto counts = testing::CountBits(a, b);
    const int ho = OverlapCount(a.overlap_bits(), b.overlap_bits());
    const double expect = counts.joint_cells == 0 || ho == 0
                              ? 0.0
                              : (1.0 - 2.0 * counts.disagreements / (12.0 * counts.joint_cells)) * std::sqrt(ho / 1326.0);
    ASSERT_NEAR(BinaryLocalSimilarity(a, b), expect, 1e-9);
  }
}

TEST(SimilarityMatrix, EntriesMatchOracle) {
  Rng rng(8);
  std::vector<DenseDescriptor> da, db;
  for (int i = 0; i < 2; ++i) da.push_back(RandomDense(rng, 6, MaskKind::kSoft));
  for (int i = 0; i < 2; ++i) db.push_back(RandomDense(rng, 6, MaskKind::kSoft));
  const SimilarityMatrix s = ComputeSimilarityMatrix(MakeFloatTemplate(da), MakeFloatTemplate(db));
  ASSERT_EQ(s.rows(), 2u);
  ASSERT_EQ(s.cols(), 2u);
  EXPECT_FALSE(s.relaxed());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(s(i, j), testing::NaiveLocalSimilarity(da[i], db[j]), 1e-9);

  const SimilarityMatrix e = ComputeSimilarityMatrix(MakeFloatTemplate(da), MakeFloatTemplate({}));
  EXPECT_EQ(e.rows(), 2u);
  EXPECT_EQ(e.cols(), 0u);
}

TEST(SimilarityMatrix, SelfDiagonalDominates) {
  Rng rng(9);
  std::vector<DenseDescriptor> d;
  for (int i = 0; i < 8; ++i) d.push_back(RandomDense(rng, 6, MaskKind::kFull));
  const Template t = MakeFloatTemplate(d);
  const SimilarityMatrix s = ComputeSimilarityMatrix(t, t);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (i != j) ASSERT_LT(s(i, j), s(i, i));
}

SimilarityMatrix RandomMatrix(Rng& rng, std::size_t r, std::size_t c) {
  SimilarityMatrix s(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) s(i, j) = UniformReal(rng, -1, 2);
  return s;
}

TEST(Relax, MatchesNaiveIteration) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t na = UniformInt(rng, 1, 9), nb = UniformInt(rng, 1, 9);
    const MinutiaSet a = testing::RandomMinutiae(rng, na, 200, 200);
    const MinutiaSet b = testing::RandomMinutiae(rng, nb, 200, 200);
    const SimilarityMatrix s = RandomMatrix(rng, na, nb);
    MatchConfig cfg;
    const SimilarityMatrix got = Relax(s, a, b, cfg);
    const SimilarityMatrix want = testing::NaiveRelax(s, a, b, cfg);
    EXPECT_TRUE(got.relaxed());
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) ASSERT_NEAR(got(i, j), want(i, j), 1e-9) << trial;
  }
}

TEST(Relax, SingletonIsIdentity) {
  const SimilarityMatrix s(1, 1, 0.37);
  const SimilarityMatrix r = Relax(s, MinutiaSet({Minutia(1, 1, 0)}), MinutiaSet({Minutia(5, 5, 1)}));
  EXPECT_EQ(r(0, 0), 0.37);
}

TEST(Relax, AllEqualStaysAllEqual) {
  Rng rng(11);
  MatchConfig cfg;
  cfg.relax_sigma_distance = cfg.relax_sigma_direction = cfg.relax_sigma_radial = 1e9;
  const MinutiaSet a = testing::RandomMinutiae(rng, 6, 200, 200);
  const MinutiaSet b = testing::RandomMinutiae(rng, 8, 200, 200);
  const SimilarityMatrix r = Relax(SimilarityMatrix(6, 8, 0.5), a, b, cfg);
  for (double v : r.values()) ASSERT_NEAR(v, r(0, 0), 1e-12 * r(0, 0));
}

TEST(Relax, PlantedCorrespondenceGains) {
  Rng rng(12);
  const std::size_t n = 20;
  const MinutiaSet a = testing::RandomMinutiae(rng, n, 300, 300, 15);
  const MinutiaSet b = TransformMinutiae(a, Affine2D::Rigid(0.7, {150, 150}, {12, -8}));
  const SimilarityMatrix s = RandomMatrix(rng, n, n);
  const SimilarityMatrix r = Relax(s, a, b);
  double true_gain = 0, false_gain = 0;
  double min_true = INFINITY;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double g = r(i, j) - 0.6 * 0.6 * 0.6 * 0.6 * 0.6 * s(i, j);
      if (i == j) {
        true_gain += g / n;
        min_true = std::min(min_true, g);
      } else {
        false_gain += g / (n * (n - 1));
      }
    }
  EXPECT_GT(true_gain, 5 * false_gain);
  EXPECT_GT(min_true, false_gain);
}

TEST(Hungarian, SmallExamples) {
  EXPECT_EQ(LsaHungarian(SimilarityMatrix(1, 1, 3.0)), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}}));
  SimilarityMatrix d(3, 3, 0.1);
  for (int i = 0; i < 3; ++i) d(i, i) = 5;
  EXPECT_EQ(LsaHungarian(d), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 2}}));
  SimilarityMatrix r(2, 3);
  r(0, 0) = 1, r(0, 1) = 2, r(0, 2) = 3, r(1, 0) = 4, r(1, 1) = 5, r(1, 2) = 9;
  const auto p = LsaHungarian(r);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(r(p[0].first, p[0].second) + r(p[1].first, p[1].second), testing::BruteForceAssignment(r), 1e-12);
  EXPECT_TRUE(LsaHungarian(SimilarityMatrix(0, 4)).empty());
}

TEST(Hungarian, OptimalAgainstBruteForce) {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = UniformInt(rng, 1, 6), cols = UniformInt(rng, 1, 6);
    SimilarityMatrix s = RandomMatrix(rng, rows, cols);
    if (trial % 5 == 0)
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) s(i, j) = UniformInt(rng, 0, 2);  // ties
    const auto p = LsaHungarian(s);
    ASSERT_EQ(p.size(), std::min(rows, cols));
    std::vector<bool> ur(rows), uc(cols);
    double total = 0;
    for (std::size_t q = 0; q < p.size(); ++q) {
      ASSERT_FALSE(ur[p[q].first] || uc[p[q].second]);
      ur[p[q].first] = uc[p[q].second] = true;
      if (q > 0) ASSERT_LT(p[q - 1].first, p[q].first);
      total += s(p[q].first, p[q].second);
    }
    ASSERT_NEAR(total, testing::BruteForceAssignment(s), 1e-9) << trial;
    ASSERT_EQ(p, LsaHungarian(s));

    // greedy never beats it
    std::vector<bool> gr(rows), gc(cols);
    double greedy = 0;
    for (std::size_t step = 0; step < p.size(); ++step) {
      double best = -INFINITY;
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          if (!gr[i] && !gc[j] && s(i, j) > best) best = s(i, j), bi = i, bj = j;
      gr[bi] = gc[bj] = true;
      greedy += best;
    }
    ASSERT_GE(total, greedy - 1e-12);
  }
}

TEST(SelectNm, Examples) {
  EXPECT_EQ(SelectNm(20, 25), 8);
  EXPECT_EQ(SelectNm(1000, 1000), 12);
  EXPECT_EQ(SelectNm(10, 40), 4);
  EXPECT_EQ(SelectNm(0, 0), 4);
  int prev = 0;
  for (std::size_t n = 0; n < 100; ++n) {
    const int v = SelectNm(n, n + 3);
    ASSERT_GE(v, 4);
    ASSERT_LE(v, 12);
    ASSERT_GE(v, prev);
    prev = v;
  }
}

TEST(ScoreFromSimilarity, TopNmMean) {
  // n = 5 gives n_m = 4; without relaxation the diagonal is the assignment.
  SimilarityMatrix s(5, 5, -1.0);
  const double diag[] = {0.6, 0.9, 0.1, 0.7, 0.8};
  for (int i = 0; i < 5; ++i) s(i, i) = diag[i];
  Rng rng(14);
  const MinutiaSet a = testing::RandomMinutiae(rng, 5, 100, 100);
  MatchConfig cfg;
  cfg.relax_iterations = 0;
  const MatchResult r = ScoreFromSimilarity(s, a, a, cfg);
  EXPECT_EQ(r.nm, 4);
  ASSERT_EQ(r.pairs.size(), 4u);
  EXPECT_NEAR(r.score, 0.75, 1e-12);
  for (const auto& p : r.pairs) EXPECT_EQ(p.a, p.b);

  const MatchResult flat = ScoreFromSimilarity(SimilarityMatrix(5, 5, 0.3), a, a, cfg);
  EXPECT_NEAR(flat.score, 0.3, 1e-12);

  // shortfall: 2 assigned pairs with n_m = 4
  SimilarityMatrix tiny(2, 2, 0.0);
  tiny(0, 0) = 0.4, tiny(1, 1) = 0.2;
  MinutiaSet two({Minutia(0, 0, 0), Minutia(30, 0, 0)});
  const MatchResult sr = ScoreFromSimilarity(tiny, two, two, cfg);
  EXPECT_EQ(sr.pairs.size(), 2u);
  EXPECT_NEAR(sr.score, 0.3, 1e-12);
}

Template RandomTemplate(Rng& rng, std::size_t n) {
  const MinutiaSet ms = testing::RandomMinutiae(rng, n, 300, 300, 10);
  std::vector<DenseDescriptor> ds;
  for (std::size_t i = 0; i < n; ++i) {
    const DenseDescriptor r = RandomDense(rng, 6, MaskKind::kSoft);
    ds.emplace_back(6, std::vector<float>(r.features().begin(), r.features().end()), r.mask(), ms[i]);
  }
  return MakeFloatTemplate(ds);
}

TEST(MatchScore, EmptyRejected) {
  Rng rng(15);
  EXPECT_THROW(MatchScore(RandomTemplate(rng, 3), MakeFloatTemplate({})), Error);
}

TEST(Identify, SelfRanksFirstAndWorkersAgree) {
  Rng rng(16);
  std::vector<GalleryEntry> gallery;
  for (int g = 0; g < 12; ++g) gallery.push_back({"f" + std::to_string(g), RandomTemplate(rng, UniformInt(rng, 5, 25))});
  for (int probe = 0; probe < 12; probe += 3) {
    const auto serial = Identify(gallery[probe].templ, gallery, {}, 1);
    const auto parallel = Identify(gallery[probe].templ, gallery, {}, 4);
    ASSERT_EQ(serial.size(), gallery.size());
    EXPECT_EQ(serial[0].id, gallery[probe].id);
    for (std::size_t i = 0; i < serial.size(); ++i) {
      EXPECT_EQ(serial[i].index, parallel[i].index);
      EXPECT_EQ(serial[i].score, parallel[i].score);
      if (i > 0) EXPECT_GE(serial[i - 1].score, serial[i].score);
    }
  }
  const std::vector<GalleryEntry> one{gallery[0]};
  EXPECT_EQ(Identify(gallery[1].templ, one).size(), 1u);
  EXPECT_THROW(Identify(gallery[1].templ, {}), Error);
}

TEST(Identify, BinaryTemplatesWork) {
  Rng rng(17);
  std::vector<GalleryEntry> gallery;
  for (int g = 0; g < 6; ++g) gallery.push_back({std::to_string(g), MakeBinaryTemplate(RandomTemplate(rng, 15))});
  EXPECT_EQ(Identify(gallery[2].templ, gallery)[0].index, 2u);
}

}  // namespace
}  // namespace dmd
