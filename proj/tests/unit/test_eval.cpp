#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dmd/error.hpp"
#include "dmd/eval.hpp"
#include "oracles.hpp"

namespace dmd {
namespace {

using testing::Rng;
using testing::UniformReal;

ProbeOutcome ProbeWithMateAt(std::size_t rank, std::size_t gallery) {
  ProbeOutcome p{"p", "mate", {}};
  for (std::size_t r = 1; r <= gallery; ++r) p.ranked_ids.push_back(r == rank ? "mate" : "x" + std::to_string(r));
  return p;
}

TEST(Cmc, Examples) {
  IdentificationRun perfect{{ProbeWithMateAt(1, 5), ProbeWithMateAt(1, 5)}};
  EXPECT_EQ(CmcCurve(perfect, 4), std::vector<double>(4, 1.0));

  IdentificationRun run{{ProbeWithMateAt(1, 6), ProbeWithMateAt(2, 6), ProbeWithMateAt(5, 6)}};
  const auto cmc = CmcCurve(run, 5);
  const std::vector<double> want{1.0 / 3, 2.0 / 3, 2.0 / 3, 2.0 / 3, 1.0};
  ASSERT_EQ(cmc.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(cmc[k], want[k], 1e-15);
  EXPECT_EQ(MateRank(run.probes[2]), 5u);

  IdentificationRun missing{{ProbeWithMateAt(9, 10), ProbeWithMateAt(0, 10)}};
  EXPECT_EQ(MateRank(missing.probes[1]), 0u);
  EXPECT_EQ(CmcCurve(missing, 5), std::vector<double>(5, 0.0));
  EXPECT_THROW(CmcCurve(IdentificationRun{}, 5), Error);
}

TEST(Det, Examples) {
  const ScoreSets s{{0.9, 0.8}, {0.3, 0.1}};
  const auto det = DetCurve(s);
  bool perfect = false;
  for (const auto& p : det) perfect |= p.fmr == 0.0 && p.fnmr == 0.0;
  EXPECT_TRUE(perfect);
  // threshold 0.5 lies between 0.3 and 0.8; the 0.8 point carries its rates
  for (const auto& p : det)
    if (p.threshold == 0.8) EXPECT_TRUE(p.fmr == 0.0 && p.fnmr == 0.0);
  EXPECT_THROW(DetCurve(ScoreSets{{}, {0.1}}), Error);
}

TEST(Det, ChanceLineAndMonotone) {
  Rng rng(1);
  ScoreSets s;
  for (int i = 0; i < 500; ++i) {
    const double v = UniformReal(rng, 0, 1);
    s.genuine.push_back(v);
    s.impostor.push_back(v);
  }
  const auto det = DetCurve(s);
  for (std::size_t i = 0; i < det.size(); ++i) {
    EXPECT_NEAR(det[i].fnmr, 1.0 - det[i].fmr, 1e-12);
    if (i > 0) {
      EXPECT_GE(det[i].fmr, det[i - 1].fmr);
      EXPECT_LE(det[i].fnmr, det[i - 1].fnmr);
    }
  }
}

TEST(TarAtFar, Examples) {
  EXPECT_EQ(TarAtFar({{0.9, 0.8}, {0.3, 0.1}}, 0.01), 1.0);
  const ScoreSets s{{0.9, 0.7, 0.5, 0.3}, {0.6, 0.4, 0.2, 0.1}};
  EXPECT_DOUBLE_EQ(TarAtFar(s, 0.25), 0.5);
  // far below 1/|impostor|: threshold above the largest impostor
  EXPECT_DOUBLE_EQ(TarAtFar(s, 0.001), 0.5);
  const ScoreSets tie{{0.6, 0.6, 0.5}, {0.6, 0.1}};
  EXPECT_DOUBLE_EQ(TarAtFar(tie, 0.1), 0.0);
  EXPECT_THROW(TarAtFar({{}, {0.1}}, 0.1), Error);
  EXPECT_THROW(TarAtFar(s, 0.0), Error);
}

TEST(TarAtFar, MonotoneAndTransformInvariant) {
  Rng rng(2);
  ScoreSets s;
  for (int i = 0; i < 300; ++i) s.genuine.push_back(UniformReal(rng, 0.3, 1.5));
  for (int i = 0; i < 2000; ++i) s.impostor.push_back(UniformReal(rng, 0.0, 0.8));
  ScoreSets t = s;
  for (double& v : t.genuine) v = std::exp(3 * v);
  for (double& v : t.impostor) v = std::exp(3 * v);
  double prev = -1;
  for (double far : {0.0005, 0.001, 0.01, 0.05, 0.1, 0.5}) {
    const double tar = TarAtFar(s, far);
    EXPECT_GE(tar, prev);
    EXPECT_EQ(tar, TarAtFar(t, far));
    prev = tar;
  }
}

TEST(Csv, Formats) {
  std::ostringstream cmc, det;
  WriteCmcCsv(cmc, {0.5, 1.0});
  EXPECT_EQ(cmc.str(), "rank,rate\n1,0.500000\n2,1.000000\n");
  WriteDetCsv(det, {{0.5, 0.25, 0.75}});
  EXPECT_EQ(det.str().substr(0, 10), "fmr,fnmr\n0");
}

}  // namespace
}  // namespace dmd
