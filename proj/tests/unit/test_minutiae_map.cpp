#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dmd/minutiae_map.hpp"
#include "oracles.hpp"

namespace dmd {
namespace {

using testing::Rng;
using testing::UniformReal;

// Direct evaluation of one minutia's heatmap.
double OracleValue(const Minutia& m, int c, int row, int col) {
  const double dx = col - m.x() / 2.0, dy = row - m.y() / 2.0;
  double dth = std::fmod(std::abs(NormalizeAngle(m.theta()) * 6.0 / (2 * kPi) - c), 6.0);
  dth = std::min(dth, 6.0 - dth);
  return std::exp(-(dx * dx + dy * dy) / 2.0 - dth * dth / 2.0);
}

TEST(MinutiaeMap, EmptySetIsZero) {
  const MinutiaeMap m = EncodeMinutiaeMap({});
  for (double v : m.values()) ASSERT_EQ(v, 0.0);
  EXPECT_TRUE(DecodeMinutiaeMap(m).empty());
}

TEST(MinutiaeMap, SingleMinutiaHandValues) {
  const MinutiaeMap m = EncodeMinutiaeMap(MinutiaSet({Minutia(64, 64, 0)}));
  EXPECT_EQ(m.channels(), 6);
  EXPECT_EQ(m.grid(), 64);
  EXPECT_NEAR(m.at(0, 32, 32), 1.0, 1e-12);
  EXPECT_NEAR(m.at(0, 32, 33), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(m.at(1, 32, 32), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(m.at(5, 32, 32), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(m.at(3, 32, 32), std::exp(-4.5), 1e-12);
}

TEST(MinutiaeMap, MatchesOracleAndStaysInRange) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Minutia mi(UniformReal(rng, 0, 127.9), UniformReal(rng, 0, 127.9), UniformReal(rng, -kPi, kPi));
    const MinutiaeMap m = EncodeMinutiaeMap(MinutiaSet({mi}));
    double peak = 0;
    for (int c = 0; c < 6; ++c)
      for (int r = 0; r < 64; ++r)
        for (int q = 0; q < 64; ++q) {
          ASSERT_NEAR(m.at(c, r, q), OracleValue(mi, c, r, q), 1e-9);
          peak = std::max(peak, m.at(c, r, q));
        }
    EXPECT_GE(peak, std::exp(-(0.25 + 0.25) / 2) * std::exp(-0.25 / 2) - 1e-12);
  }
}

TEST(MinutiaeMap, MaxCombinationAndPermutationInvariance) {
  const Minutia a(20, 20, 0.3), b(100, 100, 2.0);
  const MinutiaeMap ma = EncodeMinutiaeMap(MinutiaSet({a}));
  const MinutiaeMap mb = EncodeMinutiaeMap(MinutiaSet({b}));
  const MinutiaeMap ab = EncodeMinutiaeMap(MinutiaSet({a, b}));
  const MinutiaeMap ba = EncodeMinutiaeMap(MinutiaSet({b, a}));
  for (std::size_t i = 0; i < ab.values().size(); ++i) {
    ASSERT_EQ(ab.values()[i], std::max(ma.values()[i], mb.values()[i]));
    ASSERT_EQ(ab.values()[i], ba.values()[i]);
  }
}

TEST(MinutiaeMap, CircularContinuity) {
  const MinutiaeMap lo = EncodeMinutiaeMap(MinutiaSet({Minutia(64, 64, 359.0 * kPi / 180)}));
  const MinutiaeMap hi = EncodeMinutiaeMap(MinutiaSet({Minutia(64, 64, 1.0 * kPi / 180)}));
  // 2° is 1/30 channel; the Gaussian's slope never exceeds exp(-1/2).
  const double bound = std::exp(-0.5) / 30.0;
  for (std::size_t i = 0; i < lo.values().size(); ++i) ASSERT_LE(std::abs(lo.values()[i] - hi.values()[i]), bound);
}

TEST(MinutiaeMap, OutOfBoundsRejected) {
  EXPECT_THROW(EncodeMinutiaeMap(MinutiaSet({Minutia(128, 10, 0)})), Error);
  EXPECT_THROW(EncodeMinutiaeMap(MinutiaSet({Minutia(-0.5, 10, 0)})), Error);
}

TEST(MinutiaeMap, RoundTripRecoversMinutiae) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Minutia mi(UniformReal(rng, 8, 120), UniformReal(rng, 8, 120), UniformReal(rng, -kPi, kPi));
    const MinutiaSet out = DecodeMinutiaeMap(EncodeMinutiaeMap(MinutiaSet({mi})));
    ASSERT_EQ(out.size(), 1u) << trial;
    EXPECT_LT(Distance(out[0].position(), mi.position()), 1.0);
    EXPECT_LT(std::abs(AngleDiff(out[0].theta(), mi.theta())), 0.1);
  }
}

TEST(MinutiaeMap, TwoSeparatedMinutiaeBothRecovered) {
  const MinutiaSet in({Minutia(30, 40, 1.0), Minutia(90, 100, -2.0)});
  const MinutiaSet out = DecodeMinutiaeMap(EncodeMinutiaeMap(in));
  ASSERT_EQ(out.size(), 2u);
  for (const Minutia& m : in) {
    bool found = false;
    for (const Minutia& o : out)
      found |= Distance(o.position(), m.position()) < 1.0 && std::abs(AngleDiff(o.theta(), m.theta())) < 0.1;
    EXPECT_TRUE(found);
  }
}

}  // namespace
}  // namespace dmd
