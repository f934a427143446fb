#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "dmd/io.hpp"
#include "oracles.hpp"

namespace dmd {
namespace {

namespace fs = std::filesystem;

fs::path TempDir() {
  const fs::path dir = fs::temp_directory_path() / ("dmd_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(dir);
  return dir;
}

TEST(MinutiaeText, ParseAndFormat) {
  std::istringstream in("# header\n10 20 90\n\n  30.5 40 180  # trailing\n");
  const MinutiaSet s = ParseMinutiae(in, "id");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.source_id(), "id");
  EXPECT_NEAR(s[0].theta(), kPi / 2, 1e-12);
  EXPECT_EQ(s[1].x(), 30.5);
  std::istringstream bad("1 2\n");
  EXPECT_THROW(ParseMinutiae(bad), Error);
  std::istringstream junk("1 2 x\n");
  EXPECT_THROW(ParseMinutiae(junk), Error);
}

TEST(MinutiaeText, FileRoundTrip) {
  testing::Rng rng(1);
  const MinutiaSet s = testing::RandomMinutiae(rng, 25, 300, 300);
  const fs::path p = TempDir() / "m.txt";
  SaveMinutiae(p.string(), s);
  const MinutiaSet back = LoadMinutiae(p.string());
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(back[i].x(), s[i].x(), 1e-3);
    EXPECT_NEAR(back[i].y(), s[i].y(), 1e-3);
    EXPECT_NEAR(AngleDiff(back[i].theta(), s[i].theta()), 0.0, 1e-5);
  }
  EXPECT_THROW(LoadMinutiae((TempDir() / "missing.txt").string()), Error);
}

TEST(Png, RoundTripIs8Bit) {
  GrayImage img(37, 23, 0.0);
  for (int y = 0; y < 23; ++y)
    for (int x = 0; x < 37; ++x) img.at(x, y) = ((x * 7 + y * 13) % 256) / 255.0;
  const fs::path p = TempDir() / "a.png";
  SavePng(p.string(), img);
  const GrayImage back = LoadPng(p.string());
  ASSERT_EQ(back.width(), 37);
  ASSERT_EQ(back.height(), 23);
  for (std::size_t i = 0; i < img.values().size(); ++i) ASSERT_NEAR(back.values()[i], img.values()[i], 1e-12);

  SegMask m(8, 8, 0.0);
  m.at(3, 4) = 1.0;
  SavePng((TempDir() / "m.png").string(), m);
  EXPECT_EQ(LoadMaskPng((TempDir() / "m.png").string()), m);
  EXPECT_THROW(LoadPng((TempDir() / "nope.png").string()), Error);
}

}  // namespace
}  // namespace dmd
