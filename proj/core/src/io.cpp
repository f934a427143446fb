#include "dmd/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace dmd {

MinutiaSet ParseMinutiae(std::istream& in, const std::string& source_id) {
  std::vector<Minutia> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double x = 0.0, y = 0.0, deg = 0.0;
    if (!(fields >> x)) continue;
    std::string rest;
    if (!(fields >> y >> deg) || (fields >> rest)) {
      throw Error(Errc::kFormat, "minutiae line " + std::to_string(line_no) + ": expected `x y theta_degrees`");
    }
    out.emplace_back(x, y, deg * kPi / 180.0);
  }
  return MinutiaSet(std::move(out), source_id);
}

void FormatMinutiae(std::ostream& out, const MinutiaSet& set) {
  out << "# x y theta_degrees\n";
  char buf[96];
  for (const Minutia& m : set) {
    std::snprintf(buf, sizeof buf, "%.4f %.4f %.6f\n", m.x(), m.y(), m.theta() * 180.0 / kPi);
    out << buf;
  }
}

MinutiaSet LoadMinutiae(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  return ParseMinutiae(in, path);
}

void SaveMinutiae(const std::string& path, const MinutiaSet& set) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  FormatMinutiae(out, set);
  if (!out) throw Error(Errc::kIo, "write failed: " + path);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::vector<std::uint8_t> ReadGray8(const std::string& path, int& width, int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(Errc::kIo, "cannot read PNG " + path + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::kFormat, "bad PNG " + path + ": " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return pixels;
}

}  // namespace

GrayImage LoadPng(const std::string& path) {
  int w = 0, h = 0;
  const std::vector<std::uint8_t> px = ReadGray8(path, w, h);
  std::vector<double> values(px.size());
  std::transform(px.begin(), px.end(), values.begin(), [](std::uint8_t v) { return v / 255.0; });
  return GrayImage(w, h, std::move(values));
}

SegMask LoadMaskPng(const std::string& path) {
  int w = 0, h = 0;
  const std::vector<std::uint8_t> px = ReadGray8(path, w, h);
  std::vector<double> values(px.size());
  std::transform(px.begin(), px.end(), values.begin(), [](std::uint8_t v) { return v >= 128 ? 1.0 : 0.0; });
  return SegMask(w, h, std::move(values));
}

void SavePng(const std::string& path, const Raster& image) {
  if (image.empty()) throw Error(Errc::kInvalidArgument, "cannot save an empty image");
  std::vector<std::uint8_t> px(image.size());
  const auto values = image.values();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0));
  }
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.width());
  out.height = static_cast<png_uint_32>(image.height());
  out.format = PNG_FORMAT_GRAY;
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(Errc::kIo, "cannot write " + path);
  if (!png_image_write_to_stdio(&out, file.get(), 0, px.data(), 0, nullptr)) {
    throw Error(Errc::kIo, "PNG encoding failed for " + path + ": " + out.message);
  }
}

}  // namespace dmd
