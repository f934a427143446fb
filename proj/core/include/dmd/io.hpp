#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "dmd/core_model.hpp"

namespace dmd {

/// One minutia per line: `x y theta_degrees`. Blank lines and text after `#`
/// are ignored.
MinutiaSet ParseMinutiae(std::istream& in, const std::string& source_id = {});
void FormatMinutiae(std::ostream& out, const MinutiaSet& set);
MinutiaSet LoadMinutiae(const std::string& path);
void SaveMinutiae(const std::string& path, const MinutiaSet& set);

/// 8-bit grayscale PNG (color input is converted); values map to [0,1].
GrayImage LoadPng(const std::string& path);
void SavePng(const std::string& path, const Raster& image);

/// Pixels ≥ 128 are foreground.
SegMask LoadMaskPng(const std::string& path);

}  // namespace dmd
