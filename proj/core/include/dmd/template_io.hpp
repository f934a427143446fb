#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmd/descriptor.hpp"

namespace dmd {

enum class TemplateFormat : std::uint8_t { kFloat = 0, kBinary = 1 };

// A fingerprint template: one descriptor per minutia, all in the same format.
// Exactly one of `dense` / `binary` is populated, according to `format`.
struct Template {
  TemplateFormat format = TemplateFormat::kFloat;
  int channels = 6;
  std::vector<DenseDescriptor> dense;
  std::vector<BinaryDescriptor> binary;

  std::size_t size() const { return format == TemplateFormat::kFloat ? dense.size() : binary.size(); }
  MinutiaSet Minutiae() const;
};

Template MakeFloatTemplate(std::vector<DenseDescriptor> descriptors);
Template MakeBinaryTemplate(const Template& dense_template);

// DMD1 layout, little-endian:
//   "DMD1" | format u8 | C u8 | reserved u16 | count u32
//   per record: x f32 | y f32 | theta f32 (radians) | payload
//   float payload:  2C*64 f32 features, 64 f32 mask
//   binary payload: 2C*64 bits LSB-first in flattening order, 8 bytes mask bits
void WriteTemplate(std::ostream& out, const Template& t);
Template ReadTemplate(std::istream& in);

std::vector<std::uint8_t> SerializeTemplate(const Template& t);
Template DeserializeTemplate(const std::vector<std::uint8_t>& bytes);

void SaveTemplate(const std::filesystem::path& path, const Template& t);
Template LoadTemplate(const std::filesystem::path& path);

/// Payload bytes per record (excluding the 12-byte anchor).
std::size_t RecordPayloadBytes(TemplateFormat format, int channels);

}  // namespace dmd
