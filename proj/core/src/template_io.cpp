#include "dmd/template_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace dmd {

MinutiaSet Template::Minutiae() const {
  std::vector<Minutia> out;
  out.reserve(size());
  if (format == TemplateFormat::kFloat) {
    for (const auto& d : dense) out.push_back(d.anchor());
  } else {
    for (const auto& d : binary) out.push_back(d.anchor());
  }
  return MinutiaSet(std::move(out));
}

Template MakeFloatTemplate(std::vector<DenseDescriptor> descriptors) {
  Template t;
  t.format = TemplateFormat::kFloat;
  if (!descriptors.empty()) t.channels = descriptors.front().channels();
  for (const auto& d : descriptors) {
    if (d.channels() != t.channels) throw Error(Errc::kShapeMismatch, "all descriptors must share C");
  }
  t.dense = std::move(descriptors);
  return t;
}

Template MakeBinaryTemplate(const Template& dense_template) {
  if (dense_template.format != TemplateFormat::kFloat) {
    throw Error(Errc::kInvalidArgument, "binarization needs a float template");
  }
  Template t;
  t.format = TemplateFormat::kBinary;
  t.channels = dense_template.channels;
  t.binary.reserve(dense_template.dense.size());
  for (const auto& d : dense_template.dense) t.binary.push_back(Binarize(d));
  return t;
}

std::size_t RecordPayloadBytes(TemplateFormat format, int channels) {
  const std::size_t features = static_cast<std::size_t>(2 * channels) * kGridCells;
  if (format == TemplateFormat::kFloat) return (features + kGridCells) * 4;
  return features / 8 + 8;
}

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void U8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void U16(std::uint16_t v) { Bytes(v, 2); }
  void U32(std::uint32_t v) { Bytes(v, 4); }
  void U64(std::uint64_t v) { Bytes(v, 8); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

 private:
  void Bytes(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t U8() { return static_cast<std::uint8_t>(Bytes(1)); }
  std::uint16_t U16() { return static_cast<std::uint16_t>(Bytes(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Bytes(4)); }
  std::uint64_t U64() { return Bytes(8); }
  float F32() { return std::bit_cast<float>(U32()); }

 private:
  std::uint64_t Bytes(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) throw Error(Errc::kFormat, "truncated template");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  std::istream& in_;
};

// Angles are stored as f32; a value that rounds up to 2π would re-normalize to
// 0 on load and break byte-exact round trips.
float StoredAngle(double theta) {
  const float f = static_cast<float>(theta);
  return static_cast<double>(f) >= kTwoPi ? 0.0f : f;
}

void WriteAnchor(Writer& w, const Minutia& m) {
  w.F32(static_cast<float>(m.x()));
  w.F32(static_cast<float>(m.y()));
  w.F32(StoredAngle(m.theta()));
}

Minutia ReadAnchor(Reader& r) {
  const float x = r.F32();
  const float y = r.F32();
  const float theta = r.F32();
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta)) {
    throw Error(Errc::kFormat, "non-finite anchor in template");
  }
  return Minutia(x, y, theta);
}

}  // namespace

void WriteTemplate(std::ostream& out, const Template& t) {
  if (t.channels < 1 || t.channels > 255) throw Error(Errc::kInvalidArgument, "C must fit in one byte");
  Writer w(out);
  out.write("DMD1", 4);
  w.U8(static_cast<std::uint8_t>(t.format));
  w.U8(static_cast<std::uint8_t>(t.channels));
  w.U16(0);
  w.U32(static_cast<std::uint32_t>(t.size()));
  if (t.format == TemplateFormat::kFloat) {
    for (const auto& d : t.dense) {
      if (d.channels() != t.channels) throw Error(Errc::kShapeMismatch, "descriptor C differs from template C");
      WriteAnchor(w, d.anchor());
      for (float v : d.features()) w.F32(v);
      for (float v : d.mask()) w.F32(v);
    }
  } else {
    for (const auto& d : t.binary) {
      if (d.channels() != t.channels) throw Error(Errc::kShapeMismatch, "descriptor C differs from template C");
      WriteAnchor(w, d.anchor());
      // Little-endian words put bit i of the channel at byte i/8, bit i%8.
      for (std::uint64_t word : d.feature_words()) w.U64(word);
      w.U64(d.mask_bits());
    }
  }
  if (!out) throw Error(Errc::kIo, "failed to write template");
}

Template ReadTemplate(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "DMD1", 4) != 0) throw Error(Errc::kFormat, "bad template magic");
  Reader r(in);
  const std::uint8_t format = r.U8();
  const std::uint8_t channels = r.U8();
  r.U16();
  const std::uint32_t count = r.U32();
  if (format > 1) throw Error(Errc::kFormat, "unknown template payload format");
  if (channels < 1) throw Error(Errc::kFormat, "template C must be >= 1");

  Template t;
  t.format = static_cast<TemplateFormat>(format);
  t.channels = channels;
  const std::size_t depth = 2u * channels;
  for (std::uint32_t i = 0; i < count; ++i) {
    const Minutia anchor = ReadAnchor(r);
    if (t.format == TemplateFormat::kFloat) {
      std::vector<float> features(depth * kGridCells);
      for (float& v : features) v = r.F32();
      std::array<float, kGridCells> mask{};
      for (float& v : mask) v = r.F32();
      t.dense.emplace_back(channels, std::move(features), mask, anchor);
    } else {
      std::vector<std::uint64_t> words(depth);
      for (auto& w : words) w = r.U64();
      const std::uint64_t mask = r.U64();
      t.binary.emplace_back(channels, std::move(words), mask, anchor);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(Errc::kFormat, "trailing bytes after template");
  return t;
}

std::vector<std::uint8_t> SerializeTemplate(const Template& t) {
  std::ostringstream out(std::ios::binary);
  WriteTemplate(out, t);
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

Template DeserializeTemplate(const std::vector<std::uint8_t>& bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  return ReadTemplate(in);
}

void SaveTemplate(const std::filesystem::path& path, const Template& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open " + path.string() + " for writing");
  WriteTemplate(out, t);
}

Template LoadTemplate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return ReadTemplate(in);
}

}  // namespace dmd
