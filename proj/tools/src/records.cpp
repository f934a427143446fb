#include "dmd/cli/records.hpp"

#include <fstream>

#include "dmd/error.hpp"
#include "dmd/io.hpp"

namespace dmd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename T>
T Field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::kFormat, std::string("record is missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::kFormat, std::string("record field '") + key + "' has the wrong type");
  }
}

}  // namespace

SynthRecord RecordFor(const RunConfig& cfg, std::uint64_t seed) {
  SynthRecord r;
  char id[32];
  std::snprintf(id, sizeof id, "s%06llu", static_cast<unsigned long long>(seed));
  r.id = id;
  r.seed = seed;
  r.synth = cfg.synth;
  const ImpressionConfig& imp = cfg.impression;
  r.recipe.distortion = cfg.distortion;
  r.recipe.distortion.seed = Mix(cfg.distortion.seed ^ Mix(seed) ^ Mix(Mix(imp.seed)));
  r.recipe.rotation = imp.rotation_deg * kPi / 180.0;
  r.recipe.shift = {imp.tx, imp.ty};
  r.recipe.crop = imp.crop;
  r.recipe.spurious = static_cast<std::size_t>(imp.spurious);
  r.recipe.seed = Mix(seed ^ Mix(imp.seed + 1));
  return r;
}

SynthFingerprint Regenerate(const SynthRecord& record) {
  return MakeImpression(SynthesizeFingerprint(record.seed, record.synth), record.recipe);
}

json RecordToJson(const SynthRecord& r) {
  return json{{"id", r.id},
              {"seed", r.seed},
              {"size", r.synth.size},
              {"min_period", r.synth.min_period},
              {"max_period", r.synth.max_period},
              {"minutia_spacing", r.synth.minutia_spacing},
              {"minutia_area", r.synth.minutia_area},
              {"border_margin", r.synth.border_margin},
              {"distortion", {{"magnitude", r.recipe.distortion.magnitude},
                              {"grid", r.recipe.distortion.grid},
                              {"seed", r.recipe.distortion.seed}}},
              {"rigid", {{"rotation", r.recipe.rotation}, {"tx", r.recipe.shift.x}, {"ty", r.recipe.shift.y}}},
              {"crop", r.recipe.crop},
              {"spurious", r.recipe.spurious},
              {"impression_seed", r.recipe.seed}};
}

SynthRecord RecordFromJson(const json& j) {
  SynthRecord r;
  r.id = Field<std::string>(j, "id");
  r.seed = Field<std::uint64_t>(j, "seed");
  r.synth.size = Field<int>(j, "size");
  r.synth.min_period = Field<double>(j, "min_period");
  r.synth.max_period = Field<double>(j, "max_period");
  r.synth.minutia_spacing = Field<double>(j, "minutia_spacing");
  r.synth.minutia_area = Field<double>(j, "minutia_area");
  r.synth.border_margin = Field<int>(j, "border_margin");
  const json d = Field<json>(j, "distortion");
  r.recipe.distortion = {Field<double>(d, "magnitude"), Field<int>(d, "grid"), Field<std::uint64_t>(d, "seed")};
  const json rigid = Field<json>(j, "rigid");
  r.recipe.rotation = Field<double>(rigid, "rotation");
  r.recipe.shift = {Field<double>(rigid, "tx"), Field<double>(rigid, "ty")};
  r.recipe.crop = Field<double>(j, "crop");
  r.recipe.spurious = Field<std::size_t>(j, "spurious");
  r.recipe.seed = Field<std::uint64_t>(j, "impression_seed");
  return r;
}

SynthRecord LoadRecord(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open record " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::kFormat, "record " + path.string() + " is not valid JSON");
  }
  return RecordFromJson(j);
}

LoadedImpression LoadImpression(const fs::path& path, const fs::path& minutiae, const fs::path& mask) {
  if (path.extension() == ".json") {
    const SynthFingerprint fp = Regenerate(LoadRecord(path));
    return {{fp.image, fp.minutiae, fp.mask}, GroundTruthOf(fp)};
  }
  const GrayImage image = LoadPng(path.string());
  const fs::path stem = path.parent_path() / path.stem();
  const fs::path mnt = minutiae.empty() ? fs::path(stem.string() + ".txt") : minutiae;
  const MinutiaSet ms = LoadMinutiae(mnt.string());
  fs::path mask_path = mask;
  if (mask_path.empty() && fs::exists(stem.string() + "_mask.png")) mask_path = stem.string() + "_mask.png";
  const SegMask m = mask_path.empty() ? SegMask(image.width(), image.height(), 1.0) : LoadMaskPng(mask_path.string());
  if (m.width() != image.width() || m.height() != image.height()) {
    throw Error(Errc::kShapeMismatch, "mask does not match the image");
  }
  return {{image, ms, m}, EstimateGroundTruth(image, ms, m)};
}

}  // namespace dmd::cli
