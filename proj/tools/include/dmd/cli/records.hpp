#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dmd/cli/run_config.hpp"
#include "dmd/synth.hpp"
#include "dmd/traingen.hpp"

namespace dmd::cli {

// What a synthetic record's sidecar stores: enough to regenerate the print
// and its ground truth exactly.
struct SynthRecord {
  std::string id;
  std::uint64_t seed = 0;  // master print seed; impressions of one finger share it
  SynthConfig synth;
  ImpressionRecipe recipe;
};

SynthRecord RecordFor(const RunConfig& cfg, std::uint64_t seed);
SynthFingerprint Regenerate(const SynthRecord& record);

nlohmann::json RecordToJson(const SynthRecord& record);
SynthRecord RecordFromJson(const nlohmann::json& j);
SynthRecord LoadRecord(const std::filesystem::path& path);

// An enrollable input: either a sidecar (exact ground truth) or a PNG with a
// minutiae file `<stem>.txt` and optional mask `<stem>_mask.png` next to it.
struct LoadedImpression {
  Impression impression;
  GroundTruth truth;
};

LoadedImpression LoadImpression(const std::filesystem::path& path, const std::filesystem::path& minutiae = {},
                                const std::filesystem::path& mask = {});

}  // namespace dmd::cli
